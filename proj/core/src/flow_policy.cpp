#include "ipl/flow_policy.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ipl::flow {

void FlowSpec::validate() const {
  if (action_dim < 2) throw std::invalid_argument("flow policy needs action_dim >= 2");
  if (state_dim < 1) throw std::invalid_argument("flow policy needs state_dim >= 1");
  if (layers < 1) throw std::invalid_argument("flow policy needs at least one coupling layer");
  if (hidden < 1) throw std::invalid_argument("flow policy hidden width must be positive");
  for (auto w : embed_hidden) {
    if (w == 0) throw std::invalid_argument("flow policy embedding widths must be positive");
  }
}

std::string FlowSpec::describe() const {
  std::ostringstream out;
  out << "flow(n=" << state_dim << ",m=" << action_dim << ",K=" << layers << ",k=" << hidden
      << ",st_hidden_layers=" << st_hidden_layers << ",embed=";
  for (std::size_t i = 0; i < embed_hidden.size(); ++i) out << (i ? "-" : "") << embed_hidden[i];
  out << ",scale_bound=" << scale_bound << ")";
  return out.str();
}

CouplingLayer make_layer(const FlowSpec& spec, std::size_t index) {
  CouplingLayer layer;
  layer.m = spec.action_dim;
  layer.d = spec.split();
  layer.reverse = index % 2 == 1;
  layer.scale_bound = spec.scale_bound;
  std::vector<std::size_t> widths{layer.d};
  for (std::size_t i = 0; i < spec.st_hidden_layers; ++i) widths.push_back(spec.hidden);
  widths.push_back(layer.m - layer.d);
  layer.s_net = nn::MlpSpec{widths, nn::Activation::Tanh, nn::Activation::Identity};
  layer.t_net = layer.s_net;
  return layer;
}

namespace {

Tensor reversal(std::size_t m) {
  Tensor j({m, m});
  for (std::size_t i = 0; i < m; ++i) j.values()[i * m + (m - 1 - i)] = 1.0;
  return j;
}

Var permute(const CouplingLayer& layer, Var x) {
  if (!layer.reverse) return x;
  return ad::matmul(x, x.graph->constant(reversal(layer.m)));
}

std::pair<Var, Var> scale_translate(const CouplingLayer& layer, const nn::BoundParams& p, Var head) {
  Var s = nn::mlp_forward(p.sub("s."), layer.s_net, head);
  if (layer.scale_bound > 0.0) s = ad::scale(ad::tanh(ad::scale(s, 1.0 / layer.scale_bound)), layer.scale_bound);
  return {s, nn::mlp_forward(p.sub("t."), layer.t_net, head)};
}

void check_width(Var x, std::size_t m, const char* what) {
  if (x.value().rank() != 2 || x.value().cols() != m) {
    throw ShapeError(std::string(what) + ": expected [B x " + std::to_string(m) + "], got " + shape_string(x.shape()));
  }
}

}  // namespace

CouplingResult coupling_forward(const CouplingLayer& layer, const nn::BoundParams& p, Var x) {
  check_width(x, layer.m, "coupling_forward");
  const Var xp = permute(layer, x);
  const Var head = ad::slice(xp, 0, layer.d);
  const Var tail = ad::slice(xp, layer.d, layer.m);
  const auto [s, t] = scale_translate(layer, p, head);
  const Var y = ad::concat({head, ad::add(ad::mul(tail, ad::exp(s)), t)});
  return {y, ad::sum_rows(s)};
}

CouplingResult coupling_inverse(const CouplingLayer& layer, const nn::BoundParams& p, Var y) {
  check_width(y, layer.m, "coupling_inverse");
  const Var head = ad::slice(y, 0, layer.d);
  const Var tail = ad::slice(y, layer.d, layer.m);
  const auto [s, t] = scale_translate(layer, p, head);
  const Var xp = ad::concat({head, ad::mul(ad::sub(tail, t), ad::exp(ad::neg(s)))});
  // the reversal is its own inverse
  return {permute(layer, xp), ad::sum_rows(s)};
}

Var standard_normal_logpdf(Var eps) {
  const double m = static_cast<double>(eps.value().cols());
  const double c = -0.5 * m * std::log(2.0 * std::numbers::pi);
  return ad::add(ad::scale(ad::sum_rows(ad::square(eps)), -0.5), eps.graph->scalar(c));
}

FlowPolicy::FlowPolicy(FlowSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  build();
  Rng rng(seed);
  params_ = nn::ParamSet(spec_.describe());
  params_.merge("embed.", nn::init_params(embed_, rng.split().engine()()));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i) + ".";
    params_.merge(prefix + "s.", nn::init_params(layers_[i].s_net, rng.split().engine()()));
    params_.merge(prefix + "t.", nn::init_params(layers_[i].t_net, rng.split().engine()()));
  }
}

FlowPolicy::FlowPolicy(FlowSpec spec, nn::ParamSet params) : spec_(std::move(spec)), params_(std::move(params)) {
  build();
  if (params_.spec() != spec_.describe()) {
    throw std::invalid_argument("flow parameters were produced by '" + params_.spec() + "', expected '" +
                                spec_.describe() + "'");
  }
  const FlowPolicy reference(spec_, 0);
  for (const auto& [name, t] : reference.params()) {
    if (!params_.contains(name) || params_.at(name).shape() != t.shape()) {
      throw std::invalid_argument("flow parameters lack a compatible '" + name + "'");
    }
  }
  if (params_.size() != reference.params().size()) throw std::invalid_argument("flow parameters contain extra entries");
}

void FlowPolicy::build() {
  spec_.validate();
  std::vector<std::size_t> widths{spec_.state_dim};
  widths.insert(widths.end(), spec_.embed_hidden.begin(), spec_.embed_hidden.end());
  widths.push_back(spec_.action_dim);
  embed_ = nn::MlpSpec{widths, nn::Activation::Tanh, nn::Activation::Identity};
  layers_.clear();
  for (std::size_t i = 0; i < spec_.layers; ++i) layers_.push_back(make_layer(spec_, i));
}

PolicySample FlowPolicy::sample(const nn::BoundParams& p, Var states, const Tensor& noise) const {
  check_width(states, spec_.state_dim, "flow sample states");
  ad::Graph& g = *states.graph;
  const Var eps = g.constant(noise);
  check_width(eps, spec_.action_dim, "flow sample noise");
  if (noise.rows() != states.value().rows()) throw ShapeError("flow sample: noise and state batches differ");

  CouplingResult r = coupling_forward(layers_[0], p.sub("layer0."), eps);
  Var h = ad::add(r.y, nn::mlp_forward(p.sub("embed."), embed_, states));
  Var logdet = r.logdet;
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    r = coupling_forward(layers_[i], p.sub("layer" + std::to_string(i) + "."), h);
    h = r.y;
    logdet = ad::add(logdet, r.logdet);
  }
  return {h, ad::sub(standard_normal_logpdf(eps), logdet)};
}

Var FlowPolicy::invert(const nn::BoundParams& p, Var states, Var actions, Var* logdet_total) const {
  check_width(states, spec_.state_dim, "flow invert states");
  check_width(actions, spec_.action_dim, "flow invert actions");
  Var h = actions;
  Var logdet;
  bool have = false;
  auto accumulate = [&](Var ld) {
    logdet = have ? ad::add(logdet, ld) : ld;
    have = true;
  };
  for (std::size_t i = layers_.size(); i-- > 1;) {
    const CouplingResult r = coupling_inverse(layers_[i], p.sub("layer" + std::to_string(i) + "."), h);
    h = r.y;
    accumulate(r.logdet);
  }
  h = ad::sub(h, nn::mlp_forward(p.sub("embed."), embed_, states));
  const CouplingResult r = coupling_inverse(layers_[0], p.sub("layer0."), h);
  accumulate(r.logdet);
  if (logdet_total != nullptr) *logdet_total = logdet;
  return r.y;
}

Var FlowPolicy::log_prob(const nn::BoundParams& p, Var states, Var actions) const {
  Var logdet;
  const Var eps = invert(p, states, actions, &logdet);
  return ad::sub(standard_normal_logpdf(eps), logdet);
}

std::pair<double, double> entropy_monte_carlo(const StochasticPolicy& policy, const Tensor& state, std::size_t samples,
                                              std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("entropy_monte_carlo: need at least one sample");
  Rng rng(seed);
  constexpr std::size_t kChunk = 4096;
  const Tensor row = state.rank() == 2 ? state : state.reshaped({1, state.size()});
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t done = 0; done < samples;) {
    const std::size_t b = std::min(kChunk, samples - done);
    const Tensor noise = rng.normal_tensor({b, policy.noise_dim()});
    ad::Graph g;
    const auto bp = nn::bind(g, policy.params(), false);
    const Tensor logp = policy.sample(bp, g.constant(row.repeat_rows(b)), noise).logp.value();
    for (double v : logp.values()) {
      sum += -v;
      sq += v * v;
    }
    done += b;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace ipl::flow
