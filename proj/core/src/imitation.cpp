#include "ipl/imitation.hpp"

#include <fstream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ipl::imit {

void DemoDataset::validate() const {
  if (states.rank() != 2 || actions.rank() != 2 || states.rows() == 0) {
    throw std::invalid_argument("demo dataset must hold a non-empty [N x n] / [N x m] pair");
  }
  if (states.rows() != actions.rows()) throw std::invalid_argument("demo dataset states and actions differ in length");
}

std::pair<Tensor, Tensor> DemoDataset::sample(std::size_t batch, Rng& rng) const {
  const std::size_t n = states.cols();
  const std::size_t m = actions.cols();
  Tensor s({batch, n});
  Tensor a({batch, m});
  for (std::size_t k = 0; k < batch; ++k) {
    const std::size_t i = rng.index(size());
    std::copy_n(states.values().begin() + static_cast<std::ptrdiff_t>(i * n), n,
                s.values().begin() + static_cast<std::ptrdiff_t>(k * n));
    std::copy_n(actions.values().begin() + static_cast<std::ptrdiff_t>(i * m), m,
                a.values().begin() + static_cast<std::ptrdiff_t>(k * m));
  }
  return {s, a};
}

Expert axis_expert(const env::EnvSpec& spec, double sigma, std::uint64_t seed) {
  auto state = std::make_shared<env::AxisExpert>(spec.axis.bound, sigma, seed);
  std::ostringstream desc;
  desc << "axis-expert(bound=" << spec.axis.bound << ",sigma=" << sigma << ")";
  return {desc.str(), [state] { state->begin_episode(); },
          [state](const std::vector<double>& obs) { return (*state)(obs); }};
}

DemoDataset generate_expert_dataset(const env::EnvSpec& spec, const Expert& expert, std::size_t episodes,
                                    std::uint64_t seed) {
  if (episodes == 0) throw std::invalid_argument("generate_expert_dataset: need at least one episode");
  env::Env environment(spec, seed);
  std::vector<double> s;
  std::vector<double> a;
  const auto record = [&](const std::vector<double>& obs) {
    std::vector<double> raw = expert.act(obs);
    a.insert(a.end(), raw.begin(), raw.end());
    return raw;
  };
  for (std::size_t e = 0; e < episodes; ++e) {
    if (expert.begin) expert.begin();
    const env::Trajectory traj = env::rollout(environment, record);
    for (const auto& step : traj.steps) s.insert(s.end(), step.s.begin(), step.s.end());
  }
  DemoDataset out;
  const std::size_t rows = s.size() / spec.state_dim;
  out.states = Tensor({rows, spec.state_dim}, std::move(s));
  out.actions = Tensor({rows, spec.action_dim}, std::move(a));
  out.expert = expert.description;
  out.seed = seed;
  out.episodes = episodes;
  return out;
}

void save_dataset(const DemoDataset& data, const std::filesystem::path& csv_path) {
  data.validate();
  std::ofstream out(csv_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + csv_path.string() + "' for writing");
  out.precision(17);
  const std::size_t n = data.states.cols();
  const std::size_t m = data.actions.cols();
  for (std::size_t i = 0; i < n; ++i) out << (i ? "," : "") << "s" << i;
  for (std::size_t i = 0; i < m; ++i) out << ",a" << i;
  out << '\n';
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t i = 0; i < n; ++i) out << (i ? "," : "") << data.states.at(r, i);
    for (std::size_t i = 0; i < m; ++i) out << ',' << data.actions.at(r, i);
    out << '\n';
  }
  std::ofstream meta(csv_path.string() + ".meta.json", std::ios::trunc);
  meta << nlohmann::json{{"expert", data.expert},   {"seed", data.seed},         {"episodes", data.episodes},
                         {"count", data.size()},    {"state_dim", n},            {"action_dim", m}}
              .dump(2)
       << '\n';
  if (!out || !meta) throw std::runtime_error("failed writing dataset '" + csv_path.string() + "'");
}

DemoDataset load_dataset(const std::filesystem::path& csv_path) {
  std::ifstream meta_in(csv_path.string() + ".meta.json");
  if (!meta_in) throw std::runtime_error("missing dataset metadata for '" + csv_path.string() + "'");
  const nlohmann::json meta = nlohmann::json::parse(meta_in);
  const auto n = meta.at("state_dim").get<std::size_t>();
  const auto m = meta.at("action_dim").get<std::size_t>();
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open '" + csv_path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<double> s;
  std::vector<double> a;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      (col < n ? s : a).push_back(std::stod(cell));
      ++col;
    }
    if (col != n + m) throw std::runtime_error("dataset row has " + std::to_string(col) + " columns");
  }
  DemoDataset out;
  const std::size_t rows = s.size() / n;
  out.states = Tensor({rows, n}, std::move(s));
  out.actions = Tensor({rows, m}, std::move(a));
  out.expert = meta.at("expert").get<std::string>();
  out.seed = meta.at("seed").get<std::uint64_t>();
  out.episodes = meta.at("episodes").get<std::size_t>();
  out.validate();
  return out;
}

Tensor augment_actions(const Tensor& actions, std::size_t extra, Rng& rng) {
  if (extra == 0) return actions;
  const std::size_t rows = actions.rows();
  const std::size_t m = actions.cols();
  Tensor out({rows, m + extra});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < m; ++j) out.values()[r * (m + extra) + j] = actions.at(r, j);
    for (std::size_t j = 0; j < extra; ++j) out.values()[r * (m + extra) + m + j] = rng.normal();
  }
  return out;
}

double bc_mle_update(StochasticPolicy& policy, nn::Adam& opt, const Tensor& states, const Tensor& actions) {
  if (states.rows() == 0) throw std::invalid_argument("bc_mle_update: empty batch");
  ad::Graph g;
  const nn::BoundParams p = nn::bind(g, policy.params());
  const Var nll = ad::neg(ad::mean(policy.log_prob(p, g.constant(states), g.constant(actions))));
  const double value = nll.value().item();
  opt.step(policy.params(), p.gradients(g.backward(nll)));
  return value;
}

GanReport gan_imitation_update(nbp::NoisyMlpPolicy& policy, ent::DensityClassifier& disc, nn::Adam& g_opt,
                               nn::Adam& d_opt, const Tensor& expert_states, const Tensor& expert_actions, Rng& rng) {
  if (expert_states.rows() == 0) throw std::invalid_argument("gan_imitation_update: empty batch");
  GanReport report;
  {
    const Tensor generated = policy.act(expert_states, rng);
    ad::Graph g;
    const nn::BoundParams dp = nn::bind(g, disc.params());
    const Var s = g.constant(expert_states);
    const Var loss =
        ent::classifier_loss(disc.logits(dp, s, g.constant(expert_actions)), disc.logits(dp, s, g.constant(generated)));
    report.d_loss = loss.value().item();
    d_opt.step(disc.params(), dp.gradients(g.backward(loss)));
  }
  {
    ad::Graph g;
    const nn::BoundParams pp = nn::bind(g, policy.params());
    const Var s = g.constant(expert_states);
    const Var a = policy.sample(pp, s, policy.draw_noise(rng, expert_states.rows()));
    const Var logits = disc.logits(nn::bind(g, disc.params(), false), s, a);
    const Var loss = ad::mean(ad::softplus(ad::neg(logits)));
    report.g_loss = loss.value().item();
    g_opt.step(policy.params(), pp.gradients(g.backward(loss)));
  }
  return report;
}

void train_bc(StochasticPolicy& policy, const DemoDataset& data, const ImitationConfig& config, rl::MetricLog* log) {
  data.validate();
  Rng rng(config.seed);
  nn::Adam opt(nn::AdamConfig{config.lr});
  for (std::size_t step = 1; step <= config.steps; ++step) {
    auto [s, a] = data.sample(config.batch, rng);
    const double nll = bc_mle_update(policy, opt, s, augment_actions(a, config.augment, rng));
    if (log != nullptr && config.log_interval > 0 && step % config.log_interval == 0) {
      rl::MetricRecord rec;
      rec.step = step;
      rec.extra.emplace_back("nll", nll);
      log->append(rec);
    }
  }
}

void train_gan(nbp::NoisyMlpPolicy& policy, ent::DensityClassifier& disc, const DemoDataset& data,
               const ImitationConfig& config, rl::MetricLog* log) {
  data.validate();
  Rng rng(config.seed);
  nn::Adam g_opt(nn::AdamConfig{config.lr});
  nn::Adam d_opt(nn::AdamConfig{config.d_lr});
  for (std::size_t step = 1; step <= config.steps; ++step) {
    auto [s, a] = data.sample(config.batch, rng);
    const GanReport r = gan_imitation_update(policy, disc, g_opt, d_opt, s, a, rng);
    if (log != nullptr && config.log_interval > 0 && step % config.log_interval == 0) {
      rl::MetricRecord rec;
      rec.step = step;
      rec.classifier_loss = r.d_loss;
      rec.extra.emplace_back("g_loss", r.g_loss);
      log->append(rec);
    }
  }
}

Coverage mode_coverage(const std::vector<env::Trajectory>& trajectories, const std::vector<ModeDescriptor>& modes) {
  Coverage out;
  out.fractions.assign(modes.size(), 0.0);
  if (trajectories.empty()) return out;
  double other = 0.0;
  for (const auto& t : trajectories) {
    bool matched = false;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      if (modes[i](t)) {
        out.fractions[i] += 1.0;
        matched = true;
        break;
      }
    }
    if (!matched) other += 1.0;
  }
  const double n = static_cast<double>(trajectories.size());
  for (double& f : out.fractions) f /= n;
  out.other = other / n;
  return out;
}

std::vector<ModeDescriptor> axis_modes(double bound) {
  return {[bound](const env::Trajectory& t) { return !t.final_state.empty() && t.final_state[0] >= bound; },
          [bound](const env::Trajectory& t) { return !t.final_state.empty() && t.final_state[0] <= -bound; }};
}

}  // namespace ipl::imit
