#include "ipl/entropy_estimator.hpp"

#include <algorithm>
#include <cmath>

namespace ipl::ent {

double ActionBox::log_volume() const {
  double v = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) v += std::log(high[i] - low[i]);
  return v;
}

void ActionBox::validate() const {
  if (low.empty() || low.size() != high.size()) throw std::invalid_argument("action box needs matching non-empty bounds");
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!(std::isfinite(low[i]) && std::isfinite(high[i]) && low[i] < high[i])) {
      throw std::invalid_argument("action box bounds must be finite with low < high");
    }
  }
}

Tensor ActionBox::uniform(std::size_t rows, Rng& rng) const {
  Tensor out({rows, dim()});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < dim(); ++j) out.values()[r * dim() + j] = rng.uniform(low[j], high[j]);
  }
  return out;
}

Tensor ActionBox::clip(const Tensor& actions) const {
  Tensor out = actions;
  const std::size_t m = dim();
  if (actions.size() % m != 0) throw ShapeError("ActionBox::clip: width mismatch");
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = std::clamp(out.values()[i], low[i % m], high[i % m]);
  return out;
}

DensityClassifier::DensityClassifier(std::size_t state_dim, ActionBox box, std::vector<std::size_t> hidden,
                                     std::uint64_t seed)
    : state_dim_(state_dim), box_(std::move(box)) {
  box_.validate();
  std::vector<std::size_t> widths{state_dim_ + box_.dim()};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  body_ = nn::MlpSpec{widths, nn::Activation::Relu, nn::Activation::Identity};
  params_ = nn::init_params(body_, seed);
}

Var DensityClassifier::logits(const nn::BoundParams& p, Var states, Var actions) const {
  return nn::mlp_forward(p, body_, ad::concat({states, actions}));
}

Tensor DensityClassifier::logit_values(const Tensor& states, const Tensor& actions) const {
  ad::Graph g;
  return logits(nn::bind(g, params_, false), g.constant(states), g.constant(actions)).value();
}

Var classifier_loss(Var positive_logits, Var negative_logits) {
  return ad::add(ad::mean(ad::softplus(ad::neg(positive_logits))), ad::mean(ad::softplus(negative_logits)));
}

double classifier_step(DensityClassifier& clf, nn::Adam& opt, const Tensor& states, const Tensor& policy_actions,
                       Rng& rng) {
  const Tensor negatives = clf.box().uniform(states.rows(), rng);
  ad::Graph g;
  const nn::BoundParams p = nn::bind(g, clf.params(), true);
  const Var s = g.constant(states);
  const Var loss = classifier_loss(clf.logits(p, s, g.constant(policy_actions)), clf.logits(p, s, g.constant(negatives)));
  const double value = loss.value().item();
  opt.step(clf.params(), p.gradients(g.backward(loss)));
  return value;
}

double entropy_from_logits(const Tensor& logits, double log_volume) {
  double sum = 0.0;
  for (double c : logits.values()) sum -= c;
  return sum / static_cast<double>(logits.size()) + log_volume;
}

Var entropy_surrogate(const DensityClassifier& clf, Var states, Var actions) {
  const nn::BoundParams frozen = nn::bind(*actions.graph, clf.params(), false);
  return ad::neg(ad::mean(clf.logits(frozen, states, actions)));
}

}  // namespace ipl::ent
