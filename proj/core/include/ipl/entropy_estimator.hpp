#pragma once

#include <cstdint>

#include "ipl/adam.hpp"
#include "ipl/mlp.hpp"

namespace ipl::ent {

/// Axis-aligned action box.
struct ActionBox {
  std::vector<double> low;
  std::vector<double> high;

  std::size_t dim() const noexcept { return low.size(); }
  double log_volume() const;
  void validate() const;
  /// B rows drawn uniformly over the box.
  Tensor uniform(std::size_t rows, Rng& rng) const;
  /// Componentwise clamp of each row.
  Tensor clip(const Tensor& actions) const;
};

/// Logistic classifier c(s, a) separating policy actions (label 1) from
/// uniform actions over the box (label 0). At the optimum
/// c(s, a) = log(pi(a|s) * |A|).
class DensityClassifier {
public:
  DensityClassifier(std::size_t state_dim, ActionBox box, std::vector<std::size_t> hidden, std::uint64_t seed);

  const nn::MlpSpec& body() const noexcept { return body_; }
  const ActionBox& box() const noexcept { return box_; }
  std::size_t state_dim() const noexcept { return state_dim_; }
  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }

  /// [B x 1] logits of concat(states, actions).
  Var logits(const nn::BoundParams& p, Var states, Var actions) const;
  Tensor logit_values(const Tensor& states, const Tensor& actions) const;

private:
  std::size_t state_dim_;
  ActionBox box_;
  nn::MlpSpec body_;
  nn::ParamSet params_;
};

/// mean softplus(-c_pos) + mean softplus(c_neg): binary cross-entropy with
/// policy samples as positives and uniform samples as negatives.
Var classifier_loss(Var positive_logits, Var negative_logits);

/// One Adam step on the classifier; negatives are fresh uniform actions at
/// the positive states. Returns the loss before the step.
double classifier_step(DensityClassifier& clf, nn::Adam& opt, const Tensor& states, const Tensor& policy_actions,
                       Rng& rng);

/// mean(-c) + log|A| over logits of policy samples.
double entropy_from_logits(const Tensor& logits, double log_volume);

/// -mean(c(s, a)) with the classifier frozen, so gradients reach only the
/// actions and whatever produced them. Adding log|A| is left to reporting.
Var entropy_surrogate(const DensityClassifier& clf, Var states, Var actions);

}  // namespace ipl::ent
