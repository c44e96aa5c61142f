#include "ipl/offpolicy.hpp"

#include "ipl/checkpoint.hpp"

namespace ipl::rl {

Critic::Critic(std::size_t state_dim, std::size_t action_dim, std::uint64_t seed)
    : spec_{{state_dim + action_dim, 64, 64, 1}, nn::Activation::Relu, nn::Activation::Identity},
      params_(nn::init_params(spec_, seed)) {}

Var Critic::forward(const nn::BoundParams& p, Var states, Var actions) const {
  return nn::mlp_forward(p, spec_, ad::concat({states, actions}));
}

namespace {

Var td_loss_graph(ad::Graph& g, const Critic& critic, const nn::BoundParams& live, const nn::ParamSet& target_critic,
                  const Tensor& next_actions, const Batch& batch, double gamma) {
  const Var q = critic.forward(live, g.constant(batch.s), g.constant(batch.a));
  const Tensor q_next =
      critic.forward(nn::bind(g, target_critic, false), g.constant(batch.s_next), g.constant(next_actions)).value();
  Tensor y = batch.r;
  for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] += gamma * (1.0 - batch.done.values()[i]) * q_next.values()[i];
  if (!y.all_finite()) throw DomainError("TD target is not finite");
  return ad::mean(ad::square(ad::sub(q, g.constant(y))));
}

}  // namespace

double td_loss(const Critic& critic, const nn::ParamSet& target_critic, const Tensor& next_actions, const Batch& batch,
               double gamma) {
  ad::Graph g;
  return td_loss_graph(g, critic, nn::bind(g, critic.params(), false), target_critic, next_actions, batch, gamma)
      .value()
      .item();
}

double td_critic_update(Critic& critic, nn::Adam& opt, const nbp::NoisyMlpPolicy& target_policy,
                        const nn::ParamSet& target_critic, const Batch& batch, double gamma, Rng& rng,
                        double max_grad_norm) {
  const Tensor next_actions = target_policy.act(batch.s_next, rng);
  ad::Graph g;
  const nn::BoundParams live = nn::bind(g, critic.params());
  const Var loss = td_loss_graph(g, critic, live, target_critic, next_actions, batch, gamma);
  nn::GradMap grads = live.gradients(g.backward(loss));
  if (max_grad_norm > 0.0) nn::clip_global_norm(grads, max_grad_norm);
  opt.step(critic.params(), grads);
  return loss.value().item();
}

PolicyUpdateReport pathwise_policy_update(nbp::NoisyMlpPolicy& policy, nn::Adam& opt, const Critic& critic,
                                          const ent::DensityClassifier& clf, const Tensor& states, double beta,
                                          Rng& rng, double max_grad_norm) {
  ad::Graph g;
  const nn::BoundParams p = nn::bind(g, policy.params());
  const Var s = g.constant(states);
  const Var a = policy.sample(p, s, policy.draw_noise(rng, states.rows()));
  const Var q = ad::mean(critic.forward(nn::bind(g, critic.params(), false), s, a));
  Var objective = q;
  Var entropy;
  if (beta > 0.0) {
    entropy = ent::entropy_surrogate(clf, s, a);
    objective = ad::add(q, ad::scale(entropy, beta));
  }
  const Var loss = ad::neg(objective);
  nn::GradMap grads = p.gradients(g.backward(loss));
  if (max_grad_norm > 0.0) nn::clip_global_norm(grads, max_grad_norm);
  opt.step(policy.params(), grads);
  PolicyUpdateReport report;
  report.q_mean = q.value().item();
  report.entropy_surrogate = entropy.valid() ? entropy.value().item() : 0.0;
  report.loss = loss.value().item();
  return report;
}

namespace {
ent::ActionBox box_of(const env::EnvSpec& spec) { return {spec.action_low, spec.action_high}; }

nbp::NbpSpec aligned(nbp::NbpSpec spec, const env::EnvSpec& env) {
  spec.state_dim = env.state_dim;
  spec.action_dim = env.action_dim;
  spec.action_low = env.action_low;
  spec.action_high = env.action_high;
  return spec;
}
}  // namespace

OffPolicyTrainer::OffPolicyTrainer(env::EnvSpec env, nbp::NbpSpec policy_spec, TrainConfig config)
    : spec_(std::move(env)),
      config_(config),
      env_(spec_, Rng(config.seed).engine()()),
      rng_(config.seed ^ 0x5851f42d4c957f2dULL),
      policy_(aligned(std::move(policy_spec), spec_), rng_.engine()()),
      target_policy_(policy_),
      critic_(spec_.state_dim, spec_.action_dim, rng_.engine()()),
      target_critic_(critic_.params()),
      clf_(spec_.state_dim, box_of(spec_), {64, 64}, rng_.engine()()),
      policy_opt_(nn::AdamConfig{config.lr_policy}),
      critic_opt_(nn::AdamConfig{config.lr_critic}),
      clf_opt_(nn::AdamConfig{config.lr_classifier}),
      buffer_(config.buffer_capacity) {
  if (config_.tau == 0) throw std::invalid_argument("target sync period tau must be positive");
  if (config_.batch_size == 0) throw std::invalid_argument("batch size must be positive");
}

void OffPolicyTrainer::update() {
  const Batch batch = buffer_.sample(config_.batch_size, rng_);
  last_critic_loss_ = td_critic_update(critic_, critic_opt_, target_policy_, target_critic_, batch, config_.gamma, rng_,
                                       config_.max_grad_norm);
  const Tensor positives = config_.classifier_fresh_positives ? policy_.act(batch.s, rng_) : batch.a;
  last_clf_loss_ = ent::classifier_step(clf_, clf_opt_, batch.s, positives, rng_);
  const PolicyUpdateReport pr = pathwise_policy_update(policy_, policy_opt_, critic_, clf_, batch.s, config_.beta, rng_,
                                                       config_.max_grad_norm);
  if (config_.beta > 0.0) {
    last_entropy_ = pr.entropy_surrogate + clf_.box().log_volume();
  } else {
    ad::Graph g;
    const Var s = g.constant(batch.s);
    last_entropy_ = ent::entropy_surrogate(clf_, s, g.constant(positives)).value().item() + clf_.box().log_volume();
  }
  have_losses_ = true;
  ++updates_;
}

void OffPolicyTrainer::emit(std::size_t step) {
  MetricRecord rec;
  rec.step = step;
  rec.episode_return_mean = episodes_.drain();
  if (have_losses_) {
    rec.critic_loss = last_critic_loss_;
    rec.classifier_loss = last_clf_loss_;
    rec.entropy_estimate = last_entropy_;
    rec.entropy_flagged = last_clf_loss_ > config_.classifier_loss_flag;
  }
  if (config_.record_wall_time) rec.wall_ms = clock_.ms();
  log_.append(rec);
}

void OffPolicyTrainer::run(std::optional<std::size_t> steps) {
  const std::size_t total = steps.value_or(config_.total_steps);
  const std::size_t warmup = config_.effective_warmup();
  try {
    for (std::size_t k = 0; k < total; ++k) {
      if (obs_.empty()) obs_ = env_.reset();
      const Tensor a = policy_.act(Tensor::row(obs_), rng_);
      const env::StepResult r = env_.step(a.values());
      buffer_.push({obs_, a.values(), r.reward, r.state, r.terminal});
      episodes_.add_reward(r.reward);
      if (r.done) {
        episodes_.end_episode();
        obs_ = env_.reset();
      } else {
        obs_ = r.state;
      }
      ++steps_;
      if (buffer_.size() >= warmup) {
        for (std::size_t u = 0; u < config_.updates_per_step; ++u) update();
      }
      if (steps_ % config_.tau == 0) {
        nn::hard_sync(target_policy_.params(), policy_.params());
        nn::hard_sync(target_critic_, critic_.params());
      }
      if (config_.log_interval > 0 && steps_ % config_.log_interval == 0) emit(steps_);
    }
  } catch (const DomainError& e) {
    if (crash_path_) nn::save_checkpoint(policy_.params(), *crash_path_);
    throw DivergenceError(std::string("off-policy training diverged at step ") + std::to_string(steps_) + ": " + e.what());
  }
}

}  // namespace ipl::rl
