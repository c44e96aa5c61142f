#include "ipl/onpolicy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ipl/advantages.hpp"
#include "ipl/checkpoint.hpp"

namespace ipl::rl {

ValueFunction::ValueFunction(std::size_t state_dim, std::uint64_t seed)
    : spec_{{state_dim, 64, 64, 1}, nn::Activation::Tanh, nn::Activation::Identity},
      params_(nn::init_params(spec_, seed)) {}

namespace {

Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
  const std::size_t w = t.cols();
  Tensor out({end - begin, w});
  for (std::size_t k = begin; k < end; ++k) {
    std::copy_n(t.values().begin() + static_cast<std::ptrdiff_t>(idx[k] * w), w,
                out.values().begin() + static_cast<std::ptrdiff_t>((k - begin) * w));
  }
  return out;
}

Tensor gather_column(const std::vector<double>& v, const std::vector<std::size_t>& idx, std::size_t begin,
                     std::size_t end) {
  Tensor out({end - begin, 1});
  for (std::size_t k = begin; k < end; ++k) out.values()[k - begin] = v[idx[k]];
  return out;
}

}  // namespace

UpdateReport onpolicy_update(StochasticPolicy& policy, ValueFunction& value, const Rollout& rollout,
                             const TrainConfig& config, nn::Adam& policy_opt, nn::Adam& value_opt, Rng& rng) {
  const std::size_t n = rollout.states.rows();
  UpdateReport report;
  if (n == 0) return report;
  const std::size_t mb = std::max<std::size_t>(1, std::min(config.minibatch, n));

  std::vector<double> adv = rollout.advantages;
  if (config.normalize_advantages && n > 1) {
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n - 1)) + 1e-8;
    for (double& a : adv) a = (a - mean) / sd;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  double clipped = 0.0;
  double seen = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t begin = 0; begin < n; begin += mb) {
      const std::size_t end = std::min(n, begin + mb);
      const std::size_t b = end - begin;
      ad::Graph g;
      const nn::BoundParams pp = nn::bind(g, policy.params());
      const nn::BoundParams vp = nn::bind(g, value.params());
      const Tensor states = gather_rows(rollout.states, order, begin, end);
      const Var s = g.constant(states);
      const Var a = g.constant(gather_rows(rollout.actions, order, begin, end));
      const Var old_logp = g.constant(gather_rows(rollout.old_logp, order, begin, end));
      const Var advantage = g.constant(gather_column(adv, order, begin, end));
      const Var ret = g.constant(gather_column(rollout.returns, order, begin, end));

      try {
        const Var ratio = ad::exp(ad::sub(policy.log_prob(pp, s, a), old_logp));
        const Var surrogate = ad::minimum(ad::mul(ratio, advantage),
                                          ad::mul(ad::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps), advantage));
        const Var policy_loss = ad::neg(ad::mean(surrogate));
        const std::size_t k = std::max<std::size_t>(1, config.entropy_samples);
        const Tensor noise = rng.normal_tensor({b * k, policy.noise_dim()});
        const Var entropy = policy.entropy_estimate(pp, k == 1 ? s : g.constant(states.repeat_rows(k)), noise);
        const Var value_loss = ad::mean(ad::square(ad::sub(value.forward(vp, s), ret)));
        const Var total = ad::add(ad::add(policy_loss, ad::scale(entropy, -config.beta)),
                                  ad::scale(value_loss, config.value_coef));

        if (report.updates == 0) {
          double sum = 0.0;
          double dev = 0.0;
          for (double r : ratio.value().values()) {
            sum += r;
            dev = std::max(dev, std::abs(r - 1.0));
          }
          report.first_ratio_mean = sum / static_cast<double>(b);
          report.first_ratio_max_dev = dev;
        }
        for (double r : ratio.value().values()) {
          if (std::abs(r - 1.0) > config.clip_eps) clipped += 1.0;
          seen += 1.0;
        }

        const ad::Gradients grads = g.backward(total);
        nn::GradMap pg = pp.gradients(grads);
        nn::GradMap vg = vp.gradients(grads);
        if (config.max_grad_norm > 0.0) {
          nn::clip_global_norm(pg, config.max_grad_norm);
          nn::clip_global_norm(vg, config.max_grad_norm);
        }
        policy_opt.step(policy.params(), pg);
        value_opt.step(value.params(), vg);
        report.policy_loss = policy_loss.value().item();
        report.value_loss = value_loss.value().item();
        report.entropy = entropy.value().item();
        ++report.updates;
      } catch (const DomainError& e) {
        throw DivergenceError(std::string("on-policy update diverged at epoch ") + std::to_string(epoch) + ": " +
                              e.what());
      }
    }
  }
  report.clip_fraction = seen > 0.0 ? clipped / seen : 0.0;
  return report;
}

OnPolicyTrainer::OnPolicyTrainer(env::EnvSpec env, StochasticPolicy& policy, TrainConfig config)
    : spec_(std::move(env)),
      policy_(policy),
      config_(config),
      env_(spec_, Rng(config.seed).engine()()),
      rng_(config.seed ^ 0x5851f42d4c957f2dULL),
      value_(spec_.state_dim, rng_.engine()()),
      policy_opt_(nn::AdamConfig{config.lr_policy}),
      value_opt_(nn::AdamConfig{config.lr_critic}) {
  // A wider policy (auxiliary flow coordinates) executes its leading coordinates.
  if (policy.state_dim() != spec_.state_dim || policy.action_dim() < spec_.action_dim) {
    throw std::invalid_argument("policy dimensions do not match the environment");
  }
}

Rollout OnPolicyTrainer::collect(std::size_t steps) {
  const std::size_t n = spec_.state_dim;
  const std::size_t m = policy_.action_dim();
  Rollout out{Tensor({steps, n}), Tensor({steps, m}), Tensor({steps, 1}), {}, {}, {}};
  Tensor next_states({steps, n});
  std::vector<double> rewards(steps);
  std::vector<std::uint8_t> terminal(steps);
  std::vector<std::uint8_t> boundary(steps);
  if (obs_.empty()) obs_ = env_.reset();
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor s = Tensor::row(obs_);
    const Tensor noise = rng_.normal_tensor({1, policy_.noise_dim()});
    ad::Graph g;
    const PolicySample draw = policy_.sample(nn::bind(g, policy_.params(), false), g.constant(s), noise);
    const Tensor& a = draw.action.value();
    std::copy(obs_.begin(), obs_.end(), out.states.values().begin() + static_cast<std::ptrdiff_t>(t * n));
    std::copy(a.values().begin(), a.values().end(), out.actions.values().begin() + static_cast<std::ptrdiff_t>(t * m));
    out.old_logp.values()[t] = draw.logp.value().item();

    const env::StepResult r =
        env_.step(std::vector<double>(a.values().begin(), a.values().begin() + static_cast<std::ptrdiff_t>(spec_.action_dim)));
    rewards[t] = r.reward;
    terminal[t] = r.terminal ? 1 : 0;
    boundary[t] = r.done ? 1 : 0;
    std::copy(r.state.begin(), r.state.end(), next_states.values().begin() + static_cast<std::ptrdiff_t>(t * n));
    episode_return_ += r.reward;
    if (r.done) {
      out.episode_returns.push_back(episode_return_);
      episode_return_ = 0.0;
      obs_ = env_.reset();
    } else {
      obs_ = r.state;
    }
  }
  const Tensor v = value_.predict(out.states);
  const Tensor v_next = value_.predict(next_states);
  AdvantageResult gae = compute_advantages(rewards, v.values(), v_next.values(), terminal, boundary, config_.gamma,
                                           config_.gae_lambda);
  out.advantages = std::move(gae.advantages);
  out.returns = std::move(gae.returns);
  return out;
}

void OnPolicyTrainer::run() {
  const std::size_t iterations = config_.rollout_length == 0 ? 0 : config_.total_steps / config_.rollout_length;
  for (std::size_t it = 0; it < iterations; ++it) {
    try {
      const Rollout rollout = collect(config_.rollout_length);
      last_ = onpolicy_update(policy_, value_, rollout, config_, policy_opt_, value_opt_, rng_);
      steps_ += config_.rollout_length;
      MetricRecord rec;
      rec.step = steps_;
      if (!rollout.episode_returns.empty()) {
        rec.episode_return_mean = std::accumulate(rollout.episode_returns.begin(), rollout.episode_returns.end(), 0.0) /
                                  static_cast<double>(rollout.episode_returns.size());
      }
      rec.critic_loss = last_.value_loss;
      rec.entropy_estimate = last_.entropy;
      if (config_.record_wall_time) rec.wall_ms = clock_.ms();
      log_.append(rec);
    } catch (const DomainError& e) {
      if (crash_path_) nn::save_checkpoint(policy_.params(), *crash_path_);
      throw DivergenceError(std::string("on-policy training diverged: ") + e.what());
    } catch (const DivergenceError&) {
      if (crash_path_) nn::save_checkpoint(policy_.params(), *crash_path_);
      throw;
    }
  }
}

}  // namespace ipl::rl
