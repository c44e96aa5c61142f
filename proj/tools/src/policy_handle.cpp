#include "ipl/cli/policy_handle.hpp"

#include "ipl/checkpoint.hpp"

namespace ipl::cli {

namespace {
constexpr std::uint64_t kPolicySalt = 0x2545f4914f6cdd1dULL;
}

PolicyHandle::PolicyHandle(const cfg::RunConfig& config)
    : kind_(config.policy_kind()), env_action_dim_(config.env.action_dim), dropout_(config.train.dropout_at_eval) {
  const std::uint64_t seed = config.seed ^ kPolicySalt;
  switch (kind_) {
    case cfg::PolicyKind::Nfp: nfp_ = std::make_unique<flow::FlowPolicy>(config.flow, seed); break;
    case cfg::PolicyKind::Gaussian: gaussian_ = std::make_unique<GaussianPolicy>(config.gaussian, seed); break;
    case cfg::PolicyKind::Nbp: nbp_ = std::make_unique<nbp::NoisyMlpPolicy>(config.nbp, seed); break;
  }
}

StochasticPolicy* PolicyHandle::density() const noexcept {
  if (nfp_) return nfp_.get();
  return gaussian_.get();
}

nn::ParamSet& PolicyHandle::params() {
  if (nbp_) return nbp_->params();
  return density()->params();
}

const nn::ParamSet& PolicyHandle::params() const {
  if (nbp_) return nbp_->params();
  return density()->params();
}

Tensor PolicyHandle::sample(const Tensor& states, Rng& rng) const {
  Tensor full;
  if (nbp_) {
    full = nbp_->act(states, rng, dropout_);
  } else {
    const StochasticPolicy& p = *density();
    full = p.act(states, rng.normal_tensor({states.rows(), p.noise_dim()}));
  }
  if (full.cols() == env_action_dim_) return full;
  Tensor out({full.rows(), env_action_dim_});
  for (std::size_t r = 0; r < full.rows(); ++r) {
    for (std::size_t j = 0; j < env_action_dim_; ++j) out.values()[r * env_action_dim_ + j] = full.at(r, j);
  }
  return out;
}

env::ActFn PolicyHandle::actor(Rng& rng) const {
  return [this, &rng](const std::vector<double>& obs) { return sample(Tensor::row(obs), rng).values(); };
}

void PolicyHandle::save(const std::filesystem::path& path) const { nn::save_checkpoint(params(), path); }

void PolicyHandle::load(const std::filesystem::path& path) {
  nn::ParamSet loaded = nn::load_checkpoint(path, params().spec_hash());
  nn::hard_sync(params(), loaded);
}

}  // namespace ipl::cli
