#include "ipl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ipl/tabular.hpp"

namespace ipl::env {

const char* kind_name(EnvKind kind) {
  switch (kind) {
    case EnvKind::GaussianBandit: return "gaussian-bandit";
    case EnvKind::MultiGoal2d: return "multi-goal-2d";
    case EnvKind::BimodalAxis: return "bimodal-axis";
    case EnvKind::TabularRandom: return "tabular-random";
  }
  return "?";
}

EnvKind parse_kind(const std::string& name) {
  for (EnvKind k : {EnvKind::GaussianBandit, EnvKind::MultiGoal2d, EnvKind::BimodalAxis, EnvKind::TabularRandom}) {
    if (name == kind_name(k)) return k;
  }
  throw std::invalid_argument("unknown environment kind '" + name + "'");
}

namespace {

struct Inverse2 {
  double a, b, c, d;  // row-major inverse
};

Inverse2 invert_sigma(const BanditParams& p) {
  if (p.sigma.size() != 4) throw std::invalid_argument("bandit sigma must have 4 entries");
  const double s00 = p.sigma[0], s01 = p.sigma[1], s10 = p.sigma[2], s11 = p.sigma[3];
  const double det = s00 * s11 - s01 * s10;
  if (s01 != s10 || !(s00 > 0.0) || !(det > 0.0)) {
    throw std::invalid_argument("bandit sigma must be symmetric positive definite");
  }
  return {s11 / det, -s01 / det, -s10 / det, s00 / det};
}

const tab::TabularMdp& tabular_mdp(const TabularEnvParams& p) {
  thread_local TabularEnvParams cached_params{0, 0, 0};
  thread_local tab::TabularMdp cached;
  if (cached_params.states != p.states || cached_params.actions != p.actions || cached_params.mdp_seed != p.mdp_seed) {
    Rng rng(p.mdp_seed);
    cached = tab::random_mdp(p.states, p.actions, 0.9, rng);
    cached_params = p;
  }
  return cached;
}

std::size_t sample_index(const Eigen::RowVectorXd& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(probs.size() - 1);
}

}  // namespace

void EnvSpec::validate() const {
  if (horizon < 1) throw std::invalid_argument("environment horizon must be at least 1");
  if (action_low.size() != action_dim || action_high.size() != action_dim) {
    throw std::invalid_argument("environment action bounds must have action_dim entries");
  }
  for (std::size_t i = 0; i < action_dim; ++i) {
    if (!(std::isfinite(action_low[i]) && std::isfinite(action_high[i]) && action_low[i] < action_high[i])) {
      throw std::invalid_argument("environment action bounds must be finite with low < high");
    }
  }
  if (!(obs_noise >= 0.0)) throw std::invalid_argument("observation noise must be non-negative");
  switch (kind) {
    case EnvKind::GaussianBandit:
      if (state_dim != 1 || action_dim != 2) throw std::invalid_argument("gaussian-bandit has n = 1, m = 2");
      invert_sigma(bandit);
      if (!(bandit.beta_opt > 0.0)) throw std::invalid_argument("bandit beta_opt must be positive");
      break;
    case EnvKind::MultiGoal2d:
      if (state_dim != 2 || action_dim != 2) throw std::invalid_argument("multi-goal-2d has n = 2, m = 2");
      if (multigoal.goals.size() != 8) throw std::invalid_argument("multi-goal-2d needs 4 goals");
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < i; ++j) {
          if (multigoal.goals[2 * i] == multigoal.goals[2 * j] && multigoal.goals[2 * i + 1] == multigoal.goals[2 * j + 1]) {
            throw std::invalid_argument("multi-goal-2d goals must be distinct");
          }
        }
      }
      if (!(multigoal.step_scale > 0.0 && multigoal.goal_radius > 0.0 && multigoal.noise_sigma >= 0.0)) {
        throw std::invalid_argument("multi-goal-2d parameters must be positive");
      }
      break;
    case EnvKind::BimodalAxis:
      if (state_dim != 1 || action_dim != 1) throw std::invalid_argument("bimodal-axis has n = 1, m = 1");
      if (!(axis.bound > 0.0)) throw std::invalid_argument("bimodal-axis bound must be positive");
      break;
    case EnvKind::TabularRandom:
      if (tabular.states < 1 || tabular.actions < 1) throw std::invalid_argument("tabular-random needs states and actions");
      if (state_dim != tabular.states || action_dim != 1) {
        throw std::invalid_argument("tabular-random has one-hot states and a scalar action");
      }
      break;
  }
}

EnvSpec make_spec(EnvKind kind) {
  EnvSpec spec;
  spec.kind = kind;
  switch (kind) {
    case EnvKind::GaussianBandit:
      break;
    case EnvKind::MultiGoal2d:
      spec.state_dim = 2;
      spec.horizon = 50;
      break;
    case EnvKind::BimodalAxis:
      spec.state_dim = 1;
      spec.action_dim = 1;
      spec.action_low = {-1.0};
      spec.action_high = {1.0};
      spec.horizon = 40;
      break;
    case EnvKind::TabularRandom:
      spec.state_dim = spec.tabular.states;
      spec.action_dim = 1;
      spec.action_low = {-1.0};
      spec.action_high = {1.0};
      spec.horizon = 20;
      break;
  }
  return spec;
}

EnvSpec noisy_wrap(EnvSpec spec, double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noisy_wrap: sigma must be non-negative");
  spec.obs_noise = sigma;
  return spec;
}

std::vector<double> env_reset(const EnvSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case EnvKind::GaussianBandit: return {0.0};
    case EnvKind::MultiGoal2d: {
      const double x = spec.multigoal.init_sigma * rng.normal();
      const double y = spec.multigoal.init_sigma * rng.normal();
      return {x, y};
    }
    case EnvKind::BimodalAxis: return {0.0};
    case EnvKind::TabularRandom: {
      const tab::TabularMdp& mdp = tabular_mdp(spec.tabular);
      std::vector<double> s(spec.tabular.states, 0.0);
      s[sample_index(mdp.p1.transpose(), rng)] = 1.0;
      return s;
    }
  }
  return {};
}

StepResult env_step(const EnvSpec& spec, const std::vector<double>& state, std::vector<double> action, std::size_t t,
                    Rng& rng) {
  if (action.size() != spec.action_dim) throw ShapeError("env_step: action has the wrong width");
  const std::vector<double> raw = action;
  for (std::size_t i = 0; i < action.size(); ++i) {
    if (!std::isfinite(action[i])) throw DomainError("env_step: non-finite action");
    action[i] = std::clamp(action[i], spec.action_low[i], spec.action_high[i]);
  }
  StepResult out;
  switch (spec.kind) {
    case EnvKind::GaussianBandit:
      out.state = {0.0};
      // Scored on the raw action: a clipped reward is flat outside the box,
      // which leaves the entropy-regularized objective unbounded.
      out.reward = bandit_reward(spec.bandit, raw);
      out.terminal = true;
      break;
    case EnvKind::MultiGoal2d: {
      const MultiGoalParams& p = spec.multigoal;
      const double nx = p.noise_sigma * rng.normal();
      const double ny = p.noise_sigma * rng.normal();
      out.state = {state[0] + p.step_scale * action[0] + nx, state[1] + p.step_scale * action[1] + ny};
      double best = std::numeric_limits<double>::infinity();
      for (int g = 0; g < 4; ++g) {
        best = std::min(best, std::hypot(out.state[0] - p.goals[2 * g], out.state[1] - p.goals[2 * g + 1]));
      }
      out.reward = -best;
      out.terminal = best <= p.goal_radius;
      break;
    }
    case EnvKind::BimodalAxis: {
      const double b = spec.axis.bound;
      const double next = std::clamp(state[0] + action[0], -b, b);
      out.state = {next};
      out.terminal = std::abs(next) >= b;
      out.reward = out.terminal ? 1.0 : 0.0;
      break;
    }
    case EnvKind::TabularRandom: {
      const tab::TabularMdp& mdp = tabular_mdp(spec.tabular);
      const auto s = static_cast<std::size_t>(std::max_element(state.begin(), state.end()) - state.begin());
      const double u = (action[0] - spec.action_low[0]) / (spec.action_high[0] - spec.action_low[0]);
      const std::size_t a = std::min(mdp.nA - 1, static_cast<std::size_t>(u * static_cast<double>(mdp.nA)));
      out.reward = mdp.R(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
      out.state.assign(mdp.nS, 0.0);
      out.state[sample_index(mdp.P.row(static_cast<Eigen::Index>(s * mdp.nA + a)), rng)] = 1.0;
      break;
    }
  }
  out.done = out.terminal || t + 1 >= spec.horizon;
  return out;
}

Env::Env(EnvSpec spec, std::uint64_t seed) : spec_(std::move(spec)), dyn_rng_(seed), obs_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
  spec_.validate();
}

std::vector<double> Env::observe(const std::vector<double>& s) {
  if (spec_.obs_noise == 0.0) return s;
  std::vector<double> o = s;
  for (double& v : o) v += spec_.obs_noise * obs_rng_.normal();
  return o;
}

std::vector<double> Env::reset() {
  t_ = 0;
  state_ = env_reset(spec_, dyn_rng_);
  return observe(state_);
}

StepResult Env::step(const std::vector<double>& action) {
  if (state_.empty()) throw std::logic_error("Env::step called before reset");
  StepResult r = env_step(spec_, state_, action, t_, dyn_rng_);
  ++t_;
  state_ = r.state;
  r.state = observe(state_);
  return r;
}

double Trajectory::total_reward() const {
  double sum = 0.0;
  for (const auto& s : steps) sum += s.r;
  return sum;
}

Trajectory rollout(Env& env, const ActFn& act) {
  Trajectory traj;
  std::vector<double> obs = env.reset();
  for (;;) {
    std::vector<double> a = act(obs);
    for (std::size_t i = 0; i < a.size() && i < env.spec().action_dim; ++i) {
      a[i] = std::clamp(a[i], env.spec().action_low[i], env.spec().action_high[i]);
    }
    const StepResult r = env.step(a);
    traj.steps.push_back({obs, a, r.reward, r.done});
    obs = r.state;
    if (r.done) break;
  }
  traj.final_state = env.true_state();
  return traj;
}

void write_trajectories_csv(const std::filesystem::path& path, const std::vector<Trajectory>& episodes) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  std::size_t n = 0;
  std::size_t m = 0;
  for (const auto& e : episodes) {
    if (!e.steps.empty()) {
      n = e.steps.front().s.size();
      m = e.steps.front().a.size();
      break;
    }
  }
  out << "episode,t";
  for (std::size_t i = 0; i < n; ++i) out << ",s" << i;
  for (std::size_t i = 0; i < m; ++i) out << ",a" << i;
  out << ",r,done\n";
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    for (std::size_t t = 0; t < episodes[e].steps.size(); ++t) {
      const TrajectoryStep& st = episodes[e].steps[t];
      out << e << ',' << t;
      for (double v : st.s) out << ',' << v;
      for (double v : st.a) out << ',' << v;
      out << ',' << st.r << ',' << (st.done ? 1 : 0) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

double bandit_reward(const BanditParams& p, const std::vector<double>& a) {
  const Inverse2 inv = invert_sigma(p);
  return -(a[0] * (inv.a * a[0] + inv.b * a[1]) + a[1] * (inv.c * a[0] + inv.d * a[1]));
}

double bandit_log_normalizer(const BanditParams& p, double beta, std::size_t grid) {
  if (!(beta > 0.0) || grid == 0) throw std::invalid_argument("bandit_log_normalizer: beta > 0 and grid > 0 required");
  const double h = 2.0 / static_cast<double>(grid);
  double z = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    for (std::size_t j = 0; j < grid; ++j) {
      const std::vector<double> a{-1.0 + (static_cast<double>(i) + 0.5) * h, -1.0 + (static_cast<double>(j) + 0.5) * h};
      z += std::exp(bandit_reward(p, a) / beta);
    }
  }
  return std::log(z * h * h);
}

double bandit_optimal_logdensity(const BanditParams& p, double beta, const std::vector<double>& a, std::size_t grid) {
  return bandit_reward(p, a) / beta - bandit_log_normalizer(p, beta, grid);
}

void AxisExpert::begin_episode() { target_ = rng_.bernoulli(0.5) ? bound_ : -bound_; }

std::vector<double> AxisExpert::operator()(const std::vector<double>& observation) {
  if (target_ == 0.0) begin_episode();
  return {std::clamp(target_ - observation[0], -1.0, 1.0) + sigma_ * rng_.normal()};
}

double sample_correlation(const Tensor& samples, std::size_t i, std::size_t j) {
  const std::size_t n = samples.rows();
  const std::size_t m = samples.cols();
  if (n < 2 || i >= m || j >= m) throw std::invalid_argument("sample_correlation: need >= 2 rows and valid columns");
  double mi = 0.0, mj = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    mi += samples.at(r, i);
    mj += samples.at(r, j);
  }
  mi /= static_cast<double>(n);
  mj /= static_cast<double>(n);
  double sij = 0.0, sii = 0.0, sjj = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double di = samples.at(r, i) - mi;
    const double dj = samples.at(r, j) - mj;
    sij += di * dj;
    sii += di * di;
    sjj += dj * dj;
  }
  if (sii == 0.0 || sjj == 0.0) return 0.0;
  return sij / std::sqrt(sii * sjj);
}

int goal_hit(const MultiGoalParams& p, const std::vector<double>& position) {
  for (int g = 0; g < 4; ++g) {
    if (std::hypot(position[0] - p.goals[2 * g], position[1] - p.goals[2 * g + 1]) <= p.goal_radius) return g;
  }
  return -1;
}

}  // namespace ipl::env
