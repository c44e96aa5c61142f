#include "ipl/config.hpp"

#include <fstream>
#include <set>

namespace ipl::cfg {

using nlohmann::json;

const char* command_name(Command c) {
  switch (c) {
    case Command::Train: return "train";
    case Command::Imitate: return "imitate";
    case Command::Eval: return "eval";
    case Command::Verify: return "verify";
    case Command::GradCheck: return "grad-check";
    case Command::BanditReport: return "bandit-report";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::Train, Command::Imitate, Command::Eval, Command::Verify, Command::GradCheck,
                    Command::BanditReport}) {
    if (name == command_name(c)) return c;
  }
  throw ConfigError("unknown command '" + name + "'");
}

const char* algo_name(Algo a) {
  switch (a) {
    case Algo::NfpOnPolicy: return "nfp-onpolicy";
    case Algo::NbpOffPolicy: return "nbp-offpolicy";
    case Algo::GaussianBaseline: return "gaussian-baseline";
  }
  return "?";
}

Algo parse_algo(const std::string& name) {
  for (Algo a : {Algo::NfpOnPolicy, Algo::NbpOffPolicy, Algo::GaussianBaseline}) {
    if (name == algo_name(a)) return a;
  }
  throw ConfigError("unknown algo '" + name + "'");
}

namespace {

/// Strict view of one JSON object: every key must be read exactly once.
class Obj {
public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + display() + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + at(key) + "' has the wrong type (" + it->dump() + ")");
    }
  }

  Obj child(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return Obj(empty(), at(key));
    seen_.insert(key);
    return Obj(*it, at(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + at(key) + "'");
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void read_env(Obj o, env::EnvSpec& spec) {
  std::string kind = env::kind_name(spec.kind);
  o.get("kind", kind);
  try {
    spec = env::make_spec(env::parse_kind(kind));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("env.kind: ") + e.what());
  }
  o.get("horizon", spec.horizon);
  o.get("obs_noise", spec.obs_noise);
  {
    Obj b = o.child("bandit");
    b.get("sigma", spec.bandit.sigma);
    b.get("beta_opt", spec.bandit.beta_opt);
    b.finish();
  }
  {
    Obj m = o.child("multigoal");
    m.get("goals", spec.multigoal.goals);
    m.get("step_scale", spec.multigoal.step_scale);
    m.get("noise_sigma", spec.multigoal.noise_sigma);
    m.get("goal_radius", spec.multigoal.goal_radius);
    m.get("init_sigma", spec.multigoal.init_sigma);
    m.finish();
  }
  {
    Obj a = o.child("axis");
    a.get("bound", spec.axis.bound);
    a.finish();
  }
  {
    Obj t = o.child("tabular");
    t.get("states", spec.tabular.states);
    t.get("actions", spec.tabular.actions);
    t.get("mdp_seed", spec.tabular.mdp_seed);
    t.finish();
    if (spec.kind == env::EnvKind::TabularRandom) spec.state_dim = spec.tabular.states;
  }
  o.finish();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
}

void read_train(Obj o, rl::TrainConfig& t) {
  o.get("beta", t.beta);
  o.get("gamma", t.gamma);
  o.get("lr_policy", t.lr_policy);
  o.get("lr_critic", t.lr_critic);
  o.get("lr_classifier", t.lr_classifier);
  o.get("total_steps", t.total_steps);
  o.get("log_interval", t.log_interval);
  o.get("record_wall_time", t.record_wall_time);
  o.get("max_grad_norm", t.max_grad_norm);
  o.get("rollout_length", t.rollout_length);
  o.get("epochs", t.epochs);
  o.get("minibatch", t.minibatch);
  o.get("clip_eps", t.clip_eps);
  o.get("gae_lambda", t.gae_lambda);
  o.get("value_coef", t.value_coef);
  o.get("normalize_advantages", t.normalize_advantages);
  o.get("entropy_samples", t.entropy_samples);
  o.get("batch_size", t.batch_size);
  o.get("buffer_capacity", t.buffer_capacity);
  o.get("tau", t.tau);
  o.get("warmup", t.warmup);
  o.get("updates_per_step", t.updates_per_step);
  o.get("classifier_fresh_positives", t.classifier_fresh_positives);
  o.get("classifier_loss_flag", t.classifier_loss_flag);
  o.get("dropout_at_eval", t.dropout_at_eval);
  o.finish();
  require(t.beta >= 0.0, "train.beta must be >= 0");
  require(t.gamma > 0.0 && t.gamma <= 1.0, "train.gamma must lie in (0, 1]");
  require(t.lr_policy > 0.0 && t.lr_critic > 0.0 && t.lr_classifier > 0.0, "train learning rates must be positive");
  require(t.rollout_length > 0 && t.epochs > 0 && t.minibatch > 0, "train rollout sizes must be positive");
  require(t.clip_eps > 0.0, "train.clip_eps must be positive");
  require(t.gae_lambda >= 0.0 && t.gae_lambda <= 1.0, "train.gae_lambda must lie in [0, 1]");
  require(t.batch_size > 0 && t.buffer_capacity > 0 && t.tau > 0, "train batch_size, buffer_capacity and tau must be positive");
  require(t.entropy_samples > 0 && t.updates_per_step > 0, "train.entropy_samples and updates_per_step must be positive");
  require(t.max_grad_norm >= 0.0, "train.max_grad_norm must be >= 0");
}

void read_flow(Obj o, flow::FlowSpec& f) {
  o.get("layers", f.layers);
  o.get("hidden", f.hidden);
  o.get("st_hidden_layers", f.st_hidden_layers);
  o.get("embed_hidden", f.embed_hidden);
  o.get("scale_bound", f.scale_bound);
  o.finish();
  require(f.layers >= 1 && f.hidden >= 1, "flow.layers and flow.hidden must be positive");
}

void read_nbp(Obj o, nbp::NbpSpec& n) {
  o.get("hidden", n.hidden);
  o.get("layer_norm", n.layer_norm);
  o.get("dropout_p", n.dropout_p);
  o.get("rho_init", n.rho_init);
  o.finish();
  require(!n.hidden.empty(), "nbp.hidden must list at least one width");
  require(n.dropout_p >= 0.0 && n.dropout_p < 1.0, "nbp.dropout_p must lie in [0, 1)");
}

void read_gaussian(Obj o, GaussianSpec& g) {
  o.get("hidden", g.hidden);
  o.get("log_std_init", g.log_std_init);
  o.finish();
}

void read_imitation(Obj o, ImitationSettings& s) {
  o.get("method", s.method);
  o.get("policy", s.policy);
  o.get("expert_episodes", s.expert_episodes);
  o.get("expert_sigma", s.expert_sigma);
  o.get("steps", s.loop.steps);
  o.get("batch", s.loop.batch);
  o.get("lr", s.loop.lr);
  o.get("d_lr", s.loop.d_lr);
  o.get("log_interval", s.loop.log_interval);
  o.get("augment", s.loop.augment);
  o.finish();
  require(s.method == "bc" || s.method == "gan", "imitation.method must be 'bc' or 'gan'");
  require(s.policy == "nfp" || s.policy == "gaussian", "imitation.policy must be 'nfp' or 'gaussian'");
  require(s.expert_episodes > 0 && s.loop.batch > 0, "imitation.expert_episodes and batch must be positive");
  require(s.loop.lr > 0.0 && s.loop.d_lr > 0.0, "imitation learning rates must be positive");
}

}  // namespace

const char* policy_kind_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::Nfp: return "nfp";
    case PolicyKind::Gaussian: return "gaussian";
    case PolicyKind::Nbp: return "nbp";
  }
  return "?";
}

PolicyKind RunConfig::policy_kind() const {
  if (command == Command::Imitate) {
    if (imitation.method == "gan") return PolicyKind::Nbp;
    return imitation.policy == "gaussian" ? PolicyKind::Gaussian : PolicyKind::Nfp;
  }
  switch (algo) {
    case Algo::NfpOnPolicy: return PolicyKind::Nfp;
    case Algo::NbpOffPolicy: return PolicyKind::Nbp;
    case Algo::GaussianBaseline: return PolicyKind::Gaussian;
  }
  return PolicyKind::Nfp;
}

void RunConfig::sync_dimensions() {
  if (env.action_dim + imitation.loop.augment < 2) imitation.loop.augment = 2 - env.action_dim;
  flow.state_dim = env.state_dim;
  flow.action_dim = env.action_dim + imitation.loop.augment;
  nbp.state_dim = env.state_dim;
  nbp.action_dim = env.action_dim;
  nbp.action_low = env.action_low;
  nbp.action_high = env.action_high;
  gaussian.state_dim = env.state_dim;
  gaussian.action_dim = env.action_dim;
}

RunConfig parse_config(const json& doc) {
  RunConfig c;
  Obj root(doc, "");
  std::string command = command_name(c.command);
  std::string algo = algo_name(c.algo);
  root.get("command", command);
  root.get("algo", algo);
  c.command = parse_command(command);
  c.algo = parse_algo(algo);
  root.get("seed", c.seed);
  root.get("output_dir", c.output_dir);
  read_env(root.child("env"), c.env);
  read_train(root.child("train"), c.train);
  read_flow(root.child("flow"), c.flow);
  read_nbp(root.child("nbp"), c.nbp);
  read_gaussian(root.child("gaussian"), c.gaussian);
  read_imitation(root.child("imitation"), c.imitation);
  {
    Obj e = root.child("eval");
    e.get("episodes", c.eval.episodes);
    e.get("run_dir", c.eval.run_dir);
    e.finish();
  }
  {
    Obj v = root.child("verify");
    v.get("suite", c.verify.suite);
    v.get("instances", c.verify.instances);
    v.finish();
    const std::set<std::string> suites{"operators", "fixed-points", "lower-bound", "all"};
    require(suites.count(c.verify.suite) == 1, "verify.suite must be operators, fixed-points, lower-bound or all");
  }
  {
    Obj g = root.child("grad_check");
    g.get("target", c.grad_check.target);
    g.get("tol", c.grad_check.tol);
    g.get("step", c.grad_check.step);
    g.finish();
    const std::set<std::string> targets{"ops", "nfp-logprob", "nfp-entropy", "nbp-sample", "classifier-loss", "all"};
    require(targets.count(c.grad_check.target) == 1, "grad_check.target is not a known target");
    require(c.grad_check.tol > 0.0 && c.grad_check.step > 0.0, "grad_check tol and step must be positive");
  }
  root.finish();
  c.train.seed = c.seed;
  c.imitation.loop.seed = c.seed;
  c.sync_dimensions();
  try {
    switch (c.policy_kind()) {
      case PolicyKind::Nfp: c.flow.validate(); break;
      case PolicyKind::Nbp: c.nbp.validate(); break;
      case PolicyKind::Gaussian: break;
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  const rl::TrainConfig& t = c.train;
  return {
      {"command", command_name(c.command)},
      {"algo", algo_name(c.algo)},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"env",
       {{"kind", env::kind_name(c.env.kind)},
        {"horizon", c.env.horizon},
        {"obs_noise", c.env.obs_noise},
        {"bandit", {{"sigma", c.env.bandit.sigma}, {"beta_opt", c.env.bandit.beta_opt}}},
        {"multigoal",
         {{"goals", c.env.multigoal.goals},
          {"step_scale", c.env.multigoal.step_scale},
          {"noise_sigma", c.env.multigoal.noise_sigma},
          {"goal_radius", c.env.multigoal.goal_radius},
          {"init_sigma", c.env.multigoal.init_sigma}}},
        {"axis", {{"bound", c.env.axis.bound}}},
        {"tabular",
         {{"states", c.env.tabular.states}, {"actions", c.env.tabular.actions}, {"mdp_seed", c.env.tabular.mdp_seed}}}}},
      {"train",
       {{"beta", t.beta},
        {"gamma", t.gamma},
        {"lr_policy", t.lr_policy},
        {"lr_critic", t.lr_critic},
        {"lr_classifier", t.lr_classifier},
        {"total_steps", t.total_steps},
        {"log_interval", t.log_interval},
        {"record_wall_time", t.record_wall_time},
        {"max_grad_norm", t.max_grad_norm},
        {"rollout_length", t.rollout_length},
        {"epochs", t.epochs},
        {"minibatch", t.minibatch},
        {"clip_eps", t.clip_eps},
        {"gae_lambda", t.gae_lambda},
        {"value_coef", t.value_coef},
        {"normalize_advantages", t.normalize_advantages},
        {"entropy_samples", t.entropy_samples},
        {"batch_size", t.batch_size},
        {"buffer_capacity", t.buffer_capacity},
        {"tau", t.tau},
        {"warmup", t.warmup},
        {"updates_per_step", t.updates_per_step},
        {"classifier_fresh_positives", t.classifier_fresh_positives},
        {"classifier_loss_flag", t.classifier_loss_flag},
        {"dropout_at_eval", t.dropout_at_eval}}},
      {"flow",
       {{"layers", c.flow.layers},
        {"hidden", c.flow.hidden},
        {"st_hidden_layers", c.flow.st_hidden_layers},
        {"embed_hidden", c.flow.embed_hidden},
        {"scale_bound", c.flow.scale_bound}}},
      {"nbp",
       {{"hidden", c.nbp.hidden},
        {"layer_norm", c.nbp.layer_norm},
        {"dropout_p", c.nbp.dropout_p},
        {"rho_init", c.nbp.rho_init}}},
      {"gaussian", {{"hidden", c.gaussian.hidden}, {"log_std_init", c.gaussian.log_std_init}}},
      {"imitation",
       {{"method", c.imitation.method},
        {"policy", c.imitation.policy},
        {"expert_episodes", c.imitation.expert_episodes},
        {"expert_sigma", c.imitation.expert_sigma},
        {"steps", c.imitation.loop.steps},
        {"batch", c.imitation.loop.batch},
        {"lr", c.imitation.loop.lr},
        {"d_lr", c.imitation.loop.d_lr},
        {"log_interval", c.imitation.loop.log_interval},
        {"augment", c.imitation.loop.augment}}},
      {"eval", {{"episodes", c.eval.episodes}, {"run_dir", c.eval.run_dir}}},
      {"verify", {{"suite", c.verify.suite}, {"instances", c.verify.instances}}},
      {"grad_check", {{"target", c.grad_check.target}, {"tol", c.grad_check.tol}, {"step", c.grad_check.step}}},
  };
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

}  // namespace ipl::cfg
