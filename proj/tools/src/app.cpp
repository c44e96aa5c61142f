#include "ipl/cli/app.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ipl/cli/gradcheck_suite.hpp"
#include "ipl/cli/runner.hpp"
#include "ipl/onpolicy.hpp"
#include "ipl/verify.hpp"

namespace ipl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Invocation {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string suite;
  std::optional<std::size_t> instances;
  std::string target;
  std::optional<double> tol;
  std::string run_dir;
  std::optional<std::size_t> episodes;
  std::vector<std::string> overrides;
};

/// A failed verification suite; reported with its own exit code.
struct VerificationFailed {};

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

cfg::RunConfig build_config(const Invocation& inv) {
  json doc = json::object();
  if (!inv.config_path.empty()) {
    std::ifstream in(inv.config_path);
    if (!in) throw cfg::ConfigError("cannot read config '" + inv.config_path + "'");
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw cfg::ConfigError("config '" + inv.config_path + "' is not valid JSON: " + e.what());
    }
  }
  if (!doc.is_object()) throw cfg::ConfigError("config document must be a JSON object");
  doc["command"] = inv.command;
  if (inv.seed) doc["seed"] = *inv.seed;
  if (!inv.out_dir.empty()) doc["output_dir"] = inv.out_dir;
  if (!inv.suite.empty()) doc["verify"]["suite"] = inv.suite;
  if (inv.instances) doc["verify"]["instances"] = *inv.instances;
  if (!inv.target.empty()) doc["grad_check"]["target"] = inv.target;
  if (inv.tol) doc["grad_check"]["tol"] = *inv.tol;
  if (!inv.run_dir.empty()) doc["eval"]["run_dir"] = inv.run_dir;
  if (inv.episodes) doc["eval"]["episodes"] = *inv.episodes;
  for (const auto& o : inv.overrides) cfg::apply_override(doc, o);
  return cfg::parse_config(doc);
}

int cmd_train(const cfg::RunConfig& c, const fs::path& dir, std::ostream& out) {
  const RunResult r = c.command == cfg::Command::Train ? run_train(c, dir) : run_imitate(c, dir);
  write_json(dir / "summary.json", r.summary);
  out << r.summary.dump() << '\n';
  return kExitOk;
}

int cmd_eval(const cfg::RunConfig& c, const fs::path& dir, std::ostream& out) {
  if (c.eval.run_dir.empty()) throw cfg::ConfigError("eval needs eval.run_dir (--run)");
  cfg::RunConfig run_config;
  const RunResult run = load_run(c.eval.run_dir, run_config);
  const auto trajectories = evaluate_rollouts(run_config.env, run.policy, c.eval.episodes, c.seed);
  env::write_trajectories_csv(dir / "trajectories.csv", trajectories);
  json report = rollout_summary(run_config.env, trajectories);
  report["run_dir"] = c.eval.run_dir;
  report["seed"] = c.seed;
  write_json(dir / "eval-report.json", report);
  out << report.dump() << '\n';
  return kExitOk;
}

int cmd_bandit_report(const cfg::RunConfig& c, const fs::path& dir, std::ostream& out) {
  if (c.eval.run_dir.empty()) throw cfg::ConfigError("bandit-report needs eval.run_dir (--run)");
  cfg::RunConfig run_config;
  const RunResult run = load_run(c.eval.run_dir, run_config);
  Tensor draws;
  const BanditStats s = bandit_stats(run_config.env, run.policy, 10000, c.seed, &draws);
  {
    std::ofstream csv(dir / "bandit-samples.csv", std::ios::trunc);
    csv << std::setprecision(17) << "a0,a1\n";
    for (std::size_t r = 0; r < draws.rows(); ++r) csv << draws.at(r, 0) << ',' << draws.at(r, 1) << '\n';
    if (!csv) throw std::runtime_error("failed writing bandit-samples.csv");
  }
  const json report{{"run_dir", c.eval.run_dir},
                    {"policy", cfg::policy_kind_name(run_config.policy_kind())},
                    {"samples", s.samples},
                    {"correlation", s.correlation},
                    {"target_correlation", s.target_correlation},
                    {"mean", s.mean},
                    {"stddev", s.stddev}};
  write_json(dir / "bandit-report.json", report);
  out << report.dump() << '\n';
  return kExitOk;
}

int cmd_verify(const cfg::RunConfig& c, const fs::path& dir, std::ostream& out) {
  const std::string& suite = c.verify.suite;
  const auto count = [&](std::size_t fallback) { return c.verify.instances > 0 ? c.verify.instances : fallback; };
  json report{{"seed", c.seed}, {"suites", json::object()}};
  bool pass = true;
  if (suite == "operators" || suite == "all") {
    const auto r = tab::run_operator_suite(count(1000), c.seed);
    report["suites"]["operators"] = tab::to_json(r);
    pass = pass && r.pass();
    out << "operators     " << (r.pass() ? "PASS" : "FAIL") << "  instances=" << r.instances
        << " max_violation=" << r.max_violation << '\n';
  }
  if (suite == "fixed-points" || suite == "all") {
    const auto r = tab::run_fixed_point_suite(count(20), c.seed);
    report["suites"]["fixed-points"] = tab::to_json(r);
    pass = pass && r.pass();
    out << "fixed-points  " << (r.pass() ? "PASS" : "FAIL") << "  converged=" << r.converged << "/" << r.instances
        << " operator_residual=" << r.max_operator_residual << " policy_residual=" << r.max_policy_residual << '\n';
  }
  if (suite == "lower-bound" || suite == "all") {
    const auto r = tab::run_lower_bound_suite(count(200), c.seed);
    report["suites"]["lower-bound"] = tab::to_json(r);
    pass = pass && r.pass();
    out << "lower-bound   " << (r.pass() ? "PASS" : "FAIL") << "  holds=" << r.holds << "/" << r.instances
        << " min_slack=" << r.min_slack << '\n';
  }
  report["pass"] = pass;
  write_json(dir / "verify-report.json", report);
  if (!pass) throw VerificationFailed{};
  return kExitOk;
}

int cmd_grad_check(const cfg::RunConfig& c, const fs::path& dir, std::ostream& out) {
  const auto rows = run_grad_checks(c.grad_check.target, c.grad_check.tol, c.grad_check.step, c.seed);
  const json report = to_json(rows);
  write_json(dir / "grad-check-report.json", report);
  for (const auto& r : rows) {
    out << std::left << std::setw(16) << r.target << std::setw(28) << r.name << std::setw(14) << std::scientific
        << std::setprecision(3) << r.max_rel_error << " tol " << r.tol << "  " << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  out << std::defaultfloat;
  if (!report.at("pass").get<bool>()) throw VerificationFailed{};
  return kExitOk;
}

int dispatch(const Invocation& inv, std::ostream& out) {
  const cfg::RunConfig c = build_config(inv);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  write_json(dir / "effective_config.json", cfg::to_json(c));
  switch (c.command) {
    case cfg::Command::Train:
    case cfg::Command::Imitate: return cmd_train(c, dir, out);
    case cfg::Command::Eval: return cmd_eval(c, dir, out);
    case cfg::Command::Verify: return cmd_verify(c, dir, out);
    case cfg::Command::GradCheck: return cmd_grad_check(c, dir, out);
    case cfg::Command::BanditReport: return cmd_bandit_report(c, dir, out);
  }
  return kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy-regularized policy optimization with implicit policies", "ipl"};
  app.require_subcommand(1);
  Invocation inv;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "JSON config document")->check(CLI::ExistingFile);
    sub->add_option("--seed", inv.seed, "Seed overriding the config");
    sub->add_option("--out", inv.out_dir, "Output directory");
    sub->add_option("overrides", inv.overrides, "key=value config overrides (dotted keys)");
    return sub;
  };
  common(app.add_subcommand("train", "Train a policy"));
  common(app.add_subcommand("imitate", "Clone a scripted expert"));
  auto* eval = common(app.add_subcommand("eval", "Roll out a trained policy"));
  eval->add_option("--run", inv.run_dir, "Run directory to evaluate");
  eval->add_option("--episodes", inv.episodes, "Evaluation episodes");
  auto* verify = common(app.add_subcommand("verify", "Tabular operator checks"));
  verify->add_option("--suite", inv.suite, "operators | fixed-points | lower-bound | all");
  verify->add_option("--instances", inv.instances, "Instances per suite");
  auto* grad = common(app.add_subcommand("grad-check", "Finite-difference gradient checks"));
  grad->add_option("--target", inv.target, "ops | nfp-logprob | nfp-entropy | nbp-sample | classifier-loss | all");
  grad->add_option("--tol", inv.tol, "Relative tolerance for model targets");
  auto* bandit = common(app.add_subcommand("bandit-report", "Action statistics of a bandit run"));
  bandit->add_option("--run", inv.run_dir, "Run directory to report on");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }
  inv.command = app.get_subcommands().front()->get_name();

  try {
    return dispatch(inv, out);
  } catch (const cfg::ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const rl::DivergenceError& e) {
    err << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const VerificationFailed&) {
    err << "verification failed\n";
    return kExitVerification;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace ipl::cli
