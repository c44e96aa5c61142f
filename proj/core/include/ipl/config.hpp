#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "ipl/blackbox_policy.hpp"
#include "ipl/environments.hpp"
#include "ipl/flow_policy.hpp"
#include "ipl/gaussian_policy.hpp"
#include "ipl/imitation.hpp"
#include "ipl/train_config.hpp"

namespace ipl::cfg {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Command { Train, Imitate, Eval, Verify, GradCheck, BanditReport };
enum class Algo { NfpOnPolicy, NbpOffPolicy, GaussianBaseline };

const char* command_name(Command c);
Command parse_command(const std::string& name);
const char* algo_name(Algo a);
Algo parse_algo(const std::string& name);

enum class PolicyKind { Nfp, Gaussian, Nbp };
const char* policy_kind_name(PolicyKind k);

struct ImitationSettings {
  std::string method = "bc";    // bc | gan
  std::string policy = "nfp";   // nfp | gaussian (bc only)
  std::size_t expert_episodes = 1000;
  double expert_sigma = 0.05;
  imit::ImitationConfig loop;
};

struct EvalSettings {
  std::size_t episodes = 100;
  std::string run_dir;  // eval: directory of a finished run
};

struct VerifySettings {
  std::string suite = "all";  // operators | fixed-points | lower-bound | all
  std::size_t instances = 0;  // 0 selects the suite default
};

struct GradCheckSettings {
  std::string target = "all";  // ops | nfp-logprob | nfp-entropy | nbp-sample | classifier-loss | all
  double tol = 1e-4;
  double step = 1e-5;
};

struct RunConfig {
  Command command = Command::Train;
  Algo algo = Algo::NfpOnPolicy;
  std::uint64_t seed = 0;
  std::string output_dir = "run";
  env::EnvSpec env = env::make_spec(env::EnvKind::GaussianBandit);
  rl::TrainConfig train;
  flow::FlowSpec flow;
  nbp::NbpSpec nbp;
  GaussianSpec gaussian;
  ImitationSettings imitation;
  EvalSettings eval;
  VerifySettings verify;
  GradCheckSettings grad_check;

  /// Dimensions of the policy specs follow the environment. A flow over a
  /// scalar action gets one auxiliary coordinate.
  void sync_dimensions();
  /// The policy a train or imitate run produces.
  PolicyKind policy_kind() const;
};

/// Validates a config document, filling defaults. Unknown keys anywhere are
/// errors naming the offending path.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_file(const std::filesystem::path& path);
/// The complete effective document; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);

/// Applies "dotted.path=value" to a document. The value is read as JSON when
/// it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace ipl::cfg
