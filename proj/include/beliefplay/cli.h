#ifndef BELIEFPLAY_CLI_H_
#define BELIEFPLAY_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "beliefplay/analysis.h"
#include "beliefplay/dynamics.h"
#include "beliefplay/games.h"

namespace beliefplay {

using Json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRunError = 2;
inline constexpr int kExitIo = 3;

// Every validation problem found in a config document.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GameConfig {
  std::string id;
  GameOptions options;
  // affine_game only
  std::vector<std::vector<std::vector<double>>> alpha;
  std::vector<std::vector<double>> beta;
  std::vector<double> affine_sigma;
  std::size_t true_index = 0;
};

struct InitConfig {
  enum class Kind { kDefault, kExplicit, kRandom };
  Kind theta_kind = Kind::kDefault;
  Kind q_kind = Kind::kDefault;
  std::vector<double> theta;
  std::vector<std::vector<double>> q;
  std::optional<std::uint64_t> seed;
};

struct StabilityConfig {
  std::string cluster = "complete_info";
  double eps = 1.0 / 3.0;
  double delta = 1.0;
  std::size_t n_probe = 1000;
  double eps_hat = 0.3;
  double gamma = 0.9;
  LocalStabilityOptions local;
};

struct RateConfig {
  std::size_t parameter = 0;
  long burn_in = 1000;
};

struct FixedPointConfig {
  EnumerationOptions enumeration;
  std::size_t global_runs = 50;
  long global_horizon = 20000;
  double xi = 0.1;
  std::size_t n_probe = 200;
};

struct ExperimentConfig {
  GameConfig game;
  UpdateRule rule;
  UpdateSchedule schedule = UpdateSchedule::every_stage();
  Estimator estimator = Estimator::kBayes;
  InitConfig init;
  long horizon = 10000;
  std::vector<std::uint64_t> seeds{0};
  RunOptions run;
  RateConfig rate;
  FixedPointConfig fixed_points;
  StabilityConfig stability;
  std::size_t threads = 1;
  std::string output_dir = "out";
  Json document;  // canonical form used for the config hash
};

ExperimentConfig parse_config(const Json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Replaces the seed list with a single seed and refreshes the document.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

// FNV-1a 64 over the canonical JSON of the config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

GamePtr build_game(const ExperimentConfig& config);
InitialState build_init(const ExperimentConfig& config, const GameModel& game,
                        std::uint64_t run_seed);
Trajectory run_experiment(const ExperimentConfig& config, const GameModel& game,
                          std::uint64_t run_seed);

Json certificate_json(const FixedPointCertificate& c);
Json cluster_json(const FixedPointCluster& c);
Json thresholds_json(const StabilityThresholds& th);
Json condition_json(const ConditionEvidence& ev);
Json stability_json(const StabilityReport& rep);
Json summary_json(const Trajectory& traj, const ExperimentConfig& config,
                  std::uint64_t run_seed, const FixedPointEnumeration* fps);

Json fixed_points_report(const ExperimentConfig& config, const GameModel& game);
Json stability_report(const ExperimentConfig& config, const GameModel& game);
Json rate_report(const ExperimentConfig& config, const GameModel& game);

int cmd_run(const ExperimentConfig& config, std::ostream& err);
int cmd_fixed_points(const ExperimentConfig& config, std::ostream& err);
int cmd_stability(const ExperimentConfig& config, std::ostream& err);
int cmd_rate(const ExperimentConfig& config, std::ostream& err);

struct CliOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
};

// Loads the config, applies overrides and dispatches; returns the exit code.
int run_command(const std::string& command, const std::string& config_path,
                const CliOverrides& overrides, std::ostream& err);

}  // namespace beliefplay

#endif  // BELIEFPLAY_CLI_H_
