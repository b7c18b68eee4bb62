#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mbrl/domain.hpp"
#include "mbrl/learner.hpp"
#include "mbrl/planner.hpp"
#include "mbrl/reward.hpp"
#include "mbrl/simulator.hpp"

namespace mbrl {

/// KL(p ‖ q) in nats; q is smoothed with ε and renormalized, 0·ln 0 = 0.
double kl_divergence(std::span<const double> p, std::span<const double> q, double epsilon = 1e-6);
/// Throws ValidationError when the supports differ.
double kl_divergence(const Distribution& p, const Distribution& q, double epsilon = 1e-6);

struct TurnRecord {
  std::size_t turn = 0;
  std::size_t action = 0;
  std::size_t intention = 0;
  std::size_t context = 0;
  std::size_t user_act = 0;
  RecognitionOutcome outcome = RecognitionOutcome::None;
  NBestList nbest;
  double reward = 0.0;
  double kl = 0.0;
  /// Belief mass on the true intention before the turn.
  double belief_true = 0.0;
};

struct EpisodeRecord {
  std::size_t run = 0;
  std::size_t episode = 0;
  double total_return = 0.0;
  double mean_kl = 0.0;
  std::size_t turns = 0;
  double wall_ms = 0.0;
  /// Non-empty when a component error aborted the episode.
  std::string error;
  std::vector<TurnRecord> trace;
};

using Policy = std::function<std::size_t(const BeliefState&, const TransitionModel&, Rng&)>;

struct EpisodeOptions {
  bool learn = true;
  bool record_trace = false;
  bool record_wall_time = false;
  /// Replaces the planner when set.
  Policy policy;
};

/// Plays one episode: select → score KL → step → reward → parameter and
/// belief update, until the simulator ends the episode. The learner's model
/// carries over between calls.
EpisodeRecord run_episode(const DomainSpec& domain, LearnerState& learner, const Planner& planner,
                          const Simulator& simulator, Rng& rng, const EpisodeOptions& options = {});

struct ExperimentConfig {
  std::filesystem::path domain_path;
  ModelKind model = ModelKind::Multinomial;
  std::size_t runs = 1;
  std::size_t episodes = 1;
  PlanConfig plan;
  LearnerConfig learner;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::optional<std::filesystem::path> trace_dir;
  /// 0 means one worker per available core.
  std::size_t workers = 0;
  bool record_wall_time = false;

  void validate() const;
};

struct AggregateRow {
  std::size_t episode = 0;
  double mean_return = 0.0;
  double se_return = 0.0;
  double mean_kl = 0.0;
  double se_kl = 0.0;
};

struct ExperimentResult {
  /// Ordered by (run, episode).
  std::vector<EpisodeRecord> records;
  std::vector<AggregateRow> aggregate;
  bool interrupted = false;
};

/// Set asynchronously (e.g. from a signal handler) to stop after the current
/// episodes; completed records are still written.
std::atomic<bool>& interrupt_flag();

ExperimentResult run_experiment(const DomainSpec& domain, const ExperimentConfig& config);
/// Loads the domain, runs, and writes `out` plus its aggregate file.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::vector<AggregateRow> aggregate(const std::vector<EpisodeRecord>& records);
std::filesystem::path aggregate_path(const std::filesystem::path& out);

void write_detail_csv(std::ostream& out, const std::vector<EpisodeRecord>& records);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_trace_csv(std::ostream& out, const DomainSpec& domain, const std::vector<EpisodeRecord>& records);

}  // namespace mbrl
