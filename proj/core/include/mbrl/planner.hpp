#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <vector>

#include "mbrl/belief.hpp"
#include "mbrl/reward.hpp"
#include "mbrl/rng.hpp"
#include "mbrl/transition_model.hpp"

namespace mbrl {

struct PlanConfig {
  std::size_t horizon = 2;
  double gamma = 0.95;
  /// Values above |user_acts| + 1 disable pruning.
  std::size_t obs_top_k = 32;
  std::optional<std::chrono::microseconds> deadline;
  /// Confusion mass ε of the planner's observation model.
  double planner_noise = 0.1;
  /// Plan against one θ draw instead of the posterior means.
  bool sample_theta = false;

  /// Throws ValidationError.
  void validate() const;
};

/// A canonical observation: a point-mass N-best on `user_act`, or the empty
/// list when `user_act` is npos.
struct ObservationBranch {
  std::size_t user_act = static_cast<std::size_t>(-1);
  double probability = 0.0;
  NBestList nbest() const;
};

struct PlanResult {
  std::size_t action = 0;
  std::vector<double> q;
  /// Deepest horizon whose estimates were completed.
  std::size_t depth = 0;
  bool truncated = false;
};

/// Depth-limited forward search over canonical observations.
class Planner {
 public:
  Planner(RewardModel rewards, PlanConfig config);

  const PlanConfig& config() const { return config_; }
  const RewardModel& rewards() const { return rewards_; }

  /// Q(b, a, h) without a deadline.
  double q_value(const BeliefState& b, std::size_t action, std::size_t h, const TransitionModel& model) const;

  /// The k most probable observations after `action` from the predicted joint
  /// over (i_u', c), renormalized over the selection. Ties keep act order with
  /// the empty observation last.
  std::vector<ObservationBranch> top_k_observations(const std::vector<double>& predicted, std::size_t action,
                                                    std::size_t k, const TransitionModel& model) const;

  /// P(o | a_u') of the planner's observation model; `o` = |A_u| is empty.
  double observation_probability(std::size_t o, std::size_t user_act, std::size_t user_acts) const;

  PlanResult plan(const BeliefState& b, const TransitionModel& model, Rng& rng) const;
  /// argmax_a Q(b, a, horizon); ties go to the lowest action index.
  std::size_t select_action(const BeliefState& b, const TransitionModel& model, Rng& rng) const;

 private:
  struct Clock;
  double q_recursive(const std::vector<double>& joint, std::size_t action, std::size_t h, const TransitionModel& model,
                     const Clock* clock) const;
  double best_value(const std::vector<double>& joint, std::size_t h, const TransitionModel& model,
                    const Clock* clock) const;

  RewardModel rewards_;
  PlanConfig config_;
};

}  // namespace mbrl
