#pragma once

#include <cstddef>
#include <vector>

#include "mbrl/belief.hpp"
#include "mbrl/domain.hpp"
#include "mbrl/rng.hpp"
#include "mbrl/transition_model.hpp"

namespace mbrl {

struct LearnerConfig {
  /// Parameter samples drawn per updated Dirichlet entry.
  std::size_t theta_samples = 1000;
  /// Entries whose rows carry less belief mass than this are left alone.
  double relevance_threshold = 1e-4;
};

struct LearnerState {
  TransitionModel model;
  BeliefState belief;
  LearnerConfig config;
  /// Updates skipped because every importance weight was zero.
  std::size_t warnings = 0;
};

struct UpdateStats {
  std::size_t entries_updated = 0;
  std::size_t entries_flat = 0;
  std::size_t entries_degenerate = 0;
};

/// P(o | a_u') for every user act: the listed confidence, or the list's
/// residual mass split uniformly over unlisted acts.
std::vector<double> observation_likelihood(const NBestList& o, std::size_t user_acts);

/// Filters the belief through one turn with the model's predictive means.
/// Throws ZeroLikelihoodObservation when the observation is impossible.
BeliefState belief_update(const TransitionModel& model, const BeliefState& belief, std::size_t action,
                          const NBestList& o);
BeliefState belief_update(const LearnerState& ls, std::size_t action, const NBestList& o);

/// Importance-sampled posterior update of every Dirichlet entry touched by the
/// turn, each refitted independently against the pre-update belief. Entries
/// with all-zero weights keep their prior and increment `warnings`.
TransitionModel parameter_update(LearnerState& ls, std::size_t action, const NBestList& o, Rng& rng,
                                 UpdateStats* stats = nullptr);

}  // namespace mbrl
