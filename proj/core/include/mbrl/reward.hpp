#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mbrl/belief.hpp"
#include "mbrl/domain.hpp"

namespace mbrl {

/// Tabulated R(s, a_m). Entries are matched in declaration order; the first
/// match wins and unmatched pairs are worth 0.
class RewardModel {
 public:
  RewardModel() = default;
  explicit RewardModel(const DomainSpec& domain);
  /// Table indexed [(action * |I| + intention) * |C| + context].
  RewardModel(std::size_t actions, std::size_t intentions, std::size_t contexts, std::vector<double> table);

  double reward(const DialogueState& s, std::size_t action) const { return reward(action, s.intention, s.context); }
  double reward(std::size_t action, std::size_t intention, std::size_t context) const {
    return table_[(action * intentions_ + intention) * contexts_ + context];
  }
  /// Rewards of one action over (i_u, c) in belief layout.
  std::span<const double> row(std::size_t action) const {
    return {table_.data() + action * intentions_ * contexts_, intentions_ * contexts_};
  }
  double belief_reward(const BeliefState& b, std::size_t action) const;
  double belief_reward(std::span<const double> joint, std::size_t action) const;

  std::size_t action_count() const { return actions_; }
  /// R → scale·R + shift.
  RewardModel affine(double scale, double shift) const;

 private:
  std::size_t actions_ = 0;
  std::size_t intentions_ = 0;
  std::size_t contexts_ = 0;
  std::vector<double> table_;
};

}  // namespace mbrl
