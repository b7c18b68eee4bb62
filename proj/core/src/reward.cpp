#include "mbrl/reward.hpp"

#include "mbrl/errors.hpp"

namespace mbrl {

RewardModel::RewardModel(const DomainSpec& d)
    : actions_(d.action_count()), intentions_(d.intention_count()), contexts_(d.context_count()) {
  table_.assign(actions_ * intentions_ * contexts_, 0.0);
  for (std::size_t a = 0; a < actions_; ++a) {
    for (std::size_t i = 0; i < intentions_; ++i) {
      for (std::size_t c = 0; c < contexts_; ++c) {
        const VariableEnv env = d.env(a, i, DomainSpec::npos, c);
        for (const auto& entry : d.rewards) {
          if (entry.condition.evaluate(env)) {
            table_[(a * intentions_ + i) * contexts_ + c] = entry.value;
            break;
          }
        }
      }
    }
  }
}

RewardModel::RewardModel(std::size_t actions, std::size_t intentions, std::size_t contexts, std::vector<double> table)
    : actions_(actions), intentions_(intentions), contexts_(contexts), table_(std::move(table)) {
  if (table_.size() != actions_ * intentions_ * contexts_) throw ValidationError("reward table has the wrong size");
}

double RewardModel::belief_reward(std::span<const double> joint, std::size_t action) const {
  const auto r = row(action);
  double sum = 0.0;
  for (std::size_t k = 0; k < joint.size(); ++k) sum += joint[k] * r[k];
  return sum;
}

double RewardModel::belief_reward(const BeliefState& b, std::size_t action) const {
  return belief_reward(b.joint(), action);
}

RewardModel RewardModel::affine(double scale, double shift) const {
  RewardModel out = *this;
  for (double& r : out.table_) r = scale * r + shift;
  return out;
}

}  // namespace mbrl
