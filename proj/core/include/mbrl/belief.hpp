#pragma once

#include <cstddef>
#include <vector>

#include "mbrl/bayes_net.hpp"
#include "mbrl/domain.hpp"

namespace mbrl {

/// Joint belief over (i_u, c); the user act is integrated out after every
/// turn. Entries are stored at index i * |C| + c.
class BeliefState {
 public:
  BeliefState() = default;
  /// Throws ValidationError unless the joint is nonnegative and sums to one.
  BeliefState(std::size_t intentions, std::size_t contexts, std::vector<double> joint);

  static BeliefState uniform(const DomainSpec& domain);
  static BeliefState uniform_intentions(const DomainSpec& domain, std::size_t context);
  static BeliefState point_mass(const DomainSpec& domain, std::size_t intention, std::size_t context);
  /// λ·a + (1−λ)·b.
  static BeliefState mix(const BeliefState& a, const BeliefState& b, double lambda);

  std::size_t intention_count() const { return intentions_; }
  std::size_t context_count() const { return contexts_; }
  double operator()(std::size_t intention, std::size_t context) const { return joint_[intention * contexts_ + context]; }
  const std::vector<double>& joint() const { return joint_; }

  std::vector<double> intention_marginal() const;
  std::vector<double> context_marginal() const;

  /// Keeps the intention marginal and places all context mass on `context`.
  BeliefState with_observed_context(std::size_t context) const;

  /// Two-node network `c` → `i_u`.
  bayes::Network to_network(const DomainSpec& domain) const;

 private:
  std::size_t intentions_ = 0;
  std::size_t contexts_ = 0;
  std::vector<double> joint_;
};

}  // namespace mbrl
