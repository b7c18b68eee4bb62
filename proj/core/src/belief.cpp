#include "mbrl/belief.hpp"

#include <cmath>
#include <numeric>

#include "mbrl/errors.hpp"

namespace mbrl {

BeliefState::BeliefState(std::size_t intentions, std::size_t contexts, std::vector<double> joint)
    : intentions_(intentions), contexts_(contexts), joint_(std::move(joint)) {
  if (intentions_ == 0 || contexts_ == 0) throw ValidationError("belief needs at least one intention and context");
  if (joint_.size() != intentions_ * contexts_) throw ValidationError("belief has the wrong size");
  double sum = 0.0;
  for (double p : joint_) {
    if (!(p >= 0.0)) throw ValidationError("belief has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormalizationTolerance) throw ValidationError("belief is not normalized");
}

BeliefState BeliefState::uniform(const DomainSpec& d) {
  const std::size_t n = d.intention_count() * d.context_count();
  return BeliefState(d.intention_count(), d.context_count(), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

BeliefState BeliefState::uniform_intentions(const DomainSpec& d, std::size_t context) {
  std::vector<double> joint(d.intention_count() * d.context_count(), 0.0);
  for (std::size_t i = 0; i < d.intention_count(); ++i) {
    joint[i * d.context_count() + context] = 1.0 / static_cast<double>(d.intention_count());
  }
  return BeliefState(d.intention_count(), d.context_count(), std::move(joint));
}

BeliefState BeliefState::point_mass(const DomainSpec& d, std::size_t intention, std::size_t context) {
  std::vector<double> joint(d.intention_count() * d.context_count(), 0.0);
  joint.at(intention * d.context_count() + context) = 1.0;
  return BeliefState(d.intention_count(), d.context_count(), std::move(joint));
}

BeliefState BeliefState::mix(const BeliefState& a, const BeliefState& b, double lambda) {
  if (a.intentions_ != b.intentions_ || a.contexts_ != b.contexts_) throw ValidationError("belief shapes differ");
  std::vector<double> joint(a.joint_.size());
  for (std::size_t k = 0; k < joint.size(); ++k) joint[k] = lambda * a.joint_[k] + (1.0 - lambda) * b.joint_[k];
  normalize(joint);
  return BeliefState(a.intentions_, a.contexts_, std::move(joint));
}

std::vector<double> BeliefState::intention_marginal() const {
  std::vector<double> m(intentions_, 0.0);
  for (std::size_t i = 0; i < intentions_; ++i) {
    for (std::size_t c = 0; c < contexts_; ++c) m[i] += (*this)(i, c);
  }
  return m;
}

std::vector<double> BeliefState::context_marginal() const {
  std::vector<double> m(contexts_, 0.0);
  for (std::size_t i = 0; i < intentions_; ++i) {
    for (std::size_t c = 0; c < contexts_; ++c) m[c] += (*this)(i, c);
  }
  return m;
}

BeliefState BeliefState::with_observed_context(std::size_t context) const {
  if (context >= contexts_) throw ValidationError("context index out of range");
  std::vector<double> joint(joint_.size(), 0.0);
  const auto m = intention_marginal();
  for (std::size_t i = 0; i < intentions_; ++i) joint[i * contexts_ + context] = m[i];
  normalize(joint);
  return BeliefState(intentions_, contexts_, std::move(joint));
}

bayes::Network BeliefState::to_network(const DomainSpec& d) const {
  std::vector<std::string> context_labels;
  for (std::size_t c = 0; c < contexts_; ++c) context_labels.push_back(d.contexts.label(c));
  bayes::Network net;
  const auto cm = context_marginal();
  net.add_root("c", context_labels, cm);
  net.add_variable("i_u", d.intentions.labels());
  std::vector<double> table(contexts_ * intentions_);
  for (std::size_t c = 0; c < contexts_; ++c) {
    for (std::size_t i = 0; i < intentions_; ++i) {
      table[c * intentions_ + i] = cm[c] > 0.0 ? (*this)(i, c) / cm[c] : 1.0 / static_cast<double>(intentions_);
    }
  }
  net.set_cpt("i_u", {"c"}, std::move(table));
  return net;
}

}  // namespace mbrl
