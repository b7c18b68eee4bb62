#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mbrl {

inline constexpr double kNormalizationTolerance = 1e-9;

/// A categorical distribution over an ordered, duplicate-free support.
class Distribution {
 public:
  Distribution() = default;

  /// Throws ValidationError unless probs are nonnegative and sum to 1 (1e-9).
  Distribution(std::vector<std::string> support, std::vector<double> probs);

  /// Normalizes nonnegative weights; throws if they sum to zero.
  static Distribution from_weights(std::vector<std::string> support, std::vector<double> weights);

  static Distribution uniform(std::vector<std::string> support);

  std::size_t size() const { return probs_.size(); }
  const std::vector<std::string>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

  std::optional<std::size_t> index_of(const std::string& label) const;
  double prob(const std::string& label) const;

  /// Total-variation distance; supports must match.
  double total_variation(const Distribution& other) const;

 private:
  std::vector<std::string> support_;
  std::vector<double> probs_;
};

/// In-place normalization; returns the pre-normalization sum.
double normalize(std::span<double> values);

}  // namespace mbrl
