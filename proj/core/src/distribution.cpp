#include "mbrl/distribution.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

#include "mbrl/errors.hpp"

namespace mbrl {

namespace {

void check_support(const std::vector<std::string>& support, std::size_t n) {
  if (support.size() != n) {
    throw ValidationError("distribution support has " + std::to_string(support.size()) +
                          " labels but " + std::to_string(n) + " probabilities");
  }
  std::unordered_set<std::string> seen;
  for (const auto& label : support) {
    if (!seen.insert(label).second) {
      throw ValidationError("duplicate label in distribution support: " + label);
    }
  }
}

}  // namespace

Distribution::Distribution(std::vector<std::string> support, std::vector<double> probs)
    : support_(std::move(support)), probs_(std::move(probs)) {
  check_support(support_, probs_.size());
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("distribution has a negative or non-finite entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kNormalizationTolerance) {
    throw ValidationError("distribution sums to " + std::to_string(total));
  }
}

Distribution Distribution::from_weights(std::vector<std::string> support, std::vector<double> weights) {
  check_support(support, weights.size());
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("negative or non-finite weight");
  }
  if (normalize(weights) <= 0.0) throw ValidationError("weights sum to zero");
  return Distribution(std::move(support), std::move(weights));
}

Distribution Distribution::uniform(std::vector<std::string> support) {
  std::vector<double> probs(support.size(), 1.0 / static_cast<double>(support.size()));
  return Distribution(std::move(support), std::move(probs));
}

std::optional<std::size_t> Distribution::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i] == label) return i;
  }
  return std::nullopt;
}

double Distribution::prob(const std::string& label) const {
  auto i = index_of(label);
  return i ? probs_[*i] : 0.0;
}

double Distribution::total_variation(const Distribution& other) const {
  if (other.support_ != support_) throw ValidationError("total variation over mismatched supports");
  double tv = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) tv += std::abs(probs_[i] - other.probs_[i]);
  return 0.5 * tv;
}

double normalize(std::span<double> values) {
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (total > 0.0) {
    for (double& v : values) v /= total;
  }
  return total;
}

}  // namespace mbrl
