#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mbrl/distribution.hpp"
#include "mbrl/rng.hpp"

namespace mbrl {

/// Positive pseudo-counts of a Dirichlet over an ordered set of categories.
class DirichletParams {
 public:
  DirichletParams() = default;
  /// Throws ValidationError unless every alpha is positive and finite. Labels
  /// default to "0", "1", ...
  explicit DirichletParams(std::vector<double> alpha, std::vector<std::string> labels = {});

  static DirichletParams symmetric(std::size_t k, double alpha, std::vector<std::string> labels = {});

  std::size_t size() const { return alpha_.size(); }
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<std::string>& labels() const { return labels_; }
  double total() const;

  Distribution mean() const;
  std::vector<double> mean_vector() const;
  /// E[log θ_k] = ψ(α_k) − ψ(α_0).
  std::vector<double> mean_log() const;

  /// α[category] += weight.
  DirichletParams update_counts(std::size_t category, double weight) const;
  DirichletParams update_counts(const std::string& label, double weight) const;

  std::vector<double> sample_vector(Rng& rng) const;
  Distribution sample(Rng& rng) const;

 private:
  std::vector<double> alpha_;
  std::vector<std::string> labels_;
};

struct FitOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 1000;
  double clamp = 1e-10;
};

struct FitResult {
  DirichletParams params;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Weighted maximum-likelihood fit (Minka's fixed point, moment-matching
/// start). Empty `weights` means uniform. Throws FitError on degenerate input.
FitResult fit_dirichlet(const std::vector<std::vector<double>>& samples, std::span<const double> weights = {},
                        const FitOptions& options = {});
FitResult fit_dirichlet(const std::vector<Distribution>& samples, std::span<const double> weights = {},
                        const FitOptions& options = {});

/// Fixed-point iteration from the sufficient statistics E[log p_k] and a
/// starting point.
FitResult fit_dirichlet_from_log_means(std::span<const double> mean_log, std::vector<double> initial,
                                       const FitOptions& options = {});

/// ψ⁻¹ by Newton iteration.
double inverse_digamma(double y);

}  // namespace mbrl
