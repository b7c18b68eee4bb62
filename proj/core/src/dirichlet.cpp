#include "mbrl/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "mbrl/errors.hpp"

namespace mbrl {

namespace {

using FastPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

double digamma(double x) { return boost::math::digamma(x, FastPolicy()); }
double trigamma(double x) { return boost::math::trigamma(x, FastPolicy()); }

std::vector<std::string> default_labels(std::size_t k) {
  std::vector<std::string> labels(k);
  for (std::size_t i = 0; i < k; ++i) labels[i] = std::to_string(i);
  return labels;
}

}  // namespace

DirichletParams::DirichletParams(std::vector<double> alpha, std::vector<std::string> labels)
    : alpha_(std::move(alpha)), labels_(std::move(labels)) {
  if (alpha_.empty()) throw ValidationError("Dirichlet needs at least one category");
  for (double a : alpha_) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("Dirichlet alphas must be positive and finite");
  }
  if (labels_.empty()) labels_ = default_labels(alpha_.size());
  if (labels_.size() != alpha_.size()) throw ValidationError("Dirichlet labels do not match alphas");
}

DirichletParams DirichletParams::symmetric(std::size_t k, double alpha, std::vector<std::string> labels) {
  return DirichletParams(std::vector<double>(k, alpha), std::move(labels));
}

double DirichletParams::total() const { return std::accumulate(alpha_.begin(), alpha_.end(), 0.0); }

std::vector<double> DirichletParams::mean_vector() const {
  const double t = total();
  std::vector<double> m(alpha_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = alpha_[i] / t;
  return m;
}

std::vector<double> DirichletParams::mean_log() const {
  const double psi_total = digamma(total());
  std::vector<double> m(alpha_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = digamma(alpha_[i]) - psi_total;
  return m;
}

Distribution DirichletParams::mean() const { return Distribution::from_weights(labels_, alpha_); }

DirichletParams DirichletParams::update_counts(std::size_t category, double weight) const {
  if (category >= alpha_.size()) throw ValidationError("unknown Dirichlet category " + std::to_string(category));
  if (!(weight >= 0.0)) throw ValidationError("Dirichlet update weight must be nonnegative");
  DirichletParams out = *this;
  out.alpha_[category] += weight;
  return out;
}

DirichletParams DirichletParams::update_counts(const std::string& label, double weight) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ValidationError("unknown Dirichlet category '" + label + "'");
  return update_counts(static_cast<std::size_t>(it - labels_.begin()), weight);
}

std::vector<double> DirichletParams::sample_vector(Rng& rng) const {
  std::vector<double> draw(alpha_.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    std::gamma_distribution<double> gamma(alpha_[i], 1.0);
    draw[i] = gamma(rng);
    sum += draw[i];
  }
  if (sum <= 0.0) {
    // Every gamma draw underflowed; fall back to the largest alpha.
    auto best = std::max_element(alpha_.begin(), alpha_.end()) - alpha_.begin();
    std::fill(draw.begin(), draw.end(), 0.0);
    draw[static_cast<std::size_t>(best)] = 1.0;
    return draw;
  }
  for (double& x : draw) x /= sum;
  return draw;
}

Distribution DirichletParams::sample(Rng& rng) const { return Distribution::from_weights(labels_, sample_vector(rng)); }

double inverse_digamma(double y) {
  // Minka's initialization followed by Newton steps.
  double x = y >= -2.22 ? std::exp(y) + 0.5 : -1.0 / (y + 0.5772156649015329);
  for (int i = 0; i < 6; ++i) {
    x -= (digamma(x) - y) / trigamma(x);
  }
  return x;
}

FitResult fit_dirichlet_from_log_means(std::span<const double> mean_log, std::vector<double> alpha,
                                       const FitOptions& options) {
  const std::size_t k = alpha.size();
  if (k != mean_log.size()) throw FitError("initial alpha has the wrong dimension");
  for (double& a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw FitError("initial alpha must be positive");
  }
  // Newton iteration on the log-likelihood; the Hessian is diagonal plus a
  // rank-one term, so each step is O(k).
  FitResult result;
  std::vector<double> grad(k), q(k), step(k), next(k);
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    const double psi_total = digamma(total);
    const double z = trigamma(total);
    double num = 0.0, den = 1.0 / z;
    for (std::size_t j = 0; j < k; ++j) {
      grad[j] = psi_total - digamma(alpha[j]) + mean_log[j];
      q[j] = -trigamma(alpha[j]);
      num += grad[j] / q[j];
      den += 1.0 / q[j];
    }
    const double b = num / den;
    for (std::size_t j = 0; j < k; ++j) step[j] = (grad[j] - b) / q[j];

    double scale = 1.0;
    for (int halvings = 0;; ++halvings) {
      bool positive = true;
      for (std::size_t j = 0; j < k; ++j) {
        next[j] = alpha[j] - scale * step[j];
        positive = positive && next[j] > 0.0;
      }
      if (positive) break;
      if (halvings == 60) throw FitError("Dirichlet fit diverged; smooth the samples");
      scale *= 0.5;
    }
    double delta = 0.0;
    for (std::size_t j = 0; j < k; ++j) delta = std::max(delta, std::abs(next[j] - alpha[j]) / std::max(1.0, alpha[j]));
    alpha.swap(next);
    result.iterations = it;
    if (!std::isfinite(delta)) throw FitError("Dirichlet fit diverged; smooth the samples");
    if (delta < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  for (double& a : alpha) a = std::max(a, 1e-6);
  result.params = DirichletParams(std::move(alpha));
  return result;
}

FitResult fit_dirichlet(const std::vector<std::vector<double>>& samples, std::span<const double> weights,
                        const FitOptions& options) {
  if (samples.size() < 2) throw FitError("Dirichlet fit needs at least two samples");
  if (!weights.empty() && weights.size() != samples.size()) throw FitError("weights do not match samples");
  const std::size_t k = samples.front().size();
  if (k < 2) throw FitError("Dirichlet fit needs at least two categories");

  double wsum = 0.0;
  std::vector<double> m1(k, 0.0), m2(k, 0.0), mean_log(k, 0.0);
  std::vector<bool> all_zero(k, true), all_one(k, true);
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const auto& s = samples[j];
    if (s.size() != k) throw FitError("samples have inconsistent dimensions");
    const double w = weights.empty() ? 1.0 : weights[j];
    if (!(w >= 0.0)) throw FitError("fit weights must be nonnegative");
    if (w == 0.0) continue;
    double total = 0.0;
    for (double x : s) total += x;
    if (std::abs(total - 1.0) > 1e-6) throw FitError("fit samples must be normalized");
    wsum += w;
    for (std::size_t c = 0; c < k; ++c) {
      const double x = s[c];
      all_zero[c] = all_zero[c] && x <= 0.0;
      all_one[c] = all_one[c] && x >= 1.0;
      m1[c] += w * x;
      m2[c] += w * x * x;
      mean_log[c] += w * std::log(std::max(x, options.clamp));
    }
  }
  if (!(wsum > 0.0)) throw FitError("fit weights are all zero");
  for (std::size_t c = 0; c < k; ++c) {
    if (all_zero[c] || all_one[c]) {
      throw FitError("component " + std::to_string(c) +
                     " is identically 0 or 1 across samples; smooth the samples before fitting");
    }
    m1[c] /= wsum;
    m2[c] /= wsum;
    mean_log[c] /= wsum;
  }

  // Moment matching: precision estimates from each component's variance.
  double log_precision = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double var = m2[c] - m1[c] * m1[c];
    if (var > 1e-300 && m1[c] > 0.0) {
      const double s = (m1[c] - m2[c]) / var;
      if (s > 0.0 && std::isfinite(s)) {
        log_precision += std::log(s);
        ++used;
      }
    }
  }
  const double precision = used > 0 ? std::exp(log_precision / static_cast<double>(used)) : 1e6;
  std::vector<double> initial(k);
  for (std::size_t c = 0; c < k; ++c) initial[c] = std::max(precision * m1[c], 1e-6);
  return fit_dirichlet_from_log_means(mean_log, std::move(initial), options);
}

FitResult fit_dirichlet(const std::vector<Distribution>& samples, std::span<const double> weights,
                        const FitOptions& options) {
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (const auto& d : samples) rows.push_back(d.probs());
  FitResult r = fit_dirichlet(rows, weights, options);
  if (!samples.empty()) r.params = DirichletParams(r.params.alpha(), samples.front().support());
  return r;
}

}  // namespace mbrl
