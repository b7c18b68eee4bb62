#include "mbrl/learner.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <boost/math/special_functions/trigamma.hpp>

#include "mbrl/errors.hpp"

namespace mbrl {

std::vector<double> observation_likelihood(const NBestList& o, std::size_t user_acts) {
  std::vector<double> lik(user_acts, 0.0);
  std::vector<bool> listed(user_acts, false);
  for (const auto& e : o.entries()) {
    if (e.user_act >= user_acts) throw ValidationError("N-best entry names an unknown user act");
    lik[e.user_act] = e.probability;
    listed[e.user_act] = true;
  }
  const auto unlisted = static_cast<std::size_t>(std::count(listed.begin(), listed.end(), false));
  if (unlisted > 0) {
    const double share = std::max(0.0, 1.0 - o.total()) / static_cast<double>(unlisted);
    for (std::size_t u = 0; u < user_acts; ++u) {
      if (!listed[u]) lik[u] = share;
    }
  }
  return lik;
}

namespace {

/// M(i', c) = Σ_u P(o|u) P(u | i', a_m, c) over contexts where `mask` has mass.
std::vector<double> act_evidence(const TransitionModel& model, std::size_t a, const std::vector<double>& lik,
                                 const std::vector<double>& context_mass) {
  const auto& s = model.structure();
  const std::size_t ni = s.intentions();
  const std::size_t nc = s.contexts();
  std::vector<double> m(ni * nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    if (context_mass[c] == 0.0) continue;
    for (std::size_t ip = 0; ip < ni; ++ip) {
      const double* row = model.act_row(a, ip, c);
      double sum = 0.0;
      for (std::size_t u = 0; u < lik.size(); ++u) sum += lik[u] * row[u];
      m[ip * nc + c] = sum;
    }
  }
  return m;
}

/// Posterior E[log θ] for one entry under likelihood θ·lk, estimated by
/// importance sampling from the prior with weights w = θ·lk.
///
/// The numerators w·log θ_j and the normalizer w are adjusted with regression
/// control variates built from θ, log θ and their squares, all of which have
/// closed-form prior means. With fewer than 4 samples per control the plain
/// estimator is used, shifted by the exact prior E[log θ].
bool importance_mean_log(const DirichletParams& prior, const std::vector<double>& lk, std::size_t samples, Rng& rng,
                         std::vector<double>& out) {
  using Eigen::Index;
  const std::size_t k = lk.size();
  const auto ki = static_cast<Index>(k);
  const Index p = 4 * ki - 2;
  const auto n = static_cast<Index>(samples);
  const auto& alpha = prior.alpha();
  const auto exact_log = prior.mean_log();
  const double a0 = prior.total();

  Eigen::MatrixXd g(n, p);
  Eigen::MatrixXd f(n, ki + 1);
  for (Index r = 0; r < n; ++r) {
    const auto theta = prior.sample_vector(rng);
    double w = 0.0;
    for (std::size_t j = 0; j < k; ++j) w += theta[j] * lk[j];
    for (Index j = 0; j < ki; ++j) {
      const double t = theta[static_cast<std::size_t>(j)];
      const double lg = std::log(std::max(t, 1e-300));
      if (j + 1 < ki) {
        g(r, j) = t;
        g(r, ki - 1 + j) = t * t;
      }
      g(r, 2 * ki - 2 + j) = lg;
      g(r, 3 * ki - 2 + j) = lg * lg;
      f(r, j) = w * lg;
    }
    f(r, ki) = w;
  }
  Eigen::VectorXd est = f.colwise().mean().transpose();
  if (!(est(ki) > 0.0)) return false;
  out.assign(k, 0.0);

  if (n < 4 * (p + 1)) {
    const Eigen::VectorXd plain = g.middleCols(2 * ki - 2, ki).colwise().mean().transpose();
    for (Index j = 0; j < ki; ++j) {
      out[static_cast<std::size_t>(j)] = exact_log[static_cast<std::size_t>(j)] + est(j) / est(ki) - plain(j);
    }
    return true;
  }

  Eigen::VectorXd mu(p);
  for (Index j = 0; j < ki; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    if (j + 1 < ki) {
      mu(j) = alpha[jj] / a0;
      mu(ki - 1 + j) = alpha[jj] * (alpha[jj] + 1.0) / (a0 * (a0 + 1.0));
    }
    mu(2 * ki - 2 + j) = exact_log[jj];
    mu(3 * ki - 2 + j) = boost::math::trigamma(alpha[jj]) - boost::math::trigamma(a0) + exact_log[jj] * exact_log[jj];
  }
  const Eigen::RowVectorXd gbar = g.colwise().mean();
  const Eigen::MatrixXd gc = g.rowwise() - gbar;
  const Eigen::MatrixXd fc = f.rowwise() - f.colwise().mean();
  const Eigen::MatrixXd beta = gc.colPivHouseholderQr().solve(fc);
  est -= beta.transpose() * (gbar.transpose() - mu);
  if (!(est(ki) > 0.0)) return false;
  for (Index j = 0; j < ki; ++j) out[static_cast<std::size_t>(j)] = est(j) / est(ki);
  return true;
}

}  // namespace

BeliefState belief_update(const TransitionModel& model, const BeliefState& b, std::size_t a, const NBestList& o) {
  const auto& s = model.structure();
  const auto lik = observation_likelihood(o, s.user_acts());
  auto next = model.predict_intentions(b, a);
  const auto m = act_evidence(model, a, lik, b.context_marginal());
  for (std::size_t k = 0; k < next.size(); ++k) next[k] *= m[k];
  if (!(normalize(next) > 0.0)) throw ZeroLikelihoodObservation("observation has zero likelihood under the belief");
  return BeliefState(b.intention_count(), b.context_count(), std::move(next));
}

BeliefState belief_update(const LearnerState& ls, std::size_t a, const NBestList& o) {
  return belief_update(ls.model, ls.belief, a, o);
}

TransitionModel parameter_update(LearnerState& ls, std::size_t a, const NBestList& o, Rng& rng, UpdateStats* stats) {
  const TransitionModel& model = ls.model;
  const auto& s = model.structure();
  const std::size_t ni = s.intentions();
  const std::size_t nc = s.contexts();
  const std::size_t nu = s.user_acts();
  const auto& b = ls.belief.joint();
  const auto lik = observation_likelihood(o, nu);
  const auto pred = model.predict_intentions(ls.belief, a);
  const auto m = act_evidence(model, a, lik, ls.belief.context_marginal());

  const ParamView means(model.values());
  std::vector<DirichletParams> params = model.params();
  std::vector<double> vertex;
  std::vector<double> row(std::max(ni, nu));
  std::vector<double> lk;
  std::vector<double> mean_log;
  UpdateStats local;

  for (const auto& er : s.touched_by(a)) {
    double relevance = 0.0;
    for (const auto& r : er.rows) {
      relevance += r.family == Family::Goal ? b[r.input * nc + r.context] : pred[r.input * nc + r.context];
    }
    if (relevance <= ls.config.relevance_threshold) continue;

    const std::size_t k = params[er.entry].size();
    vertex.assign(k, 0.0);
    lk.assign(k, 0.0);
    // The turn likelihood is linear in this entry's θ, so it is determined by
    // its values at the simplex vertices (other entries at their means).
    for (std::size_t j = 0; j < k; ++j) {
      std::fill(vertex.begin(), vertex.end(), 0.0);
      vertex[j] = 1.0;
      const ParamView view = means.with_override(er.entry, vertex.data());
      double delta = 0.0;
      for (const auto& r : er.rows) {
        if (r.family == Family::Goal) {
          const double w = b[r.input * nc + r.context];
          if (w == 0.0) continue;
          s.goal_row(a, r.input, r.context, view, row.data());
          const double* base = model.goal_row(a, r.input, r.context);
          double d = 0.0;
          for (std::size_t ip = 0; ip < ni; ++ip) d += (row[ip] - base[ip]) * m[ip * nc + r.context];
          delta += w * d;
        } else {
          const double w = pred[r.input * nc + r.context];
          if (w == 0.0) continue;
          s.act_row(a, r.input, r.context, view, row.data());
          const double* base = model.act_row(a, r.input, r.context);
          double d = 0.0;
          for (std::size_t u = 0; u < nu; ++u) d += (row[u] - base[u]) * lik[u];
          delta += w * d;
        }
      }
      lk[j] = delta;
    }
    double base_lik = 0.0;
    for (std::size_t x = 0; x < pred.size(); ++x) base_lik += pred[x] * m[x];
    for (double& l : lk) l = std::max(0.0, l + base_lik);

    const auto [lo, hi] = std::minmax_element(lk.begin(), lk.end());
    if (*hi <= 0.0) {
      ++ls.warnings;
      ++local.entries_degenerate;
      continue;
    }
    if (*hi - *lo <= 1e-12 * *hi) {
      ++local.entries_flat;
      continue;
    }

    const auto& prior = params[er.entry];
    if (!importance_mean_log(prior, lk, ls.config.theta_samples, rng, mean_log)) {
      ++ls.warnings;
      ++local.entries_degenerate;
      continue;
    }
    try {
      auto fit = fit_dirichlet_from_log_means(mean_log, params[er.entry].alpha());
      params[er.entry] = DirichletParams(fit.params.alpha(), params[er.entry].labels());
      ++local.entries_updated;
    } catch (const FitError&) {
      ++ls.warnings;
      ++local.entries_degenerate;
    }
  }
  if (stats != nullptr) *stats = local;
  return model.with_params(std::move(params));
}

}  // namespace mbrl
