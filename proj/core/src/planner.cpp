#include "mbrl/planner.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "mbrl/errors.hpp"

namespace mbrl {

void PlanConfig::validate() const {
  if (horizon < 1) throw ValidationError("planner horizon must be at least 1");
  if (obs_top_k < 1) throw ValidationError("planner obs_top_k must be at least 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("planner gamma must lie in [0,1]");
  if (!(planner_noise >= 0.0 && planner_noise <= 1.0)) throw ValidationError("planner noise must lie in [0,1]");
}

NBestList ObservationBranch::nbest() const {
  if (user_act == static_cast<std::size_t>(-1)) return NBestList{};
  return NBestList({{user_act, 1.0}});
}

struct Planner::Clock {
  std::chrono::steady_clock::time_point end;
  bool expired() const { return std::chrono::steady_clock::now() >= end; }
};

namespace {

struct Timeout {};

}  // namespace

Planner::Planner(RewardModel rewards, PlanConfig config) : rewards_(std::move(rewards)), config_(config) {
  config_.validate();
}

double Planner::observation_probability(std::size_t o, std::size_t u, std::size_t user_acts) const {
  const double eps = config_.planner_noise;
  return o == u ? 1.0 - eps : eps / static_cast<double>(user_acts);
}

std::vector<ObservationBranch> Planner::top_k_observations(const std::vector<double>& predicted, std::size_t a,
                                                           std::size_t k, const TransitionModel& model) const {
  const std::size_t nu = model.structure().user_acts();
  const auto acts = model.act_marginal(predicted, a);
  std::vector<ObservationBranch> all(nu + 1);
  for (std::size_t o = 0; o <= nu; ++o) {
    all[o].user_act = o == nu ? static_cast<std::size_t>(-1) : o;
    double p = 0.0;
    for (std::size_t u = 0; u < nu; ++u) p += observation_probability(o, u, nu) * acts[u];
    all[o].probability = p;
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const ObservationBranch& x, const ObservationBranch& y) { return x.probability > y.probability; });
  all.resize(std::min(k, all.size()));
  double total = 0.0;
  for (const auto& o : all) total += o.probability;
  if (total > 0.0) {
    for (auto& o : all) o.probability /= total;
  }
  return all;
}

double Planner::best_value(const std::vector<double>& joint, std::size_t h, const TransitionModel& model,
                           const Clock* clock) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < rewards_.action_count(); ++a) {
    best = std::max(best, q_recursive(joint, a, h, model, clock));
  }
  return best;
}

double Planner::q_recursive(const std::vector<double>& joint, std::size_t a, std::size_t h,
                            const TransitionModel& model, const Clock* clock) const {
  if (clock != nullptr && clock->expired()) throw Timeout{};
  double q = rewards_.belief_reward(joint, a);
  if (h <= 1 || config_.gamma == 0.0) return q;

  const auto& s = model.structure();
  const std::size_t nu = s.user_acts();
  const std::size_t ni = s.intentions();
  const std::size_t nc = s.contexts();
  const auto predicted = model.predict_intentions(joint, a);
  const auto branches = top_k_observations(predicted, a, config_.obs_top_k, model);

  // P(o | i', c) for each selected observation.
  double future = 0.0;
  std::vector<double> next(predicted.size());
  for (const auto& br : branches) {
    if (br.probability <= 0.0) continue;
    const std::size_t o = br.user_act == static_cast<std::size_t>(-1) ? nu : br.user_act;
    for (std::size_t ip = 0; ip < ni; ++ip) {
      for (std::size_t c = 0; c < nc; ++c) {
        const double w = predicted[ip * nc + c];
        if (w == 0.0) {
          next[ip * nc + c] = 0.0;
          continue;
        }
        const double* row = model.act_row(a, ip, c);
        double lik = 0.0;
        for (std::size_t u = 0; u < nu; ++u) lik += observation_probability(o, u, nu) * row[u];
        next[ip * nc + c] = w * lik;
      }
    }
    if (!(normalize(next) > 0.0)) continue;
    future += br.probability * best_value(next, h - 1, model, clock);
  }
  return q + config_.gamma * future;
}

double Planner::q_value(const BeliefState& b, std::size_t a, std::size_t h, const TransitionModel& model) const {
  if (h < 1) throw ValidationError("planning depth must be at least 1");
  if (a >= rewards_.action_count()) throw ValidationError("machine action index out of range");
  return q_recursive(b.joint(), a, h, model, nullptr);
}

PlanResult Planner::plan(const BeliefState& b, const TransitionModel& base, Rng& rng) const {
  const std::size_t na = rewards_.action_count();
  if (na == 0) throw ValidationError("no machine actions to choose from");
  const TransitionModel model = config_.sample_theta ? base.sampled(rng) : base;

  PlanResult result;
  std::optional<Clock> clock;
  if (config_.deadline) clock = Clock{std::chrono::steady_clock::now() + *config_.deadline};

  // Depth 1 is the immediate reward and always completes.
  result.q.resize(na);
  for (std::size_t a = 0; a < na; ++a) result.q[a] = rewards_.belief_reward(b.joint(), a);
  result.depth = 1;
  const std::size_t first = clock ? 2 : config_.horizon;
  for (std::size_t h = std::max<std::size_t>(first, 2); h <= config_.horizon; ++h) {
    std::vector<double> q(na);
    try {
      for (std::size_t a = 0; a < na; ++a) q[a] = q_recursive(b.joint(), a, h, model, clock ? &*clock : nullptr);
    } catch (const Timeout&) {
      result.truncated = true;
      break;
    }
    result.q = std::move(q);
    result.depth = h;
  }
  result.action = static_cast<std::size_t>(std::max_element(result.q.begin(), result.q.end()) - result.q.begin());
  return result;
}

std::size_t Planner::select_action(const BeliefState& b, const TransitionModel& model, Rng& rng) const {
  return plan(b, model, rng).action;
}

}  // namespace mbrl
