#include "mbrl/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "mbrl/errors.hpp"

namespace mbrl {

double kl_divergence(std::span<const double> p, std::span<const double> q, double epsilon) {
  if (p.size() != q.size()) throw ValidationError("KL divergence needs distributions over the same support");
  double qsum = 0.0;
  for (double x : q) qsum += x + epsilon;
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * std::log(p[i] * qsum / (q[i] + epsilon));
  }
  return std::max(kl, 0.0);
}

double kl_divergence(const Distribution& p, const Distribution& q, double epsilon) {
  if (p.support() != q.support()) throw ValidationError("KL divergence needs distributions over the same support");
  return kl_divergence(p.probs(), q.probs(), epsilon);
}

EpisodeRecord run_episode(const DomainSpec& d, LearnerState& ls, const Planner& planner, const Simulator& sim,
                          Rng& rng, const EpisodeOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  EpisodeRecord rec;
  SimulatorState state = sim.reset(rng);
  ls.belief = BeliefState::uniform_intentions(d, state.context);

  auto observe = [&](std::size_t action, const StepResult& step) {
    if (options.learn) {
      TransitionModel updated = parameter_update(ls, action, step.nbest, rng);
      try {
        ls.belief = belief_update(ls, action, step.nbest);
      } catch (const ZeroLikelihoodObservation&) {
        // The turn carries no usable evidence; keep the prior belief.
      }
      ls.model = std::move(updated);
    } else {
      try {
        ls.belief = belief_update(ls, action, step.nbest);
      } catch (const ZeroLikelihoodObservation&) {
      }
    }
    ls.belief = ls.belief.with_observed_context(step.next.context);
  };

  try {
    if (d.simulator.opening_action) {
      const std::size_t opening = d.action_labels.at(*d.simulator.opening_action);
      StepResult step = sim.step(state, opening, rng);
      observe(opening, step);
      state = step.next;
    }
    double kl_sum = 0.0;
    while (!sim.episode_done(state)) {
      const std::size_t action = options.policy ? options.policy(ls.belief, ls.model, rng)
                                                : planner.select_action(ls.belief, ls.model, rng);
      const auto actual = sim.actual_next_act_vector(state, action);
      const auto predicted = ls.model.predict_user_act_vector(ls.belief, action);
      const double kl = kl_divergence(actual, predicted);
      const double reward = planner.rewards().reward(action, state.intention, state.context);
      const double belief_true = ls.belief(state.intention, state.context);
      StepResult step = sim.step(state, action, rng);
      if (options.record_trace) {
        rec.trace.push_back({rec.turns + 1, action, state.intention, state.context, step.user_act, step.outcome,
                             step.nbest, reward, kl, belief_true});
      }
      observe(action, step);
      state = step.next;
      rec.total_return += reward;
      kl_sum += kl;
      ++rec.turns;
    }
    rec.mean_kl = rec.turns > 0 ? kl_sum / static_cast<double>(rec.turns) : 0.0;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  if (options.record_wall_time) {
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw ValidationError("runs must be at least 1");
  if (episodes < 1) throw ValidationError("episodes must be at least 1");
  if (learner.theta_samples < 1) throw ValidationError("theta samples must be at least 1");
  plan.validate();
}

std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

ExperimentResult run_experiment(const DomainSpec& d, const ExperimentConfig& cfg) {
  cfg.validate();
  const RewardModel rewards(d);
  const Planner planner(rewards, cfg.plan);
  const Simulator sim(d);
  const TransitionModel prior = TransitionModel::from_domain(d, cfg.model);

  std::vector<std::vector<EpisodeRecord>> per_run(cfg.runs);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> interrupted{false};
  auto worker = [&] {
    for (std::size_t run = next++; run < cfg.runs; run = next++) {
      Rng rng = derive_stream(cfg.seed, run);
      LearnerState ls{prior, BeliefState::uniform(d), cfg.learner, 0};
      EpisodeOptions options;
      options.record_trace = cfg.trace_dir.has_value();
      options.record_wall_time = cfg.record_wall_time;
      for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
        if (interrupt_flag().load()) {
          interrupted = true;
          return;
        }
        EpisodeRecord rec = run_episode(d, ls, planner, sim, rng, options);
        rec.run = run;
        rec.episode = ep + 1;
        per_run[run].push_back(std::move(rec));
      }
    }
  };
  std::size_t workers = cfg.workers > 0 ? cfg.workers : std::max(1U, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.runs);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  result.interrupted = interrupted.load();
  for (auto& run : per_run) {
    for (auto& rec : run) result.records.push_back(std::move(rec));
  }
  result.aggregate = aggregate(result.records);
  return result;
}

namespace {

std::string format(const char* fmt, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

const char* outcome_name(RecognitionOutcome o) {
  switch (o) {
    case RecognitionOutcome::Correct:
      return "correct";
    case RecognitionOutcome::Incorrect:
      return "incorrect";
    case RecognitionOutcome::None:
      break;
  }
  return "none";
}

template <typename Write>
void write_file(const std::filesystem::path& path, Write write) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write(out);
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::vector<EpisodeRecord>& records) {
  std::map<std::size_t, std::vector<const EpisodeRecord*>> by_episode;
  for (const auto& r : records) by_episode[r.episode].push_back(&r);
  std::vector<AggregateRow> rows;
  for (const auto& [episode, recs] : by_episode) {
    AggregateRow row;
    row.episode = episode;
    const double n = static_cast<double>(recs.size());
    for (const auto* r : recs) {
      row.mean_return += r->total_return / n;
      row.mean_kl += r->mean_kl / n;
    }
    if (recs.size() > 1) {
      double vr = 0.0;
      double vk = 0.0;
      for (const auto* r : recs) {
        vr += (r->total_return - row.mean_return) * (r->total_return - row.mean_return);
        vk += (r->mean_kl - row.mean_kl) * (r->mean_kl - row.mean_kl);
      }
      row.se_return = std::sqrt(vr / (n - 1.0) / n);
      row.se_kl = std::sqrt(vk / (n - 1.0) / n);
    }
    rows.push_back(row);
  }
  return rows;
}

std::filesystem::path aggregate_path(const std::filesystem::path& out) {
  std::filesystem::path p = out;
  p.replace_filename(out.stem().string() + "_aggregate" + out.extension().string());
  return p;
}

void write_detail_csv(std::ostream& out, const std::vector<EpisodeRecord>& records) {
  out << "run,episode,return,mean_kl,turns,wall_ms\n";
  for (const auto& r : records) {
    out << r.run << ',' << r.episode << ',' << format("%.6f", r.total_return) << ',' << format("%.6f", r.mean_kl)
        << ',' << r.turns << ',' << format("%.3f", r.wall_ms) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "episode,mean_return,se_return,mean_kl,se_kl\n";
  for (const auto& r : rows) {
    out << r.episode << ',' << format("%.6f", r.mean_return) << ',' << format("%.6f", r.se_return) << ','
        << format("%.6f", r.mean_kl) << ',' << format("%.6f", r.se_kl) << '\n';
  }
}

void write_trace_csv(std::ostream& out, const DomainSpec& d, const std::vector<EpisodeRecord>& records) {
  out << "run,episode,turn,action,intention,context,user_act,outcome,nbest,reward,kl,belief_true\n";
  for (const auto& r : records) {
    for (const auto& t : r.trace) {
      std::string nbest;
      for (const auto& e : t.nbest.entries()) {
        if (!nbest.empty()) nbest += ';';
        nbest += d.user_acts[e.user_act] + ":" + format("%.4f", e.probability);
      }
      out << r.run << ',' << r.episode << ',' << t.turn << ',' << csv_field(d.action_labels[t.action]) << ','
          << csv_field(d.intentions[t.intention]) << ',' << csv_field(d.contexts.label(t.context)) << ','
          << csv_field(d.user_acts[t.user_act]) << ',' << outcome_name(t.outcome) << ',' << csv_field(nbest) << ','
          << format("%.6f", t.reward) << ',' << format("%.6f", t.kl) << ',' << format("%.6f", t.belief_true)
          << '\n';
    }
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const DomainSpec d = load_domain(cfg.domain_path);
  ExperimentResult result = run_experiment(d, cfg);
  if (!cfg.out.empty()) {
    write_file(cfg.out, [&](std::ostream& o) { write_detail_csv(o, result.records); });
    write_file(aggregate_path(cfg.out), [&](std::ostream& o) { write_aggregate_csv(o, result.aggregate); });
  }
  if (cfg.trace_dir) {
    std::map<std::size_t, std::vector<EpisodeRecord>> by_run;
    for (const auto& r : result.records) by_run[r.run].push_back(r);
    for (const auto& [run, recs] : by_run) {
      write_file(*cfg.trace_dir / ("run_" + std::to_string(run) + ".csv"),
                 [&](std::ostream& o) { write_trace_csv(o, d, recs); });
    }
  }
  return result;
}

}  // namespace mbrl
