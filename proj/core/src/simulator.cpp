#include "mbrl/simulator.hpp"

#include "mbrl/errors.hpp"

namespace mbrl {

namespace {

std::size_t draw(const double* probs, std::size_t k, Rng& rng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    u -= probs[i];
    if (u < 0.0) return i;
  }
  // Skip trailing zero-probability values left by rounding.
  std::size_t last = k - 1;
  while (last > 0 && probs[last] == 0.0) --last;
  return last;
}

std::size_t draw(const std::vector<double>& weights, Rng& rng) {
  std::vector<double> p = weights;
  normalize(p);
  return draw(p.data(), p.size(), rng);
}

}  // namespace

Simulator::Simulator(const DomainSpec& d) : Simulator(d, DirichletParams(d.simulator.noise_alpha)) {}

Simulator::Simulator(const DomainSpec& d, DirichletParams noise)
    : domain_(&d), truth_(TransitionModel::ground_truth(d)), noise_(std::move(noise)) {
  if (noise_.size() != 3) throw ValidationError("simulator noise must have three categories");
  const auto& cfg = d.simulator;
  max_turns_ = cfg.max_turns;
  initial_intentions_ = cfg.initial_intentions.empty() ? std::vector<double>(d.intention_count(), 1.0)
                                                       : cfg.initial_intentions;
  terminal_.assign(d.intention_count(), false);
  for (const auto& t : cfg.terminal_intentions) terminal_[d.intentions.at(t)] = true;
  for (std::size_t i = 0; i < d.intention_count(); ++i) {
    if (terminal_[i]) initial_intentions_[i] = 0.0;
  }
  for (std::size_t k = 0; k < d.contexts.variables().size(); ++k) {
    initial_context_.push_back(cfg.initial_context.empty()
                                   ? std::vector<double>(d.contexts.variables()[k].values.size(), 1.0)
                                   : cfg.initial_context[k]);
  }
  task_completed_ = Condition(cfg.task_completed);
}

SimulatorState Simulator::reset(Rng& rng) const {
  SimulatorState s;
  s.intention = draw(initial_intentions_, rng);
  std::vector<std::size_t> values;
  for (const auto& w : initial_context_) values.push_back(draw(w, rng));
  s.context = domain_->contexts.encode(values);
  return s;
}

std::vector<double> Simulator::actual_next_act_vector(const SimulatorState& s, std::size_t a) const {
  const std::size_t ni = domain_->intention_count();
  const std::size_t nu = domain_->user_act_count();
  std::vector<double> out(nu, 0.0);
  const double* goal = truth_.goal_row(a, s.intention, s.context);
  for (std::size_t ip = 0; ip < ni; ++ip) {
    if (goal[ip] == 0.0) continue;
    const double* act = truth_.act_row(a, ip, s.context);
    for (std::size_t u = 0; u < nu; ++u) out[u] += goal[ip] * act[u];
  }
  normalize(out);
  return out;
}

Distribution Simulator::actual_next_act_distribution(const SimulatorState& s, std::size_t a) const {
  return Distribution(domain_->user_acts.labels(), actual_next_act_vector(s, a));
}

StepResult Simulator::step(const SimulatorState& s, std::size_t a, Rng& rng) const {
  const DomainSpec& d = *domain_;
  if (a >= d.action_count()) throw ValidationError("machine action index out of range");
  const std::size_t ni = d.intention_count();
  const std::size_t nu = d.user_act_count();

  StepResult r;
  r.next = s;
  const std::size_t next_intention = draw(truth_.goal_row(a, s.intention, s.context), ni, rng);
  r.user_act = draw(truth_.act_row(a, next_intention, s.context), nu, rng);

  const auto quality = noise_.sample_vector(rng);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < quality[2] || nu < 2) {
    r.outcome = RecognitionOutcome::None;
  } else {
    const double q = quality[0] / (quality[0] + quality[1]);
    std::size_t wrong = std::uniform_int_distribution<std::size_t>(0, nu - 2)(rng);
    if (wrong >= r.user_act) ++wrong;
    const bool correct = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < q;
    r.outcome = correct ? RecognitionOutcome::Correct : RecognitionOutcome::Incorrect;
    const std::size_t first = correct ? r.user_act : wrong;
    const std::size_t second = correct ? wrong : r.user_act;
    std::vector<NBestList::Entry> entries;
    if (q > 0.0) entries.push_back({first, q});
    if (q < 1.0) entries.push_back({second, 1.0 - q});
    r.nbest = NBestList(std::move(entries));
  }

  const VariableEnv env = d.env(a, s.intention, DomainSpec::npos, s.context);
  if (task_completed_.evaluate(env)) {
    r.task_completed = true;
    ++r.next.tasks_done;
  }
  // Executed actions change the perceived context.
  std::vector<std::size_t> values = d.contexts.decode(s.context);
  for (const auto& effect : d.simulator.context_effects) {
    TemplateBindings bindings;
    if (!effect.condition.evaluate(env, bindings)) continue;
    for (const auto& [var, value] : effect.assignments) {
      const std::size_t k = *d.contexts.variable_index(var);
      const std::string label = substitute(parse_pattern(value), env, bindings).str();
      values[k] = d.contexts.variables()[k].values.at(label);
    }
  }
  r.next.context = d.contexts.encode(values);
  r.next.intention = next_intention;
  r.next.turn = s.turn + 1;
  r.next.terminal = terminal_[next_intention] ||
                    (d.simulator.tasks_per_episode > 0 && r.next.tasks_done >= d.simulator.tasks_per_episode);
  return r;
}

bool Simulator::episode_done(const SimulatorState& s) const { return s.terminal || s.turn >= max_turns_; }

}  // namespace mbrl
