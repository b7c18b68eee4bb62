#pragma once

#include <cstddef>
#include <vector>

#include "mbrl/dirichlet.hpp"
#include "mbrl/domain.hpp"
#include "mbrl/rng.hpp"
#include "mbrl/transition_model.hpp"

namespace mbrl {

struct SimulatorState {
  std::size_t intention = 0;
  std::size_t context = 0;
  std::size_t turn = 0;
  std::size_t tasks_done = 0;
  bool terminal = false;
};

enum class RecognitionOutcome { Correct, Incorrect, None };

struct StepResult {
  std::size_t user_act = 0;
  NBestList nbest;
  RecognitionOutcome outcome = RecognitionOutcome::None;
  bool task_completed = false;
  SimulatorState next;
};

/// Ground-truth user and recognizer. Dynamics come from the domain's
/// simulator rules; every turn draws (p_correct, p_incorrect, p_none) from the
/// noise Dirichlet.
class Simulator {
 public:
  explicit Simulator(const DomainSpec& domain);
  Simulator(const DomainSpec& domain, DirichletParams noise);

  const TransitionModel& truth() const { return truth_; }
  const DirichletParams& noise() const { return noise_; }
  std::size_t max_turns() const { return max_turns_; }

  SimulatorState reset(Rng& rng) const;
  StepResult step(const SimulatorState& state, std::size_t action, Rng& rng) const;
  /// Exact P(a_u') given the hidden intention and context.
  Distribution actual_next_act_distribution(const SimulatorState& state, std::size_t action) const;
  std::vector<double> actual_next_act_vector(const SimulatorState& state, std::size_t action) const;
  bool episode_done(const SimulatorState& state) const;

 private:
  const DomainSpec* domain_;
  TransitionModel truth_;
  DirichletParams noise_;
  std::size_t max_turns_ = 20;
  std::vector<double> initial_intentions_;
  std::vector<std::vector<double>> initial_context_;
  std::vector<bool> terminal_;
  Condition task_completed_;
};

}  // namespace mbrl
