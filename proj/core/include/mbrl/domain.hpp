#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mbrl/condition.hpp"

namespace mbrl {

/// Ordered, duplicate-free vocabulary of canonical labels.
class LabelSet {
 public:
  LabelSet() = default;
  /// Canonicalizes each label; throws ValidationError if empty or duplicated.
  LabelSet(std::vector<std::string> labels, std::string_view what);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const std::string& operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const { return labels_; }
  const Pattern& pattern(std::size_t i) const { return patterns_[i]; }

  std::optional<std::size_t> find(std::string_view label) const;
  /// Throws ValidationError naming the vocabulary and label.
  std::size_t at(std::string_view label) const;

 private:
  std::string what_;
  std::vector<std::string> labels_;
  std::vector<Pattern> patterns_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class ActionKind { Conversational, Physical };

struct MachineAction {
  std::string label;
  /// Head of the label: `Confirm` for `Confirm(Move(Left))`.
  std::string type;
  ActionKind kind = ActionKind::Conversational;
};

struct ContextVariable {
  std::string name;
  LabelSet values;
};

/// Mixed-radix indexing of joint context assignments; the first variable is
/// the most significant digit. A domain without context variables has a
/// single (empty) assignment.
class ContextSpace {
 public:
  ContextSpace() = default;
  explicit ContextSpace(std::vector<ContextVariable> vars);

  std::size_t size() const { return size_; }
  const std::vector<ContextVariable>& variables() const { return vars_; }
  std::optional<std::size_t> variable_index(std::string_view name) const;

  std::vector<std::size_t> decode(std::size_t context) const;
  std::size_t encode(const std::vector<std::size_t>& values) const;
  /// `carrying=none,visible=both`.
  std::string label(std::size_t context) const;
  std::size_t value_of(std::size_t context, std::size_t variable) const;

 private:
  std::vector<ContextVariable> vars_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

/// Hidden dialogue state ⟨a_u, i_u, c⟩ as vocabulary indices.
struct DialogueState {
  std::size_t user_act = 0;
  std::size_t intention = 0;
  std::size_t context = 0;

  friend bool operator==(const DialogueState&, const DialogueState&) = default;
};

/// One recognizer hypothesis list. Probabilities lie in (0,1] and sum to at
/// most one; an empty list means nothing was recognized.
class NBestList {
 public:
  struct Entry {
    std::size_t user_act;
    double probability;
  };

  NBestList() = default;
  /// Throws ValidationError when the invariants do not hold.
  explicit NBestList(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  double total() const;

 private:
  std::vector<Entry> entries_;
};

struct RewardEntry {
  /// Machine-action pattern, e.g. `Execute(X)` or `AskRepeat`.
  std::string action;
  /// Condition over i_u, c and the pattern's template variables.
  std::string when = "true";
  double value = 0.0;
  /// `a_m = <action> && (<when>)`.
  Condition condition;
};

struct PriorOverride {
  enum class Family { Action, Goal };
  Family family = Family::Action;
  std::string when = "true";
  std::string category;
  double alpha = 2.0;
  Condition condition;
  Pattern category_pattern;
};

/// One block of a multinomial CPT family: the action types it covers (empty
/// for all remaining types) and the parents keying its Dirichlet entries.
/// Parents: `i_u'`, `i_u`, `a_m`, `type(a_m)`, `c`, `c.<var>`.
struct MultinomialBlock {
  std::vector<std::string> action_types;
  std::vector<std::string> parents;
};

struct MultinomialConfig {
  std::vector<MultinomialBlock> action_model;
  std::vector<MultinomialBlock> goal_model;
};

struct EffectSpec {
  /// Output value; `*` expands to every value of the output variable.
  std::string value;
  std::optional<double> probability;
  Pattern pattern;
};

struct RuleCaseSpec {
  std::string when;
  Condition condition;
  std::vector<EffectSpec> effects;
  /// Dirichlet parameter supplying the effect probabilities, if any.
  std::optional<std::string> param;
  /// Whether the parameter carries a trailing void category.
  bool void_category = true;
};

struct RuleSpec {
  std::string name;
  /// `a_u'` or `i_u'`.
  std::string output;
  std::vector<RuleCaseSpec> cases;
};

struct RuleParamSpec {
  std::string name;
  std::vector<double> alpha;
};

struct ModelConfig {
  double prior_alpha = 2.0;
  /// Distribution of a_u' under a void effect; empty means uniform.
  std::vector<double> act_prior;
  std::vector<PriorOverride> prior_overrides;
  MultinomialConfig multinomial;
  std::vector<RuleSpec> rules;
  std::vector<RuleParamSpec> rule_params;
};

struct ContextEffect {
  std::string when;
  Condition condition;
  /// Context variable name → value pattern (may use template variables).
  std::vector<std::pair<std::string, std::string>> assignments;
};

struct SimulatorConfig {
  bool present = false;
  /// Ground-truth dynamics in rule form with fixed probabilities.
  std::vector<RuleSpec> rules;
  std::vector<double> act_prior;
  std::vector<double> noise_alpha = {5.4, 0.52, 1.6};
  std::size_t max_turns = 20;
  std::size_t tasks_per_episode = 0;
  std::string task_completed = "false";
  std::vector<std::string> terminal_intentions;
  std::optional<std::string> opening_action;
  std::vector<double> initial_intentions;
  std::vector<std::vector<double>> initial_context;
  std::vector<ContextEffect> context_effects;
};

struct DomainSpec {
  int schema_version = 1;
  std::string name;
  LabelSet intentions;
  LabelSet user_acts;
  std::vector<MachineAction> machine_actions;
  LabelSet action_labels;
  ContextSpace contexts;
  std::vector<RewardEntry> rewards;
  ModelConfig model_config;
  SimulatorConfig simulator;

  std::size_t intention_count() const { return intentions.size(); }
  std::size_t user_act_count() const { return user_acts.size(); }
  std::size_t action_count() const { return machine_actions.size(); }
  std::size_t context_count() const { return contexts.size(); }
  /// |S| = |user_acts| × |intentions| × Π|context vars|.
  std::size_t state_count() const;

  /// Distinct action types in declaration order.
  std::vector<std::string> action_types() const;

  /// Environment binding a_m, i_u, i_u', a_u, a_u' (each optional; pass
  /// npos to leave unset) and the context assignment.
  VariableEnv env(std::size_t action, std::size_t intention, std::size_t next_intention,
                  std::size_t context, std::size_t user_act = npos,
                  std::size_t next_user_act = npos) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Re-runs every invariant check; throws ValidationError.
  void validate() const;
};

DomainSpec parse_domain(std::string_view json_text);
DomainSpec load_domain(const std::filesystem::path& path);
/// Canonical JSON with expanded label lists.
std::string serialize_domain(const DomainSpec& domain);
void save_domain(const DomainSpec& domain, const std::filesystem::path& path);

}  // namespace mbrl
