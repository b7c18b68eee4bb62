#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mbrl {

/// A label term such as `Confirm(Move(Left))`, possibly containing template
/// variables (`X`), the wildcard `_`, or state-variable references (`i_u'`).
struct Pattern {
  enum class Kind { Label, TemplateVar, Wildcard, Variable };

  Kind kind = Kind::Label;
  std::string name;
  std::vector<Pattern> args;

  static Pattern label(std::string head, std::vector<Pattern> args = {});

  bool is_concrete() const;
  /// Canonical text; `Confirm(Move(Left))` with no whitespace.
  std::string str() const;

  friend bool operator==(const Pattern&, const Pattern&) = default;
};

/// Parses a single term. Throws ParseError.
Pattern parse_pattern(std::string_view text);

/// Canonical spelling of a concrete label; throws ParseError on malformed or
/// non-concrete text.
std::string canonical_label(std::string_view text);

/// Head of a label (`Confirm` for `Confirm(Move(Left))`).
std::string label_head(std::string_view text);

/// True for the reserved state-variable names: a_m, i_u, i_u', a_u, a_u', c.<name>.
bool is_variable_name(std::string_view name);

using TemplateBindings = std::map<std::string, Pattern>;

/// Values for the state variables visible to a condition. Unset pointers mean
/// the variable is not available in this evaluation context.
struct VariableEnv {
  const Pattern* machine_action = nullptr;
  const Pattern* intention = nullptr;
  const Pattern* next_intention = nullptr;
  const Pattern* user_act = nullptr;
  const Pattern* next_user_act = nullptr;
  std::vector<std::pair<std::string, const Pattern*>> context;

  const Pattern* lookup(const std::string& variable) const;
};

/// Substitutes variables and bound template variables; the result must be
/// concrete or an InstantiationError is thrown.
Pattern substitute(const Pattern& pattern, const VariableEnv& env, const TemplateBindings& bindings);

struct ConditionNode;

/// Boolean formula over state variables: `=`, `!=`, `in {..}`, `&&`, `||`,
/// `!` (also `and`/`or`/`not`), `true`, `false`. Template variables are bound
/// by the first positive equality in which they occur.
class Condition {
 public:
  Condition();
  explicit Condition(std::string_view text);

  /// Evaluates under `env`; on success the bindings made along the satisfying
  /// branch are left in `bindings`.
  bool evaluate(const VariableEnv& env, TemplateBindings& bindings) const;
  bool evaluate(const VariableEnv& env) const;

  const std::string& text() const { return text_; }
  /// State variables referenced anywhere in the formula.
  const std::set<std::string>& variables() const { return variables_; }
  /// Template variables bound on every satisfying branch.
  const std::set<std::string>& bound_templates() const { return bound_; }
  /// Every comparison atom as (lhs, rhs); `in` contributes one pair per option.
  std::vector<std::pair<Pattern, Pattern>> comparisons() const;

 private:
  std::string text_;
  std::shared_ptr<const ConditionNode> root_;
  std::set<std::string> variables_;
  std::set<std::string> bound_;
};

/// State variables referenced by a pattern.
void collect_variables(const Pattern& pattern, std::set<std::string>& out);
void collect_templates(const Pattern& pattern, std::set<std::string>& out);

}  // namespace mbrl
