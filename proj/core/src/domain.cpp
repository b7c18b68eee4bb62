#include "mbrl/domain.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mbrl/errors.hpp"

namespace mbrl {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Vocabulary types

LabelSet::LabelSet(std::vector<std::string> labels, std::string_view what) : what_(what) {
  if (labels.empty()) throw ValidationError(std::string(what) + " must not be empty");
  labels_.reserve(labels.size());
  for (auto& raw : labels) {
    std::string label = canonical_label(raw);
    if (!index_.emplace(label, labels_.size()).second) {
      throw ValidationError("duplicate label '" + label + "' in " + std::string(what));
    }
    patterns_.push_back(parse_pattern(label));
    labels_.push_back(std::move(label));
  }
}

std::optional<std::size_t> LabelSet::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelSet::at(std::string_view label) const {
  if (auto i = find(label)) return *i;
  throw ValidationError("unknown label '" + std::string(label) + "' in " + what_);
}

ContextSpace::ContextSpace(std::vector<ContextVariable> vars) : vars_(std::move(vars)) {
  std::set<std::string> names;
  for (const auto& v : vars_) {
    if (v.name.empty()) throw ValidationError("context variable with empty name");
    if (!names.insert(v.name).second) throw ValidationError("duplicate context variable '" + v.name + "'");
    if (v.values.empty()) throw ValidationError("context variable '" + v.name + "' has no values");
  }
  strides_.assign(vars_.size(), 1);
  size_ = 1;
  for (std::size_t k = vars_.size(); k-- > 0;) {
    strides_[k] = size_;
    size_ *= vars_[k].values.size();
  }
}

std::optional<std::size_t> ContextSpace::variable_index(std::string_view name) const {
  for (std::size_t k = 0; k < vars_.size(); ++k) {
    if (vars_[k].name == name) return k;
  }
  return std::nullopt;
}

std::vector<std::size_t> ContextSpace::decode(std::size_t context) const {
  std::vector<std::size_t> values(vars_.size());
  for (std::size_t k = 0; k < vars_.size(); ++k) values[k] = value_of(context, k);
  return values;
}

std::size_t ContextSpace::encode(const std::vector<std::size_t>& values) const {
  if (values.size() != vars_.size()) throw ValidationError("context assignment has wrong arity");
  std::size_t index = 0;
  for (std::size_t k = 0; k < vars_.size(); ++k) {
    if (values[k] >= vars_[k].values.size()) throw ValidationError("context value out of range");
    index += values[k] * strides_[k];
  }
  return index;
}

std::string ContextSpace::label(std::size_t context) const {
  std::string out;
  for (std::size_t k = 0; k < vars_.size(); ++k) {
    if (k > 0) out += ',';
    out += vars_[k].name + "=" + vars_[k].values[value_of(context, k)];
  }
  return out;
}

std::size_t ContextSpace::value_of(std::size_t context, std::size_t variable) const {
  return (context / strides_[variable]) % vars_[variable].values.size();
}

NBestList::NBestList(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::set<std::size_t> seen;
  double sum = 0.0;
  for (const auto& e : entries_) {
    if (!(e.probability > 0.0 && e.probability <= 1.0)) {
      throw ValidationError("N-best probability must lie in (0,1]");
    }
    if (!seen.insert(e.user_act).second) throw ValidationError("duplicate user act in N-best list");
    sum += e.probability;
  }
  if (sum > 1.0 + 1e-9) throw ValidationError("N-best probabilities sum above one");
}

double NBestList::total() const {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.probability;
  return sum;
}

std::size_t DomainSpec::state_count() const {
  return user_act_count() * intention_count() * context_count();
}

std::vector<std::string> DomainSpec::action_types() const {
  std::vector<std::string> types;
  for (const auto& a : machine_actions) {
    if (std::find(types.begin(), types.end(), a.type) == types.end()) types.push_back(a.type);
  }
  return types;
}

VariableEnv DomainSpec::env(std::size_t action, std::size_t intention, std::size_t next_intention,
                            std::size_t context, std::size_t user_act, std::size_t next_user_act) const {
  VariableEnv e;
  if (action != npos) e.machine_action = &action_labels.pattern(action);
  if (intention != npos) e.intention = &intentions.pattern(intention);
  if (next_intention != npos) e.next_intention = &intentions.pattern(next_intention);
  if (user_act != npos) e.user_act = &user_acts.pattern(user_act);
  if (next_user_act != npos) e.next_user_act = &user_acts.pattern(next_user_act);
  if (context != npos) {
    const auto& vars = contexts.variables();
    e.context.reserve(vars.size());
    for (std::size_t k = 0; k < vars.size(); ++k) {
      e.context.emplace_back(vars[k].name, &vars[k].values.pattern(contexts.value_of(context, k)));
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

const LabelSet* vocabulary_of(const DomainSpec& d, const std::string& variable) {
  if (variable == "a_m") return &d.action_labels;
  if (variable == "i_u" || variable == "i_u'") return &d.intentions;
  if (variable == "a_u" || variable == "a_u'") return &d.user_acts;
  if (variable.compare(0, 2, "c.") == 0) {
    if (auto k = d.contexts.variable_index(variable.substr(2))) return &d.contexts.variables()[*k].values;
  }
  return nullptr;
}

bool head_exists(const LabelSet& vocab, const Pattern& p) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const Pattern& label = vocab.pattern(i);
    if (label.name == p.name && label.args.size() == p.args.size()) return true;
  }
  return false;
}

void check_value(const DomainSpec& d, const Pattern& value, const LabelSet& vocab, const std::string& variable,
                 const std::string& where) {
  if (value.kind != Pattern::Kind::Label) return;
  if (value.is_concrete()) {
    if (!vocab.find(value.str())) {
      throw ValidationError("unknown label '" + value.str() + "' for " + variable + " in " + where);
    }
  } else if (!head_exists(vocab, value)) {
    throw ValidationError("pattern '" + value.str() + "' matches no label of " + variable + " in " + where);
  }
  (void)d;
}

void check_variables(const std::set<std::string>& used, const std::set<std::string>& allowed,
                     const DomainSpec& d, const std::string& where) {
  for (const auto& v : used) {
    if (v.compare(0, 2, "c.") == 0) {
      if (!d.contexts.variable_index(v.substr(2))) {
        throw ValidationError("unknown context variable '" + v.substr(2) + "' in " + where);
      }
      continue;
    }
    if (!allowed.contains(v)) throw ValidationError("variable " + v + " is not available in " + where);
  }
}

void check_condition(const DomainSpec& d, const Condition& c, const std::set<std::string>& allowed,
                     const std::string& where) {
  check_variables(c.variables(), allowed, d, where);
  for (const auto& [lhs, rhs] : c.comparisons()) {
    if (lhs.kind == Pattern::Kind::Variable) {
      if (const LabelSet* vocab = vocabulary_of(d, lhs.name)) check_value(d, rhs, *vocab, lhs.name, where);
    }
    if (rhs.kind == Pattern::Kind::Variable) {
      if (const LabelSet* vocab = vocabulary_of(d, rhs.name)) check_value(d, lhs, *vocab, rhs.name, where);
    }
  }
}

void check_rules(const DomainSpec& d, const std::vector<RuleSpec>& rules, bool require_fixed,
                 const std::string& section) {
  std::map<std::string, std::size_t> param_dims;
  std::map<std::string, std::string> param_owner;
  std::set<std::string> names;
  for (const auto& rule : rules) {
    const std::string where = section + " rule '" + rule.name + "'";
    if (!names.insert(rule.name).second) throw ValidationError("duplicate rule name in " + where);
    std::set<std::string> allowed;
    const LabelSet* out_vocab = nullptr;
    if (rule.output == "a_u'") {
      allowed = {"a_m", "i_u'"};
      out_vocab = &d.user_acts;
    } else if (rule.output == "i_u'") {
      allowed = {"a_m", "i_u"};
      out_vocab = &d.intentions;
    } else {
      throw ValidationError("rule output must be a_u' or i_u' in " + where);
    }
    if (rule.cases.empty()) throw ValidationError("rule has no cases in " + where);
    for (const auto& c : rule.cases) {
      check_condition(d, c.condition, allowed, where);
      if (c.effects.empty()) throw ValidationError("case without effects in " + where);
      std::size_t n = 0;
      double fixed_sum = 0.0;
      for (const auto& e : c.effects) {
        if (e.value == "*") {
          n += out_vocab->size();
        } else {
          ++n;
          std::set<std::string> vars;
          collect_variables(e.pattern, vars);
          check_variables(vars, allowed, d, where);
          std::set<std::string> templates;
          collect_templates(e.pattern, templates);
          for (const auto& t : templates) {
            if (!c.condition.bound_templates().contains(t)) {
              throw ValidationError("effect uses unbound template variable " + t + " in " + where);
            }
          }
          check_value(d, e.pattern, *out_vocab, rule.output, where);
        }
        if (e.probability) {
          if (c.param) throw ValidationError("case mixes a parameter with fixed probabilities in " + where);
          if (*e.probability < 0.0 || *e.probability > 1.0) {
            throw ValidationError("effect probability outside [0,1] in " + where);
          }
          fixed_sum += *e.probability;
        } else if (!c.param) {
          throw ValidationError("effect needs a probability or the case a parameter in " + where);
        }
      }
      if (fixed_sum > 1.0 + 1e-9) throw ValidationError("fixed effect probabilities exceed 1 in " + where);
      if (c.param) {
        if (require_fixed) throw ValidationError("ground-truth rules must use fixed probabilities in " + where);
        const std::size_t dim = n + (c.void_category ? 1 : 0);
        if (dim < 2) throw ValidationError("parameter '" + *c.param + "' needs at least two categories");
        auto [owner, fresh] = param_owner.emplace(*c.param, rule.name);
        if (!fresh && owner->second != rule.name) {
          throw ValidationError("parameter '" + *c.param + "' is shared by rules '" + owner->second + "' and '" +
                                rule.name + "'");
        }
        auto [it, inserted] = param_dims.emplace(*c.param, dim);
        if (!inserted && it->second != dim) {
          throw ValidationError("parameter '" + *c.param + "' used with inconsistent dimensions in " + where);
        }
      }
    }
  }
  if (!require_fixed) {
    for (const auto& p : d.model_config.rule_params) {
      auto it = param_dims.find(p.name);
      if (it == param_dims.end()) throw ValidationError("unknown rule parameter '" + p.name + "'");
      if (p.alpha.size() != it->second) {
        throw ValidationError("rule parameter '" + p.name + "' expects " + std::to_string(it->second) +
                              " alphas");
      }
      for (double a : p.alpha) {
        if (!(a > 0.0)) throw ValidationError("rule parameter '" + p.name + "' has a non-positive alpha");
      }
    }
  }
}

void check_blocks(const DomainSpec& d, const std::vector<MultinomialBlock>& blocks, const std::string& own,
                  const std::string& family) {
  const auto types = d.action_types();
  std::set<std::string> covered;
  bool has_default = false;
  for (const auto& b : blocks) {
    if (b.action_types.empty()) {
      if (has_default) throw ValidationError(family + " has two catch-all blocks");
      has_default = true;
    }
    for (const auto& t : b.action_types) {
      if (std::find(types.begin(), types.end(), t) == types.end()) {
        throw ValidationError("unknown action type '" + t + "' in " + family);
      }
      if (!covered.insert(t).second) throw ValidationError("action type '" + t + "' covered twice in " + family);
    }
    std::set<std::string> seen;
    for (const auto& p : b.parents) {
      const bool ok = p == own || p == "a_m" || p == "type(a_m)" || p == "c" ||
                      (p.compare(0, 2, "c.") == 0 && d.contexts.variable_index(p.substr(2)));
      if (!ok) throw ValidationError("invalid parent '" + p + "' in " + family);
      if (!seen.insert(p).second) throw ValidationError("duplicate parent '" + p + "' in " + family);
    }
  }
  if (!has_default && covered.size() != types.size()) {
    throw ValidationError(family + " does not cover every action type");
  }
}

}  // namespace

void DomainSpec::validate() const {
  if (schema_version != 1) throw ValidationError("unsupported schema_version " + std::to_string(schema_version));
  if (intentions.empty()) throw ValidationError("intentions must not be empty");
  if (user_acts.empty()) throw ValidationError("user_acts must not be empty");
  if (machine_actions.empty()) throw ValidationError("machine_actions must not be empty");

  for (const auto& r : rewards) {
    check_condition(*this, r.condition, {"a_m", "i_u"}, "reward for '" + r.action + "'");
    bool matched = false;
    for (std::size_t a = 0; a < action_count() && !matched; ++a) {
      for (std::size_t i = 0; i < intention_count() && !matched; ++i) {
        for (std::size_t c = 0; c < context_count() && !matched; ++c) {
          matched = r.condition.evaluate(env(a, i, npos, c));
        }
      }
    }
    if (!matched) throw ValidationError("reward for '" + r.action + "' matches no state/action pair");
  }
  for (const auto& o : model_config.prior_overrides) {
    const bool act = o.family == PriorOverride::Family::Action;
    const std::string where = "prior override '" + o.category + "'";
    check_condition(*this, o.condition, act ? std::set<std::string>{"a_m", "i_u'"} : std::set<std::string>{"a_m", "i_u"},
                    where);
    std::set<std::string> vars;
    collect_variables(o.category_pattern, vars);
    check_variables(vars, act ? std::set<std::string>{"a_m", "i_u'"} : std::set<std::string>{"a_m", "i_u"}, *this,
                    where);
    check_value(*this, o.category_pattern, act ? user_acts : intentions, act ? "a_u'" : "i_u'", where);
    if (!(o.alpha > 0.0)) throw ValidationError("non-positive alpha in " + where);
  }
  if (!(model_config.prior_alpha > 0.0)) throw ValidationError("prior_alpha must be positive");
  if (!model_config.act_prior.empty() && model_config.act_prior.size() != user_acts.size()) {
    throw ValidationError("act_prior size mismatch");
  }
  check_blocks(*this, model_config.multinomial.action_model, "i_u'", "multinomial action_model");
  check_blocks(*this, model_config.multinomial.goal_model, "i_u", "multinomial goal_model");
  check_rules(*this, model_config.rules, false, "model_config");

  if (simulator.present) {
    check_rules(*this, simulator.rules, true, "simulator");
    if (simulator.noise_alpha.size() != 3) throw ValidationError("simulator noise must have 3 categories");
    for (double a : simulator.noise_alpha) {
      if (!(a > 0.0)) throw ValidationError("simulator noise alphas must be positive");
    }
    if (simulator.max_turns == 0) throw ValidationError("simulator max_turns must be positive");
    if (simulator.opening_action) action_labels.at(*simulator.opening_action);
    for (const auto& t : simulator.terminal_intentions) intentions.at(t);
    if (!simulator.initial_intentions.empty() && simulator.initial_intentions.size() != intentions.size()) {
      throw ValidationError("simulator initial_intentions size mismatch");
    }
    if (!simulator.initial_context.empty()) {
      if (simulator.initial_context.size() != contexts.variables().size()) {
        throw ValidationError("simulator initial_context must list every context variable");
      }
      for (std::size_t k = 0; k < simulator.initial_context.size(); ++k) {
        if (simulator.initial_context[k].size() != contexts.variables()[k].values.size()) {
          throw ValidationError("simulator initial_context size mismatch for '" + contexts.variables()[k].name +
                                "'");
        }
      }
    }
    check_condition(*this, Condition(simulator.task_completed), {"a_m", "i_u"}, "simulator task_completed");
    for (const auto& e : simulator.context_effects) {
      check_condition(*this, e.condition, {"a_m", "i_u"}, "simulator context effect");
      for (const auto& [var, value] : e.assignments) {
        auto k = contexts.variable_index(var);
        if (!k) throw ValidationError("unknown context variable '" + var + "' in simulator context effect");
        check_value(*this, parse_pattern(value), contexts.variables()[*k].values, "c." + var,
                    "simulator context effect");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// JSON reading

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

std::vector<std::string> expand_labels(const json& list, const std::vector<std::string>& intentions,
                                       const char* section) {
  std::vector<std::string> out;
  for (const auto& item : list) {
    if (item.is_string()) {
      out.push_back(item.get<std::string>());
      continue;
    }
    if (!item.is_object() || !item.contains("template")) {
      throw ValidationError(std::string("entries of ") + section + " must be labels or template objects");
    }
    const auto tmpl = item.at("template").get<std::string>();
    std::vector<std::string> over;
    const auto& src = item.at("over");
    if (src.is_string()) {
      if (src.get<std::string>() != "intentions") {
        throw ValidationError(std::string("template source must be 'intentions' or a list in ") + section);
      }
      over = intentions;
    } else {
      over = src.get<std::vector<std::string>>();
    }
    Pattern pattern = parse_pattern(tmpl);
    std::set<std::string> templates;
    collect_templates(pattern, templates);
    if (templates.size() != 1) {
      throw ValidationError("template '" + tmpl + "' must contain exactly one template variable");
    }
    for (const auto& value : over) {
      TemplateBindings b{{*templates.begin(), parse_pattern(canonical_label(value))}};
      out.push_back(substitute(pattern, VariableEnv{}, b).str());
    }
  }
  return out;
}

std::vector<MultinomialBlock> read_blocks(const json& j, const std::vector<std::string>& default_parents) {
  std::vector<MultinomialBlock> blocks;
  if (j.is_null()) {
    blocks.push_back({{}, default_parents});
    return blocks;
  }
  for (const auto& b : j) {
    MultinomialBlock block;
    const auto& types = b.at("actions");
    if (!(types.is_string() && types.get<std::string>() == "*")) {
      block.action_types = types.get<std::vector<std::string>>();
      if (block.action_types.empty()) throw ValidationError("multinomial block with empty action list");
    }
    block.parents = b.at("parents").get<std::vector<std::string>>();
    blocks.push_back(std::move(block));
  }
  return blocks;
}

std::vector<RuleSpec> read_rules(const json& list) {
  std::vector<RuleSpec> rules;
  for (const auto& r : list) {
    RuleSpec rule;
    rule.name = r.at("name").get<std::string>();
    rule.output = r.at("output").get<std::string>();
    for (const auto& c : r.at("cases")) {
      RuleCaseSpec rc;
      rc.when = c.at("if").get<std::string>();
      rc.condition = Condition(rc.when);
      if (c.contains("param")) rc.param = c.at("param").get<std::string>();
      rc.void_category = get_or(c, "void", true);
      for (const auto& e : c.at("effects")) {
        EffectSpec effect;
        if (e.is_string()) {
          effect.value = e.get<std::string>();
        } else {
          effect.value = e.at("value").get<std::string>();
          if (e.contains("p")) effect.probability = e.at("p").get<double>();
        }
        if (effect.value != "*") {
          effect.pattern = parse_pattern(effect.value);
          effect.value = effect.pattern.str();
        }
        rc.effects.push_back(std::move(effect));
      }
      rule.cases.push_back(std::move(rc));
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<double> read_weights(const json& j, const LabelSet& vocab, const char* what) {
  if (j.is_null()) return {};
  std::vector<double> w(vocab.size(), 0.0);
  if (j.is_array()) {
    w = j.get<std::vector<double>>();
    if (w.size() != vocab.size()) throw ValidationError(std::string(what) + " has the wrong length");
  } else {
    for (const auto& [label, value] : j.items()) w[vocab.at(canonical_label(label))] = value.get<double>();
  }
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw ValidationError(std::string(what) + " has a negative weight");
    total += x;
  }
  if (!(total > 0.0)) throw ValidationError(std::string(what) + " has zero total weight");
  return w;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

DomainSpec build_domain(const json& j) {
  DomainSpec d;
  d.schema_version = j.at("schema_version").get<int>();
  d.name = get_or<std::string>(j, "name", "");

  d.intentions = LabelSet(j.at("intentions").get<std::vector<std::string>>(), "intentions");
  d.user_acts = LabelSet(expand_labels(j.at("user_acts"), d.intentions.labels(), "user_acts"), "user_acts");

  std::vector<std::string> action_labels;
  for (const auto& item : j.at("machine_actions")) {
    const ActionKind kind = get_or<std::string>(item, "kind", "conversational") == "physical"
                                ? ActionKind::Physical
                                : ActionKind::Conversational;
    json one = json::array();
    if (item.contains("label")) {
      one.push_back(item.at("label"));
    } else {
      one.push_back(item);
    }
    for (auto& label : expand_labels(one, d.intentions.labels(), "machine_actions")) {
      label = canonical_label(label);
      d.machine_actions.push_back({label, label_head(label), kind});
      action_labels.push_back(label);
    }
  }
  d.action_labels = LabelSet(action_labels, "machine_actions");

  std::vector<ContextVariable> vars;
  if (j.contains("context_vars")) {
    for (const auto& v : j.at("context_vars")) {
      const auto name = v.at("name").get<std::string>();
      vars.push_back({name, LabelSet(v.at("values").get<std::vector<std::string>>(), "context variable " + name)});
    }
  }
  d.contexts = ContextSpace(std::move(vars));

  for (const auto& r : j.value("rewards", json::array())) {
    RewardEntry e;
    e.action = parse_pattern(r.at("action").get<std::string>()).str();
    e.when = get_or<std::string>(r, "when", "true");
    e.value = r.at("value").get<double>();
    e.condition = Condition("a_m = " + e.action + " && (" + e.when + ")");
    d.rewards.push_back(std::move(e));
  }

  const json mc = j.value("model_config", json::object());
  d.model_config.prior_alpha = get_or(mc, "prior_alpha", 2.0);
  d.model_config.act_prior = read_weights(mc.value("act_prior", json()), d.user_acts, "act_prior");
  for (const auto& o : mc.value("prior_overrides", json::array())) {
    PriorOverride po;
    const auto family = o.at("model").get<std::string>();
    if (family != "action" && family != "goal") throw ValidationError("prior override model must be action or goal");
    po.family = family == "action" ? PriorOverride::Family::Action : PriorOverride::Family::Goal;
    po.when = get_or<std::string>(o, "when", "true");
    po.condition = Condition(po.when);
    po.category_pattern = parse_pattern(o.at("category").get<std::string>());
    po.category = po.category_pattern.str();
    po.alpha = o.at("alpha").get<double>();
    d.model_config.prior_overrides.push_back(std::move(po));
  }
  const json multi = mc.value("multinomial", json::object());
  d.model_config.multinomial.action_model = read_blocks(multi.value("action_model", json()), {"i_u'", "a_m"});
  d.model_config.multinomial.goal_model = read_blocks(multi.value("goal_model", json()), {"i_u", "a_m", "c"});
  const json rules = mc.value("rules", json::object());
  d.model_config.rules = read_rules(rules.value("rules", json::array()));
  const json params = rules.value("params", json::object());
  for (const auto& [name, alpha] : params.items()) {
    d.model_config.rule_params.push_back({name, alpha.get<std::vector<double>>()});
  }

  if (j.contains("simulator")) {
    const json& s = j.at("simulator");
    auto& sim = d.simulator;
    sim.present = true;
    sim.rules = read_rules(s.value("rules", json::array()));
    sim.act_prior = read_weights(s.value("act_prior", json()), d.user_acts, "simulator act_prior");
    sim.noise_alpha = get_or(s, "noise_alpha", sim.noise_alpha);
    sim.max_turns = get_or<std::size_t>(s, "max_turns", sim.max_turns);
    sim.tasks_per_episode = get_or<std::size_t>(s, "tasks_per_episode", 0);
    sim.task_completed = get_or<std::string>(s, "task_completed", "false");
    for (const auto& t : s.value("terminal_intentions", json::array())) {
      sim.terminal_intentions.push_back(canonical_label(t.get<std::string>()));
    }
    if (s.contains("opening_action")) sim.opening_action = canonical_label(s.at("opening_action").get<std::string>());
    sim.initial_intentions = read_weights(s.value("initial_intentions", json()), d.intentions, "initial_intentions");
    if (s.contains("initial_context")) {
      const auto& ic = s.at("initial_context");
      for (const auto& var : d.contexts.variables()) {
        if (!ic.contains(var.name)) throw ValidationError("simulator initial_context misses '" + var.name + "'");
        sim.initial_context.push_back(read_weights(ic.at(var.name), var.values, "initial_context"));
      }
    }
    for (const auto& e : s.value("context_effects", json::array())) {
      ContextEffect ce;
      ce.when = e.at("when").get<std::string>();
      ce.condition = Condition(ce.when);
      for (const auto& [var, value] : e.at("set").items()) {
        ce.assignments.emplace_back(var, parse_pattern(value.get<std::string>()).str());
      }
      sim.context_effects.push_back(std::move(ce));
    }
  }
  return d;
}

json weights_json(const std::vector<double>& w, const LabelSet& vocab) {
  json out = json::object();
  for (std::size_t i = 0; i < w.size(); ++i) out[vocab[i]] = w[i];
  return out;
}

json rules_json(const std::vector<RuleSpec>& rules) {
  json out = json::array();
  for (const auto& r : rules) {
    json cases = json::array();
    for (const auto& c : r.cases) {
      json jc = {{"if", c.when}};
      if (c.param) {
        jc["param"] = *c.param;
        jc["void"] = c.void_category;
      }
      json effects = json::array();
      for (const auto& e : c.effects) {
        if (e.probability) {
          effects.push_back({{"value", e.value}, {"p", *e.probability}});
        } else {
          effects.push_back(e.value);
        }
      }
      jc["effects"] = std::move(effects);
      cases.push_back(std::move(jc));
    }
    out.push_back({{"name", r.name}, {"output", r.output}, {"cases", std::move(cases)}});
  }
  return out;
}

json blocks_json(const std::vector<MultinomialBlock>& blocks) {
  json out = json::array();
  for (const auto& b : blocks) {
    json types = b.action_types.empty() ? json("*") : json(b.action_types);
    out.push_back({{"actions", types}, {"parents", b.parents}});
  }
  return out;
}

}  // namespace

DomainSpec parse_domain(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(json_text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(std::string("domain file is not valid JSON: ") + e.what(), line, col);
  }
  DomainSpec d;
  try {
    d = build_domain(j);
  } catch (const json::exception& e) {
    throw ParseError(std::string("domain file does not match the schema: ") + e.what());
  }
  d.validate();
  return d;
}

DomainSpec load_domain(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open domain file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_domain(buffer.str());
}

std::string serialize_domain(const DomainSpec& d) {
  json j;
  j["schema_version"] = d.schema_version;
  j["name"] = d.name;
  j["intentions"] = d.intentions.labels();
  j["user_acts"] = d.user_acts.labels();
  json actions = json::array();
  for (const auto& a : d.machine_actions) {
    actions.push_back({{"label", a.label}, {"kind", a.kind == ActionKind::Physical ? "physical" : "conversational"}});
  }
  j["machine_actions"] = std::move(actions);
  json vars = json::array();
  for (const auto& v : d.contexts.variables()) vars.push_back({{"name", v.name}, {"values", v.values.labels()}});
  j["context_vars"] = std::move(vars);
  json rewards = json::array();
  for (const auto& r : d.rewards) rewards.push_back({{"action", r.action}, {"when", r.when}, {"value", r.value}});
  j["rewards"] = std::move(rewards);

  json mc;
  mc["prior_alpha"] = d.model_config.prior_alpha;
  if (!d.model_config.act_prior.empty()) mc["act_prior"] = weights_json(d.model_config.act_prior, d.user_acts);
  json overrides = json::array();
  for (const auto& o : d.model_config.prior_overrides) {
    overrides.push_back({{"model", o.family == PriorOverride::Family::Action ? "action" : "goal"},
                         {"when", o.when},
                         {"category", o.category},
                         {"alpha", o.alpha}});
  }
  mc["prior_overrides"] = std::move(overrides);
  mc["multinomial"] = {{"action_model", blocks_json(d.model_config.multinomial.action_model)},
                       {"goal_model", blocks_json(d.model_config.multinomial.goal_model)}};
  json params = json::object();
  for (const auto& p : d.model_config.rule_params) params[p.name] = p.alpha;
  mc["rules"] = {{"rules", rules_json(d.model_config.rules)}, {"params", std::move(params)}};
  j["model_config"] = std::move(mc);

  if (d.simulator.present) {
    const auto& sim = d.simulator;
    json s;
    s["rules"] = rules_json(sim.rules);
    if (!sim.act_prior.empty()) s["act_prior"] = weights_json(sim.act_prior, d.user_acts);
    s["noise_alpha"] = sim.noise_alpha;
    s["max_turns"] = sim.max_turns;
    s["tasks_per_episode"] = sim.tasks_per_episode;
    s["task_completed"] = sim.task_completed;
    s["terminal_intentions"] = sim.terminal_intentions;
    if (sim.opening_action) s["opening_action"] = *sim.opening_action;
    if (!sim.initial_intentions.empty()) s["initial_intentions"] = weights_json(sim.initial_intentions, d.intentions);
    if (!sim.initial_context.empty()) {
      json ic = json::object();
      for (std::size_t k = 0; k < sim.initial_context.size(); ++k) {
        const auto& var = d.contexts.variables()[k];
        ic[var.name] = weights_json(sim.initial_context[k], var.values);
      }
      s["initial_context"] = std::move(ic);
    }
    json effects = json::array();
    for (const auto& e : sim.context_effects) {
      json set = json::object();
      for (const auto& [var, value] : e.assignments) set[var] = value;
      effects.push_back({{"when", e.when}, {"set", std::move(set)}});
    }
    s["context_effects"] = std::move(effects);
    j["simulator"] = std::move(s);
  }
  return j.dump(2) + "\n";
}

void save_domain(const DomainSpec& domain, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write domain file " + path.string());
  out << serialize_domain(domain);
}

}  // namespace mbrl
