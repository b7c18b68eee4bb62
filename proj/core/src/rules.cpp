#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "mbrl/errors.hpp"
#include "mbrl/transition_model.hpp"

namespace mbrl {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

struct Outcome {
  std::size_t value = 0;
  /// Parameter component, or kNone for a fixed probability.
  std::size_t component = kNone;
  double p = 0.0;
};

struct FiredCase {
  std::size_t rule = 0;
  std::size_t entry = kNone;
  std::vector<Outcome> outcomes;
  std::size_t void_component = kNone;
  double fixed_void = 0.0;
};

struct CaseDistribution {
  std::vector<std::pair<std::size_t, double>> values;
  double void_mass = 0.0;
};

CaseDistribution distribution_of(const FiredCase& fc, const ParamView& theta) {
  CaseDistribution d;
  const double* t = fc.entry == kNone ? nullptr : theta[fc.entry];
  for (const auto& o : fc.outcomes) {
    const double p = o.component == kNone ? o.p : t[o.component];
    auto it = std::find_if(d.values.begin(), d.values.end(), [&](const auto& v) { return v.first == o.value; });
    if (it == d.values.end()) {
      d.values.emplace_back(o.value, p);
    } else {
      it->second += p;
    }
  }
  d.void_mass = fc.entry == kNone ? fc.fixed_void : (fc.void_component == kNone ? 0.0 : t[fc.void_component]);
  return d;
}

/// Adds `mass` times the default distribution.
struct DefaultRow {
  std::size_t point = kNone;
  const std::vector<double>* dist = nullptr;

  void add(double mass, double* out) const {
    if (point != kNone) {
      out[point] += mass;
    } else {
      for (std::size_t k = 0; k < dist->size(); ++k) out[k] += mass * (*dist)[k];
    }
  }
};

void enumerate(const std::vector<CaseDistribution>& cases, std::size_t r, double prob,
               std::vector<std::pair<std::size_t, std::size_t>>& counts, std::size_t asserted,
               const DefaultRow& def, double* out) {
  if (prob == 0.0) return;
  if (r == cases.size()) {
    if (asserted == 0) {
      def.add(prob, out);
    } else {
      for (const auto& [v, n] : counts) out[v] += prob * static_cast<double>(n) / static_cast<double>(asserted);
    }
    return;
  }
  const auto& c = cases[r];
  enumerate(cases, r + 1, prob * c.void_mass, counts, asserted, def, out);
  for (const auto& [v, p] : c.values) {
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& x) { return x.first == v; });
    if (it == counts.end()) {
      counts.emplace_back(v, 1);
      enumerate(cases, r + 1, prob * p, counts, asserted + 1, def, out);
      counts.pop_back();
    } else {
      ++it->second;
      enumerate(cases, r + 1, prob * p, counts, asserted + 1, def, out);
      --it->second;
    }
  }
}

/// Effect-level combination of the fired cases: void everywhere gives the
/// default; otherwise each asserted value gets mass proportional to the
/// number of rules asserting it.
void combine(const std::vector<FiredCase>& fired, const ParamView& theta, const DefaultRow& def, std::size_t k,
             double* out) {
  std::fill(out, out + k, 0.0);
  if (fired.empty()) {
    def.add(1.0, out);
    return;
  }
  if (fired.size() == 1) {
    const auto d = distribution_of(fired.front(), theta);
    for (const auto& [v, p] : d.values) out[v] += p;
    def.add(d.void_mass, out);
    return;
  }
  std::vector<CaseDistribution> cases;
  cases.reserve(fired.size());
  for (const auto& fc : fired) cases.push_back(distribution_of(fc, theta));
  std::vector<std::pair<std::size_t, std::size_t>> counts;
  enumerate(cases, 0, 1.0, counts, 0, def, out);
}

std::string format_number(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

class RuleStructure final : public ModelStructure {
 public:
  RuleStructure(const DomainSpec& d, const std::vector<RuleSpec>& rules, const std::vector<RuleParamSpec>& priors,
                const std::vector<double>& act_prior, double prior_alpha) {
    init_shape(d);
    act_default_ = act_prior.empty() ? std::vector<double>(user_acts_, 1.0) : act_prior;
    if (act_default_.size() != user_acts_) throw ValidationError("act prior has the wrong size");
    if (normalize(act_default_) <= 0.0) throw ValidationError("act prior sums to zero");

    std::map<std::string, std::size_t> entry_of;
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto& rule = rules[r];
      if (rule.output != "a_u'" && rule.output != "i_u'") {
        throw InstantiationError("rule '" + rule.name + "' has unknown output variable " + rule.output);
      }
      const Family f = rule.output == "a_u'" ? Family::Act : Family::Goal;
      const LabelSet& vocab = f == Family::Act ? d.user_acts : d.intentions;
      rule_family_.push_back(f);
      rule_names_.push_back(rule.name);
      for (const auto& c : rule.cases) {
        if (!c.param || entry_of.contains(*c.param)) continue;
        std::vector<std::string> categories;
        for (const auto& e : c.effects) {
          if (e.value == "*") {
            categories.insert(categories.end(), vocab.labels().begin(), vocab.labels().end());
          } else {
            categories.push_back(e.value);
          }
        }
        if (c.void_category) categories.push_back("void");
        std::set<std::string> distinct(categories.begin(), categories.end());
        if (distinct.size() != categories.size()) {
          for (std::size_t k = 0; k < categories.size(); ++k) categories[k] = std::to_string(k) + ":" + categories[k];
        }
        entry_of.emplace(*c.param, params_.size());
        std::vector<double> alpha(categories.size(), prior_alpha);
        for (const auto& p : priors) {
          if (p.name != *c.param) continue;
          if (p.alpha.size() != alpha.size()) {
            throw ValidationError("rule parameter '" + p.name + "' has the wrong dimension");
          }
          alpha = p.alpha;
        }
        params_.push_back({*c.param, f, categories});
        priors_.push_back(DirichletParams(std::move(alpha), categories));
      }
    }
    for (const auto& p : priors) {
      if (!entry_of.contains(p.name)) throw ValidationError("unknown rule parameter '" + p.name + "'");
    }

    std::vector<std::vector<std::pair<std::size_t, RowRef>>> by_action(actions_);
    for (Family f : {Family::Goal, Family::Act}) {
      auto& rows = f == Family::Goal ? goal_rows_ : act_rows_;
      rows.assign(actions_ * intentions_ * contexts_, {});
      const LabelSet& vocab = f == Family::Act ? d.user_acts : d.intentions;
      for (std::size_t a = 0; a < actions_; ++a) {
        for (std::size_t x = 0; x < intentions_; ++x) {
          for (std::size_t c = 0; c < contexts_; ++c) {
            const VariableEnv env =
                f == Family::Goal ? d.env(a, x, DomainSpec::npos, c) : d.env(a, DomainSpec::npos, x, c);
            auto& fired = rows[(a * intentions_ + x) * contexts_ + c];
            for (std::size_t r = 0; r < rules.size(); ++r) {
              if (rule_family_[r] != f) continue;
              for (const auto& rc : rules[r].cases) {
                TemplateBindings bindings;
                if (!rc.condition.evaluate(env, bindings)) continue;
                fired.push_back(compile_case(rc, r, env, bindings, vocab, entry_of));
                if (fired.back().entry != kNone) by_action[a].push_back({fired.back().entry, RowRef{f, a, x, c}});
                break;
              }
            }
          }
        }
      }
    }
    index_rows(std::move(by_action));
  }

  ModelKind kind() const override { return ModelKind::Rules; }

  void goal_row(std::size_t a, std::size_t i, std::size_t c, const ParamView& theta, double* out) const override {
    combine(goal_rows_[(a * intentions_ + i) * contexts_ + c], theta, DefaultRow{i, nullptr}, intentions_, out);
  }

  void act_row(std::size_t a, std::size_t ip, std::size_t c, const ParamView& theta, double* out) const override {
    combine(act_rows_[(a * intentions_ + ip) * contexts_ + c], theta, DefaultRow{kNone, &act_default_}, user_acts_,
            out);
  }

  bayes::Network instantiate(const DomainSpec& d, const BeliefState& b, std::size_t a, const ParamView& theta,
                             const std::vector<DirichletParams>& params) const override {
    bayes::Network net = b.to_network(d);
    net.add_variable("i_u'", d.intentions.labels());
    add_family(net, d, a, Family::Goal, theta);
    net.add_variable("a_u'", d.user_acts.labels());
    add_family(net, d, a, Family::Act, theta);
    for (const auto& e : touched_by(a)) net.attach_parameter(params_[e.entry].name, params[e.entry]);
    return net;
  }

 private:
  FiredCase compile_case(const RuleCaseSpec& rc, std::size_t rule, const VariableEnv& env,
                         const TemplateBindings& bindings, const LabelSet& vocab,
                         const std::map<std::string, std::size_t>& entry_of) const {
    FiredCase fc;
    fc.rule = rule;
    if (rc.param) fc.entry = entry_of.at(*rc.param);
    std::size_t component = 0;
    double fixed_sum = 0.0;
    for (const auto& e : rc.effects) {
      std::vector<std::size_t> values;
      if (e.value == "*") {
        for (std::size_t v = 0; v < vocab.size(); ++v) values.push_back(v);
      } else {
        const std::string label = substitute(e.pattern, env, bindings).str();
        const auto v = vocab.find(label);
        if (!v) {
          throw InstantiationError("rule '" + rule_names_[rule] + "' produces unknown value '" + label + "'");
        }
        values.push_back(*v);
      }
      const double p = e.probability ? *e.probability / static_cast<double>(values.size()) : 0.0;
      for (std::size_t v : values) {
        fc.outcomes.push_back({v, rc.param ? component++ : kNone, p});
        fixed_sum += p;
      }
    }
    if (rc.param) {
      if (rc.void_category) fc.void_component = component;
    } else {
      fc.fixed_void = std::max(0.0, 1.0 - fixed_sum);
    }
    return fc;
  }

  /// Adds one node per rule that can fire for `a`, then the output node's CPT
  /// combining them.
  void add_family(bayes::Network& net, const DomainSpec& d, std::size_t a, Family f, const ParamView& theta) const {
    const auto& rows = f == Family::Goal ? goal_rows_ : act_rows_;
    const LabelSet& vocab = f == Family::Goal ? d.intentions : d.user_acts;
    const std::string input = f == Family::Goal ? "i_u" : "i_u'";
    const std::string output = f == Family::Goal ? "i_u'" : "a_u'";
    const std::size_t k = vocab.size();

    // Values each firing rule can assert for this action.
    std::map<std::size_t, std::vector<std::size_t>> rule_values;
    for (std::size_t x = 0; x < intentions_; ++x) {
      for (std::size_t c = 0; c < contexts_; ++c) {
        for (const auto& fc : rows[(a * intentions_ + x) * contexts_ + c]) {
          auto& vals = rule_values[fc.rule];
          for (const auto& o : fc.outcomes) {
            if (std::find(vals.begin(), vals.end(), o.value) == vals.end()) vals.push_back(o.value);
          }
        }
      }
    }
    std::vector<std::string> parents;
    std::vector<std::vector<std::size_t>> node_values;
    for (auto& [r, vals] : rule_values) {
      std::sort(vals.begin(), vals.end());
      std::vector<std::string> labels;
      for (std::size_t v : vals) labels.push_back(vocab[v]);
      labels.push_back("void");
      const std::string name = "rule:" + rule_names_[r];
      net.add_variable(name, labels);
      std::vector<double> table;
      for (std::size_t x = 0; x < intentions_; ++x) {
        for (std::size_t c = 0; c < contexts_; ++c) {
          std::vector<double> row(vals.size() + 1, 0.0);
          row.back() = 1.0;
          for (const auto& fc : rows[(a * intentions_ + x) * contexts_ + c]) {
            if (fc.rule != r) continue;
            const auto dist = distribution_of(fc, theta);
            row.back() = dist.void_mass;
            for (const auto& [v, p] : dist.values) {
              row[static_cast<std::size_t>(std::find(vals.begin(), vals.end(), v) - vals.begin())] += p;
            }
          }
          table.insert(table.end(), row.begin(), row.end());
        }
      }
      net.set_cpt(name, {input, "c"}, std::move(table));
      parents.push_back(name);
      node_values.push_back(vals);
    }

    // Output CPT over (rule nodes..., [i_u for goal persistence]).
    const bool persistence = f == Family::Goal;
    if (persistence) parents.push_back("i_u");
    std::vector<std::size_t> cards;
    for (const auto& vals : node_values) cards.push_back(vals.size() + 1);
    if (persistence) cards.push_back(intentions_);
    std::size_t rows_count = 1;
    for (std::size_t card : cards) rows_count *= card;
    std::vector<double> table(rows_count * k, 0.0);
    std::vector<std::size_t> idx(cards.size(), 0);
    for (std::size_t row = 0; row < rows_count; ++row) {
      std::vector<std::pair<std::size_t, std::size_t>> counts;
      std::size_t asserted = 0;
      for (std::size_t n = 0; n < node_values.size(); ++n) {
        if (idx[n] == node_values[n].size()) continue;
        const std::size_t v = node_values[n][idx[n]];
        auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& p) { return p.first == v; });
        if (it == counts.end()) {
          counts.emplace_back(v, 1);
        } else {
          ++it->second;
        }
        ++asserted;
      }
      double* out = &table[row * k];
      if (asserted == 0) {
        (persistence ? DefaultRow{idx.back(), nullptr} : DefaultRow{kNone, &act_default_}).add(1.0, out);
      } else {
        for (const auto& [v, n] : counts) out[v] += static_cast<double>(n) / static_cast<double>(asserted);
      }
      for (std::size_t dpos = cards.size(); dpos-- > 0;) {
        if (++idx[dpos] < cards[dpos]) break;
        idx[dpos] = 0;
      }
    }
    net.set_cpt(output, parents, std::move(table));
  }

  std::vector<Family> rule_family_;
  std::vector<std::string> rule_names_;
  std::vector<double> act_default_;
  std::vector<std::vector<FiredCase>> goal_rows_;
  std::vector<std::vector<FiredCase>> act_rows_;
};

}  // namespace

std::shared_ptr<const ModelStructure> make_rule_structure(const DomainSpec& domain, const std::vector<RuleSpec>& rules,
                                                          const std::vector<RuleParamSpec>& param_priors,
                                                          const std::vector<double>& act_prior, double prior_alpha) {
  return std::make_shared<RuleStructure>(domain, rules, param_priors, act_prior, prior_alpha);
}

std::string pretty_print_rules(const std::vector<RuleSpec>& rules) {
  std::ostringstream out;
  for (const auto& rule : rules) {
    out << "rule " << rule.name << " -> " << rule.output << "\n";
    for (const auto& c : rule.cases) {
      out << "  if " << c.when << " then ";
      for (std::size_t i = 0; i < c.effects.size(); ++i) {
        const auto& e = c.effects[i];
        out << (i ? " | " : "") << e.value;
        if (e.probability) out << " @" << format_number(*e.probability);
      }
      if (c.param) out << " ~ " << *c.param << (c.void_category ? " +void" : "");
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace mbrl
