#include "mbrl/transition_model.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "mbrl/errors.hpp"

namespace mbrl {

void ModelStructure::init_shape(const DomainSpec& d) {
  actions_ = d.action_count();
  intentions_ = d.intention_count();
  user_acts_ = d.user_act_count();
  contexts_ = d.context_count();
}

void ModelStructure::index_rows(std::vector<std::vector<std::pair<std::size_t, RowRef>>> by_action) {
  touched_.assign(actions_, {});
  for (std::size_t a = 0; a < actions_; ++a) {
    auto& pairs = by_action[a];
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& [entry, row] : pairs) {
      if (touched_[a].empty() || touched_[a].back().entry != entry) touched_[a].push_back({entry, {}});
      touched_[a].back().rows.push_back(row);
    }
  }
}

namespace {

std::string family_name(Family f) { return f == Family::Goal ? "goal" : "act"; }

class MultinomialStructure final : public ModelStructure {
 public:
  explicit MultinomialStructure(const DomainSpec& d) {
    init_shape(d);
    const auto types = d.action_types();
    std::vector<std::vector<std::pair<std::size_t, RowRef>>> by_action(actions_);
    for (Family f : {Family::Goal, Family::Act}) {
      const auto& blocks =
          f == Family::Goal ? d.model_config.multinomial.goal_model : d.model_config.multinomial.action_model;
      const std::string own = f == Family::Goal ? "i_u" : "i_u'";
      const LabelSet& categories = f == Family::Goal ? d.intentions : d.user_acts;
      auto& row_entry = f == Family::Goal ? goal_entry_ : act_entry_;
      row_entry.assign(actions_ * intentions_ * contexts_, 0);
      std::map<std::pair<std::size_t, std::vector<std::size_t>>, std::size_t> keys;

      for (std::size_t a = 0; a < actions_; ++a) {
        const std::string& type = d.machine_actions[a].type;
        std::size_t block = blocks.size();
        for (std::size_t b = 0; b < blocks.size(); ++b) {
          const auto& listed = blocks[b].action_types;
          if (std::find(listed.begin(), listed.end(), type) != listed.end()) block = b;
        }
        if (block == blocks.size()) {
          for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (blocks[b].action_types.empty()) block = b;
          }
        }
        if (block == blocks.size()) throw ValidationError("no multinomial block covers action type " + type);
        const std::size_t type_index =
            static_cast<std::size_t>(std::find(types.begin(), types.end(), type) - types.begin());

        for (std::size_t x = 0; x < intentions_; ++x) {
          for (std::size_t c = 0; c < contexts_; ++c) {
            std::vector<std::size_t> key;
            std::string name = family_name(f) + "[";
            for (const auto& p : blocks[block].parents) {
              std::size_t v = 0;
              std::string shown;
              if (p == own) {
                v = x;
                shown = d.intentions[x];
              } else if (p == "a_m") {
                v = a;
                shown = d.action_labels[a];
              } else if (p == "type(a_m)") {
                v = type_index;
                shown = type;
              } else if (p == "c") {
                v = c;
                shown = d.contexts.label(c);
              } else {
                const std::size_t k = *d.contexts.variable_index(p.substr(2));
                v = d.contexts.value_of(c, k);
                shown = d.contexts.variables()[k].values[v];
              }
              key.push_back(v);
              name += (name.back() == '[' ? "" : ",") + p + "=" + shown;
            }
            name += "]";
            auto [it, inserted] = keys.emplace(std::make_pair(block, key), params_.size());
            if (inserted) {
              params_.push_back({name, f, categories.labels()});
              priors_.push_back(initial_prior(d, f, a, x, c, categories));
            }
            row_entry[(a * intentions_ + x) * contexts_ + c] = it->second;
            by_action[a].push_back({it->second, RowRef{f, a, x, c}});
          }
        }
      }
    }
    index_rows(std::move(by_action));
  }

  ModelKind kind() const override { return ModelKind::Multinomial; }

  void goal_row(std::size_t a, std::size_t i, std::size_t c, const ParamView& theta, double* out) const override {
    const double* src = theta[goal_entry_[(a * intentions_ + i) * contexts_ + c]];
    std::copy(src, src + intentions_, out);
  }

  void act_row(std::size_t a, std::size_t ip, std::size_t c, const ParamView& theta, double* out) const override {
    const double* src = theta[act_entry_[(a * intentions_ + ip) * contexts_ + c]];
    std::copy(src, src + user_acts_, out);
  }

  bayes::Network instantiate(const DomainSpec& d, const BeliefState& b, std::size_t a, const ParamView& theta,
                             const std::vector<DirichletParams>& params) const override {
    bayes::Network net = b.to_network(d);
    net.add_variable("i_u'", d.intentions.labels());
    std::vector<double> goal(intentions_ * contexts_ * intentions_);
    for (std::size_t i = 0; i < intentions_; ++i) {
      for (std::size_t c = 0; c < contexts_; ++c) goal_row(a, i, c, theta, &goal[(i * contexts_ + c) * intentions_]);
    }
    net.set_cpt("i_u'", {"i_u", "c"}, std::move(goal));
    net.add_variable("a_u'", d.user_acts.labels());
    std::vector<double> act(intentions_ * contexts_ * user_acts_);
    for (std::size_t i = 0; i < intentions_; ++i) {
      for (std::size_t c = 0; c < contexts_; ++c) act_row(a, i, c, theta, &act[(i * contexts_ + c) * user_acts_]);
    }
    net.set_cpt("a_u'", {"i_u'", "c"}, std::move(act));
    std::set<std::size_t> used;
    for (const auto& e : touched_by(a)) used.insert(e.entry);
    for (std::size_t e : used) net.attach_parameter(params_[e].name, params[e]);
    return net;
  }

 private:
  DirichletParams initial_prior(const DomainSpec& d, Family f, std::size_t a, std::size_t x, std::size_t c,
                                const LabelSet& categories) const {
    std::vector<double> alpha(categories.size(), d.model_config.prior_alpha);
    std::vector<bool> set(categories.size(), false);
    const VariableEnv env = f == Family::Goal ? d.env(a, x, DomainSpec::npos, c) : d.env(a, DomainSpec::npos, x, c);
    const auto family = f == Family::Goal ? PriorOverride::Family::Goal : PriorOverride::Family::Action;
    for (const auto& o : d.model_config.prior_overrides) {
      if (o.family != family) continue;
      TemplateBindings bindings;
      if (!o.condition.evaluate(env, bindings)) continue;
      const std::string label = substitute(o.category_pattern, env, bindings).str();
      const auto k = categories.find(label);
      if (!k) throw InstantiationError("prior override category '" + label + "' is not a known value");
      if (!set[*k]) {
        alpha[*k] = o.alpha;
        set[*k] = true;
      }
    }
    return DirichletParams(std::move(alpha), categories.labels());
  }

  std::vector<std::size_t> goal_entry_;
  std::vector<std::size_t> act_entry_;
};

}  // namespace

std::shared_ptr<const ModelStructure> make_multinomial_structure(const DomainSpec& domain) {
  return std::make_shared<MultinomialStructure>(domain);
}

// ---------------------------------------------------------------------------

struct TableCache {
  explicit TableCache(std::size_t contexts)
      : flags(std::make_unique<std::once_flag[]>(contexts)), goal(contexts), act(contexts) {}
  std::unique_ptr<std::once_flag[]> flags;
  std::vector<std::vector<double>> goal;
  std::vector<std::vector<double>> act;
};

namespace {

std::vector<std::vector<double>> means_of(const std::vector<DirichletParams>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.mean_vector());
  return out;
}

}  // namespace

TransitionModel::TransitionModel(std::shared_ptr<const ModelStructure> structure, std::vector<DirichletParams> params)
    : TransitionModel(structure, params, means_of(params)) {}

TransitionModel::TransitionModel(std::shared_ptr<const ModelStructure> structure, std::vector<DirichletParams> params,
                                 std::vector<std::vector<double>> values)
    : structure_(std::move(structure)), params_(std::move(params)), values_(std::move(values)) {
  if (!structure_) throw ValidationError("transition model needs a structure");
  const auto& info = structure_->params();
  if (params_.size() != info.size()) throw ValidationError("transition model parameter count mismatch");
  for (std::size_t e = 0; e < params_.size(); ++e) {
    if (params_[e].size() != info[e].categories.size()) {
      throw ValidationError("parameter '" + info[e].name + "' has the wrong dimension");
    }
  }
  cache_ = std::make_shared<TableCache>(structure_->contexts());
}

TransitionModel TransitionModel::from_domain(const DomainSpec& d, ModelKind kind) {
  auto structure = kind == ModelKind::Multinomial
                       ? make_multinomial_structure(d)
                       : make_rule_structure(d, d.model_config.rules, d.model_config.rule_params,
                                             d.model_config.act_prior, d.model_config.prior_alpha);
  auto priors = structure->priors();
  return TransitionModel(std::move(structure), std::move(priors));
}

TransitionModel TransitionModel::ground_truth(const DomainSpec& d) {
  if (!d.simulator.present) throw ValidationError("domain has no simulator section");
  auto structure = make_rule_structure(d, d.simulator.rules, {}, d.simulator.act_prior, 1.0);
  auto priors = structure->priors();
  return TransitionModel(std::move(structure), std::move(priors));
}

TransitionModel TransitionModel::with_params(std::vector<DirichletParams> params) const {
  return TransitionModel(structure_, std::move(params));
}

TransitionModel TransitionModel::sampled(Rng& rng) const {
  std::vector<std::vector<double>> draws;
  draws.reserve(params_.size());
  for (const auto& p : params_) draws.push_back(p.sample_vector(rng));
  return TransitionModel(structure_, params_, std::move(draws));
}

const TableCache& TransitionModel::tables(std::size_t c) const {
  std::call_once(cache_->flags[c], [&] {
    const auto& s = *structure_;
    const std::size_t na = s.actions();
    const std::size_t ni = s.intentions();
    const std::size_t nu = s.user_acts();
    const ParamView theta(values_);
    auto& goal = cache_->goal[c];
    auto& act = cache_->act[c];
    goal.resize(na * ni * ni);
    act.resize(na * ni * nu);
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t x = 0; x < ni; ++x) {
        s.goal_row(a, x, c, theta, &goal[(a * ni + x) * ni]);
        s.act_row(a, x, c, theta, &act[(a * ni + x) * nu]);
      }
    }
  });
  return *cache_;
}

const double* TransitionModel::goal_row(std::size_t a, std::size_t i, std::size_t c) const {
  const std::size_t ni = structure_->intentions();
  return &tables(c).goal[c][(a * ni + i) * ni];
}

const double* TransitionModel::act_row(std::size_t a, std::size_t ip, std::size_t c) const {
  const std::size_t ni = structure_->intentions();
  return &tables(c).act[c][(a * ni + ip) * structure_->user_acts()];
}

std::vector<double> TransitionModel::predict_intentions(const std::vector<double>& joint, std::size_t a) const {
  const std::size_t ni = structure_->intentions();
  const std::size_t nc = structure_->contexts();
  std::vector<double> out(joint.size(), 0.0);
  for (std::size_t i = 0; i < ni; ++i) {
    for (std::size_t c = 0; c < nc; ++c) {
      const double w = joint[i * nc + c];
      if (w == 0.0) continue;
      const double* row = goal_row(a, i, c);
      for (std::size_t ip = 0; ip < ni; ++ip) out[ip * nc + c] += w * row[ip];
    }
  }
  return out;
}

std::vector<double> TransitionModel::predict_intentions(const BeliefState& b, std::size_t a) const {
  return predict_intentions(b.joint(), a);
}

std::vector<double> TransitionModel::act_marginal(const std::vector<double>& predicted, std::size_t a) const {
  const std::size_t ni = structure_->intentions();
  const std::size_t nc = structure_->contexts();
  const std::size_t nu = structure_->user_acts();
  std::vector<double> out(nu, 0.0);
  for (std::size_t ip = 0; ip < ni; ++ip) {
    for (std::size_t c = 0; c < nc; ++c) {
      const double w = predicted[ip * nc + c];
      if (w == 0.0) continue;
      const double* row = act_row(a, ip, c);
      for (std::size_t u = 0; u < nu; ++u) out[u] += w * row[u];
    }
  }
  normalize(out);
  return out;
}

std::vector<double> TransitionModel::predict_user_act_vector(const BeliefState& b, std::size_t a) const {
  return act_marginal(predict_intentions(b, a), a);
}

Distribution TransitionModel::predict_user_act(const DomainSpec& d, const BeliefState& b, std::size_t a,
                                               PredictMode mode, Rng* rng) const {
  if (mode == PredictMode::Sample) {
    if (rng == nullptr) throw ValidationError("sample mode needs a random stream");
    return sampled(*rng).predict_user_act(d, b, a);
  }
  return Distribution(d.user_acts.labels(), predict_user_act_vector(b, a));
}

bayes::Network TransitionModel::instantiate(const DomainSpec& d, const BeliefState& b, std::size_t a) const {
  if (a >= structure_->actions()) throw InstantiationError("machine action index out of range");
  return structure_->instantiate(d, b, a, ParamView(values_), params_);
}

}  // namespace mbrl
