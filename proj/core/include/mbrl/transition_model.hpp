#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "mbrl/bayes_net.hpp"
#include "mbrl/belief.hpp"
#include "mbrl/dirichlet.hpp"
#include "mbrl/domain.hpp"
#include "mbrl/rng.hpp"

namespace mbrl {

enum class ModelKind { Multinomial, Rules };

/// Goal rows are P(i_u' | i_u, a_m, c); act rows are P(a_u' | i_u', a_m, c).
enum class Family { Goal, Act };

struct ParamInfo {
  std::string name;
  Family family = Family::Act;
  std::vector<std::string> categories;
};

/// One CPT row: `input` is i_u for goal rows and i_u' for act rows.
struct RowRef {
  Family family = Family::Act;
  std::size_t action = 0;
  std::size_t input = 0;
  std::size_t context = 0;
};

/// Rows of one action that read a given parameter entry.
struct EntryRows {
  std::size_t entry = 0;
  std::vector<RowRef> rows;
};

/// Parameter values (one probability vector per entry) with an optional
/// single-entry override.
class ParamView {
 public:
  explicit ParamView(const std::vector<std::vector<double>>& values) : values_(&values) {}
  ParamView with_override(std::size_t entry, const double* values) const {
    ParamView v = *this;
    v.override_entry_ = entry;
    v.override_values_ = values;
    return v;
  }
  const double* operator[](std::size_t entry) const {
    return entry == override_entry_ ? override_values_ : (*values_)[entry].data();
  }

 private:
  const std::vector<std::vector<double>>* values_;
  std::size_t override_entry_ = static_cast<std::size_t>(-1);
  const double* override_values_ = nullptr;
};

/// Immutable parameterized CPT structure shared by every snapshot of a model.
class ModelStructure {
 public:
  virtual ~ModelStructure() = default;

  virtual ModelKind kind() const = 0;
  virtual void goal_row(std::size_t action, std::size_t intention, std::size_t context, const ParamView& theta,
                        double* out) const = 0;
  virtual void act_row(std::size_t action, std::size_t next_intention, std::size_t context, const ParamView& theta,
                       double* out) const = 0;
  virtual bayes::Network instantiate(const DomainSpec& domain, const BeliefState& belief, std::size_t action,
                                     const ParamView& theta, const std::vector<DirichletParams>& params) const = 0;

  const std::vector<ParamInfo>& params() const { return params_; }
  const std::vector<DirichletParams>& priors() const { return priors_; }
  /// Entries read by rows of `action`, in entry order.
  const std::vector<EntryRows>& touched_by(std::size_t action) const { return touched_[action]; }

  std::size_t actions() const { return actions_; }
  std::size_t intentions() const { return intentions_; }
  std::size_t user_acts() const { return user_acts_; }
  std::size_t contexts() const { return contexts_; }

 protected:
  void init_shape(const DomainSpec& domain);
  /// Groups (entry, row) pairs into touched_.
  void index_rows(std::vector<std::vector<std::pair<std::size_t, RowRef>>> by_action);

  std::vector<ParamInfo> params_;
  std::vector<DirichletParams> priors_;
  std::vector<std::vector<EntryRows>> touched_;
  std::size_t actions_ = 0;
  std::size_t intentions_ = 0;
  std::size_t user_acts_ = 0;
  std::size_t contexts_ = 0;
};

std::shared_ptr<const ModelStructure> make_multinomial_structure(const DomainSpec& domain);

/// Compiles `rules` against every (a_m, input, c) assignment. `act_prior`
/// (empty: uniform) fills void act effects; void goal effects keep i_u.
std::shared_ptr<const ModelStructure> make_rule_structure(const DomainSpec& domain, const std::vector<RuleSpec>& rules,
                                                          const std::vector<RuleParamSpec>& param_priors,
                                                          const std::vector<double>& act_prior, double prior_alpha);

/// Canonical text rendering of a rule list.
std::string pretty_print_rules(const std::vector<RuleSpec>& rules);

enum class PredictMode { Mean, Sample };

struct TableCache;

/// Snapshot of a transition model: a structure plus Dirichlet posteriors.
/// Predictive rows use the posterior means unless the snapshot was created by
/// `sampled`.
class TransitionModel {
 public:
  TransitionModel() = default;
  TransitionModel(std::shared_ptr<const ModelStructure> structure, std::vector<DirichletParams> params);

  /// Prior model from the domain's model_config.
  static TransitionModel from_domain(const DomainSpec& domain, ModelKind kind);
  /// The simulator's fixed dynamics as a (parameter-free) rule model.
  static TransitionModel ground_truth(const DomainSpec& domain);

  ModelKind kind() const { return structure_->kind(); }
  const ModelStructure& structure() const { return *structure_; }
  const std::shared_ptr<const ModelStructure>& structure_ptr() const { return structure_; }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<DirichletParams>& params() const { return params_; }
  const std::vector<std::vector<double>>& values() const { return values_; }

  TransitionModel with_params(std::vector<DirichletParams> params) const;
  /// Snapshot whose rows use one θ draw per entry.
  TransitionModel sampled(Rng& rng) const;

  /// Cached predictive rows.
  const double* goal_row(std::size_t action, std::size_t intention, std::size_t context) const;
  const double* act_row(std::size_t action, std::size_t next_intention, std::size_t context) const;

  /// b'(i_u', c) = Σ_i P(i_u'|i_u,a_m,c) b(i_u, c), in belief layout.
  std::vector<double> predict_intentions(const BeliefState& belief, std::size_t action) const;
  std::vector<double> predict_intentions(const std::vector<double>& joint, std::size_t action) const;
  /// P(a_u') given a predicted joint over (i_u', c).
  std::vector<double> act_marginal(const std::vector<double>& predicted, std::size_t action) const;
  std::vector<double> predict_user_act_vector(const BeliefState& belief, std::size_t action) const;
  Distribution predict_user_act(const DomainSpec& domain, const BeliefState& belief, std::size_t action,
                                PredictMode mode = PredictMode::Mean, Rng* rng = nullptr) const;

  /// Belief network extended with i_u', a_u' (and rule nodes) for `action`.
  bayes::Network instantiate(const DomainSpec& domain, const BeliefState& belief, std::size_t action) const;

 private:
  TransitionModel(std::shared_ptr<const ModelStructure> structure, std::vector<DirichletParams> params,
                  std::vector<std::vector<double>> values);
  const TableCache& tables(std::size_t context) const;

  std::shared_ptr<const ModelStructure> structure_;
  std::vector<DirichletParams> params_;
  std::vector<std::vector<double>> values_;
  std::shared_ptr<TableCache> cache_;
};

}  // namespace mbrl
