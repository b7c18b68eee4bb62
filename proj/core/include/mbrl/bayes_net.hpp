#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mbrl/dirichlet.hpp"
#include "mbrl/distribution.hpp"
#include "mbrl/rng.hpp"

namespace mbrl::bayes {

struct Variable {
  std::string name;
  std::vector<std::string> values;
};

/// P(child | parents). The table is row-major over parent assignments (first
/// parent most significant) with the child's value varying fastest.
struct Cpt {
  std::size_t child = 0;
  std::vector<std::size_t> parents;
  std::vector<double> table;
};

class Network {
 public:
  std::size_t add_variable(std::string name, std::vector<std::string> values);
  /// Throws ValidationError on unknown names, wrong table size or rows that
  /// do not sum to one within 1e-9.
  void set_cpt(const std::string& child, const std::vector<std::string>& parents, std::vector<double> table);
  /// Convenience for a root node.
  std::size_t add_root(std::string name, std::vector<std::string> values, std::vector<double> probs);

  /// Built-in hard observation, honoured by every query.
  void observe(const std::string& name, const std::string& value);
  void attach_parameter(const std::string& name, DirichletParams params);

  std::size_t size() const { return vars_.size(); }
  const Variable& variable(std::size_t i) const { return vars_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;
  /// Throws ValidationError("unknown variable ...").
  std::size_t index(const std::string& name) const;
  std::size_t value_index(std::size_t var, const std::string& value) const;
  const Cpt& cpt(std::size_t var) const;
  const std::map<std::size_t, std::size_t>& observations() const { return observed_; }
  const std::map<std::string, DirichletParams>& parameters() const { return params_; }

  /// Throws ValidationError on a directed cycle or a missing CPT.
  std::vector<std::size_t> topological_order() const;
  void validate() const;

  /// Stable text rendering for golden tests.
  std::string dump() const;

 private:
  std::vector<Variable> vars_;
  std::vector<std::optional<Cpt>> cpts_;
  std::map<std::string, std::size_t> index_;
  std::map<std::size_t, std::size_t> observed_;
  std::map<std::string, DirichletParams> params_;
};

/// Hard evidence names a value; soft evidence is a likelihood vector over the
/// variable's values.
struct Evidence {
  std::map<std::string, std::string> hard;
  std::map<std::string, std::vector<double>> soft;

  Evidence& set_hard(std::string name, std::string value) {
    hard[std::move(name)] = std::move(value);
    return *this;
  }
  Evidence& set_soft(std::string name, std::vector<double> likelihood) {
    soft[std::move(name)] = std::move(likelihood);
    return *this;
  }
};

enum class Method { Exact, Sampling };

struct QueryOptions {
  Method method = Method::Exact;
  std::size_t n_samples = 10000;
  Rng* rng = nullptr;
};

struct QueryResult {
  /// Support labels join the query variables' values with ','.
  Distribution distribution;
  /// (Σw)²/Σw² for sampling; infinity for exact inference.
  double effective_samples = 0.0;
};

/// Throws ZeroProbabilityEvidence when the evidence has zero likelihood.
QueryResult query(const Network& net, const std::vector<std::string>& variables, const Evidence& evidence = {},
                  const QueryOptions& options = {});
Distribution query_marginal(const Network& net, const std::vector<std::string>& variables,
                            const Evidence& evidence = {}, const QueryOptions& options = {});

/// Folds evidence into the network: hard evidence becomes an observation,
/// soft evidence a binary child whose CPT is the scaled likelihood, observed
/// at its first value.
Network apply_evidence(const Network& net, const Evidence& evidence);

}  // namespace mbrl::bayes
