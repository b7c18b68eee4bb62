#include "mbrl/bayes_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "mbrl/errors.hpp"

namespace mbrl::bayes {

std::size_t Network::add_variable(std::string name, std::vector<std::string> values) {
  if (name.empty()) throw ValidationError("variable name must not be empty");
  if (values.empty()) throw ValidationError("variable '" + name + "' has no values");
  std::set<std::string> distinct(values.begin(), values.end());
  if (distinct.size() != values.size()) throw ValidationError("variable '" + name + "' has duplicate values");
  if (!index_.emplace(name, vars_.size()).second) throw ValidationError("duplicate variable '" + name + "'");
  vars_.push_back({std::move(name), std::move(values)});
  cpts_.emplace_back();
  return vars_.size() - 1;
}

std::optional<std::size_t> Network::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Network::index(const std::string& name) const {
  if (auto i = find(name)) return *i;
  throw ValidationError("unknown variable '" + name + "'");
}

std::size_t Network::value_index(std::size_t var, const std::string& value) const {
  const auto& vals = vars_.at(var).values;
  auto it = std::find(vals.begin(), vals.end(), value);
  if (it == vals.end()) throw ValidationError("unknown value '" + value + "' of variable '" + vars_[var].name + "'");
  return static_cast<std::size_t>(it - vals.begin());
}

void Network::set_cpt(const std::string& child, const std::vector<std::string>& parents, std::vector<double> table) {
  Cpt cpt;
  cpt.child = index(child);
  std::size_t rows = 1;
  for (const auto& p : parents) {
    const std::size_t pi = index(p);
    if (pi == cpt.child) throw ValidationError("variable '" + child + "' cannot be its own parent");
    if (std::find(cpt.parents.begin(), cpt.parents.end(), pi) != cpt.parents.end()) {
      throw ValidationError("duplicate parent '" + p + "' of '" + child + "'");
    }
    cpt.parents.push_back(pi);
    rows *= vars_[pi].values.size();
  }
  const std::size_t k = vars_[cpt.child].values.size();
  if (table.size() != rows * k) throw ValidationError("CPT of '" + child + "' has the wrong size");
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t v = 0; v < k; ++v) {
      const double p = table[r * k + v];
      if (!(p >= 0.0)) throw ValidationError("CPT of '" + child + "' has a negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kNormalizationTolerance) {
      throw ValidationError("CPT row " + std::to_string(r) + " of '" + child + "' does not sum to one");
    }
  }
  cpt.table = std::move(table);
  cpts_[cpt.child] = std::move(cpt);
}

std::size_t Network::add_root(std::string name, std::vector<std::string> values, std::vector<double> probs) {
  const std::string copy = name;
  const std::size_t i = add_variable(std::move(name), std::move(values));
  set_cpt(copy, {}, std::move(probs));
  return i;
}

void Network::observe(const std::string& name, const std::string& value) {
  const std::size_t v = index(name);
  observed_[v] = value_index(v, value);
}

void Network::attach_parameter(const std::string& name, DirichletParams params) {
  params_[name] = std::move(params);
}

const Cpt& Network::cpt(std::size_t var) const {
  if (var >= cpts_.size() || !cpts_[var]) throw ValidationError("variable '" + vars_.at(var).name + "' has no CPT");
  return *cpts_[var];
}

std::vector<std::size_t> Network::topological_order() const {
  const std::size_t n = vars_.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t p : cpt(v).parents) {
      children[p].push_back(v);
      ++indegree[v];
    }
  }
  std::vector<std::size_t> order;
  std::vector<std::size_t> ready;
  for (std::size_t v = n; v-- > 0;) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (std::size_t c : children[v]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  if (order.size() != n) throw ValidationError("network contains a directed cycle");
  return order;
}

void Network::validate() const { (void)topological_order(); }

std::string Network::dump() const {
  std::ostringstream out;
  out.precision(6);
  for (std::size_t v : topological_order()) {
    const auto& var = vars_[v];
    const auto& c = cpt(v);
    out << var.name << " {";
    for (std::size_t i = 0; i < var.values.size(); ++i) out << (i ? "," : "") << var.values[i];
    out << "}";
    if (!c.parents.empty()) {
      out << " | ";
      for (std::size_t i = 0; i < c.parents.size(); ++i) out << (i ? "," : "") << vars_[c.parents[i]].name;
    }
    if (auto it = observed_.find(v); it != observed_.end()) out << " observed=" << var.values[it->second];
    out << "\n";
    const std::size_t k = var.values.size();
    for (std::size_t r = 0; r < c.table.size() / k; ++r) {
      out << "  ";
      for (std::size_t j = 0; j < k; ++j) out << (j ? " " : "") << c.table[r * k + j];
      out << "\n";
    }
  }
  for (const auto& [name, p] : params_) {
    out << "param " << name << " (";
    for (std::size_t i = 0; i < p.size(); ++i) out << (i ? "," : "") << p.alpha()[i];
    out << ")\n";
  }
  return out.str();
}

namespace {

/// Dense factor; the last variable varies fastest.
struct Factor {
  std::vector<std::size_t> vars;
  std::vector<std::size_t> cards;
  std::vector<double> values;

  std::size_t position(std::size_t var) const {
    return static_cast<std::size_t>(std::find(vars.begin(), vars.end(), var) - vars.begin());
  }
};

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  out.vars = a.vars;
  out.cards = a.cards;
  for (std::size_t i = 0; i < b.vars.size(); ++i) {
    if (std::find(out.vars.begin(), out.vars.end(), b.vars[i]) == out.vars.end()) {
      out.vars.push_back(b.vars[i]);
      out.cards.push_back(b.cards[i]);
    }
  }
  std::size_t size = 1;
  for (std::size_t c : out.cards) size *= c;
  out.values.assign(size, 0.0);

  // Strides of a and b expressed in out's variable order.
  auto strides_for = [&](const Factor& f) {
    std::vector<std::size_t> own(f.vars.size());
    std::size_t s = 1;
    for (std::size_t i = f.vars.size(); i-- > 0;) {
      own[i] = s;
      s *= f.cards[i];
    }
    std::vector<std::size_t> mapped(out.vars.size(), 0);
    for (std::size_t i = 0; i < f.vars.size(); ++i) mapped[out.position(f.vars[i])] = own[i];
    return mapped;
  };
  const auto sa = strides_for(a);
  const auto sb = strides_for(b);
  std::vector<std::size_t> idx(out.vars.size(), 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t n = 0; n < size; ++n) {
    out.values[n] = a.values[ia] * b.values[ib];
    for (std::size_t d = out.vars.size(); d-- > 0;) {
      if (++idx[d] < out.cards[d]) {
        ia += sa[d];
        ib += sb[d];
        break;
      }
      ia -= sa[d] * (out.cards[d] - 1);
      ib -= sb[d] * (out.cards[d] - 1);
      idx[d] = 0;
    }
  }
  return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
  const std::size_t pos = f.position(var);
  Factor out;
  std::size_t inner = 1;
  for (std::size_t i = pos + 1; i < f.vars.size(); ++i) inner *= f.cards[i];
  const std::size_t k = f.cards[pos];
  const std::size_t outer = f.values.size() / (inner * k);
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    if (i != pos) {
      out.vars.push_back(f.vars[i]);
      out.cards.push_back(f.cards[i]);
    }
  }
  out.values.assign(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t v = 0; v < k; ++v) {
      const double* src = &f.values[(o * k + v) * inner];
      double* dst = &out.values[o * inner];
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  return out;
}

struct Likelihoods {
  std::map<std::size_t, std::vector<double>> by_var;
};

Likelihoods collect_evidence(const Network& net, const Evidence& ev) {
  Likelihoods out;
  auto add = [&](std::size_t v, const std::vector<double>& l) {
    auto [it, inserted] = out.by_var.emplace(v, l);
    if (!inserted) {
      for (std::size_t i = 0; i < l.size(); ++i) it->second[i] *= l[i];
    }
  };
  for (const auto& [v, value] : net.observations()) {
    std::vector<double> l(net.variable(v).values.size(), 0.0);
    l[value] = 1.0;
    add(v, l);
  }
  for (const auto& [name, value] : ev.hard) {
    const std::size_t v = net.index(name);
    std::vector<double> l(net.variable(v).values.size(), 0.0);
    l[net.value_index(v, value)] = 1.0;
    add(v, l);
  }
  for (const auto& [name, l] : ev.soft) {
    const std::size_t v = net.index(name);
    if (l.size() != net.variable(v).values.size()) {
      throw ValidationError("soft evidence on '" + name + "' has the wrong length");
    }
    for (double x : l) {
      if (!(x >= 0.0)) throw ValidationError("soft evidence on '" + name + "' has a negative entry");
    }
    add(v, l);
  }
  return out;
}

/// Variables that can influence the query: ancestors of query and evidence.
std::vector<bool> relevant_variables(const Network& net, const std::vector<std::size_t>& seeds) {
  std::vector<bool> keep(net.size(), false);
  std::vector<std::size_t> stack(seeds.begin(), seeds.end());
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (keep[v]) continue;
    keep[v] = true;
    for (std::size_t p : net.cpt(v).parents) stack.push_back(p);
  }
  return keep;
}

std::vector<std::string> joint_labels(const Network& net, const std::vector<std::size_t>& q) {
  std::vector<std::string> labels{""};
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<std::string> next;
    for (const auto& prefix : labels) {
      for (const auto& v : net.variable(q[i]).values) next.push_back(i == 0 ? v : prefix + "," + v);
    }
    labels = std::move(next);
  }
  return labels;
}

std::vector<double> exact_joint(const Network& net, const std::vector<std::size_t>& q, const Likelihoods& lik) {
  std::vector<std::size_t> seeds = q;
  for (const auto& [v, l] : lik.by_var) seeds.push_back(v);
  const auto keep = relevant_variables(net, seeds);

  std::vector<Factor> factors;
  for (std::size_t v = 0; v < net.size(); ++v) {
    if (!keep[v]) continue;
    const Cpt& c = net.cpt(v);
    Factor f;
    f.vars = c.parents;
    f.vars.push_back(v);
    for (std::size_t p : f.vars) f.cards.push_back(net.variable(p).values.size());
    f.values = c.table;
    factors.push_back(std::move(f));
  }
  for (const auto& [v, l] : lik.by_var) factors.push_back({{v}, {l.size()}, l});

  std::set<std::size_t> to_eliminate;
  for (std::size_t v = 0; v < net.size(); ++v) {
    if (keep[v] && std::find(q.begin(), q.end(), v) == q.end()) to_eliminate.insert(v);
  }
  while (!to_eliminate.empty()) {
    // Greedy min-size elimination.
    std::size_t best = *to_eliminate.begin();
    double best_size = std::numeric_limits<double>::infinity();
    for (std::size_t v : to_eliminate) {
      std::map<std::size_t, std::size_t> scope;
      for (const auto& f : factors) {
        if (std::find(f.vars.begin(), f.vars.end(), v) == f.vars.end()) continue;
        for (std::size_t i = 0; i < f.vars.size(); ++i) scope[f.vars[i]] = f.cards[i];
      }
      double size = 1.0;
      for (const auto& [var, card] : scope) size *= static_cast<double>(card);
      if (size < best_size) {
        best_size = size;
        best = v;
      }
    }
    to_eliminate.erase(best);
    std::vector<Factor> rest;
    std::optional<Factor> product;
    for (auto& f : factors) {
      if (std::find(f.vars.begin(), f.vars.end(), best) == f.vars.end()) {
        rest.push_back(std::move(f));
      } else {
        product = product ? multiply(*product, f) : std::move(f);
      }
    }
    if (product) rest.push_back(sum_out(*product, best));
    factors = std::move(rest);
  }

  Factor result{{}, {}, {1.0}};
  for (const auto& f : factors) result = multiply(result, f);
  // Reorder to the query order.
  std::vector<std::size_t> cards;
  for (std::size_t v : q) cards.push_back(net.variable(v).values.size());
  std::size_t size = 1;
  for (std::size_t c : cards) size *= c;
  std::vector<double> joint(size, 0.0);
  std::vector<std::size_t> rstride(result.vars.size());
  {
    std::size_t s = 1;
    for (std::size_t i = result.vars.size(); i-- > 0;) {
      rstride[i] = s;
      s *= result.cards[i];
    }
  }
  std::vector<std::size_t> idx(q.size(), 0);
  for (std::size_t n = 0; n < size; ++n) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < q.size(); ++i) src += idx[i] * rstride[result.position(q[i])];
    joint[n] = result.values[src];
    for (std::size_t d = q.size(); d-- > 0;) {
      if (++idx[d] < cards[d]) break;
      idx[d] = 0;
    }
  }
  return joint;
}

std::pair<std::vector<double>, double> sampled_joint(const Network& net, const std::vector<std::size_t>& q,
                                                     const Likelihoods& lik, std::size_t n, Rng& rng) {
  const auto order = net.topological_order();
  std::size_t size = 1;
  for (std::size_t v : q) size *= net.variable(v).values.size();
  std::vector<double> joint(size, 0.0);
  std::vector<std::size_t> value(net.size(), 0);
  std::vector<const std::vector<double>*> lik_of(net.size(), nullptr);
  std::vector<bool> clamped(net.size(), false);
  for (const auto& [v, l] : lik.by_var) {
    lik_of[v] = &l;
    // Variables with a single supported value are clamped rather than sampled.
    clamped[v] = std::count_if(l.begin(), l.end(), [](double x) { return x > 0.0; }) == 1;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double wsum = 0.0;
  double w2sum = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    double w = 1.0;
    for (std::size_t v : order) {
      const Cpt& c = net.cpt(v);
      std::size_t row = 0;
      for (std::size_t p : c.parents) row = row * net.variable(p).values.size() + value[p];
      const std::size_t k = net.variable(v).values.size();
      const double* probs = &c.table[row * k];
      if (clamped[v]) {
        const auto& l = *lik_of[v];
        const std::size_t x =
            static_cast<std::size_t>(std::find_if(l.begin(), l.end(), [](double y) { return y > 0.0; }) - l.begin());
        value[v] = x;
        w *= probs[x] * l[x];
      } else {
        double u = unif(rng);
        std::size_t x = 0;
        for (; x + 1 < k; ++x) {
          u -= probs[x];
          if (u < 0.0) break;
        }
        value[v] = x;
        if (lik_of[v]) w *= (*lik_of[v])[x];
      }
      if (w == 0.0) break;
    }
    if (w == 0.0) continue;
    std::size_t idx = 0;
    for (std::size_t v : q) idx = idx * net.variable(v).values.size() + value[v];
    joint[idx] += w;
    wsum += w;
    w2sum += w * w;
  }
  const double ess = w2sum > 0.0 ? wsum * wsum / w2sum : 0.0;
  return {std::move(joint), ess};
}

}  // namespace

QueryResult query(const Network& net, const std::vector<std::string>& variables, const Evidence& evidence,
                  const QueryOptions& options) {
  if (variables.empty()) throw ValidationError("query needs at least one variable");
  std::vector<std::size_t> q;
  for (const auto& name : variables) {
    const std::size_t v = net.index(name);
    if (std::find(q.begin(), q.end(), v) != q.end()) throw ValidationError("duplicate query variable '" + name + "'");
    q.push_back(v);
  }
  net.validate();
  const Likelihoods lik = collect_evidence(net, evidence);

  QueryResult result;
  std::vector<double> joint;
  if (options.method == Method::Exact) {
    joint = exact_joint(net, q, lik);
    result.effective_samples = std::numeric_limits<double>::infinity();
  } else {
    if (options.n_samples == 0) throw ValidationError("sampling needs n_samples >= 1");
    if (options.rng == nullptr) throw ValidationError("sampling needs an explicit random stream");
    auto [j, ess] = sampled_joint(net, q, lik, options.n_samples, *options.rng);
    joint = std::move(j);
    result.effective_samples = ess;
  }
  const double total = std::accumulate(joint.begin(), joint.end(), 0.0);
  if (!(total > 0.0)) throw ZeroProbabilityEvidence("evidence has zero probability under the network");
  for (double& x : joint) x /= total;
  result.distribution = Distribution(joint_labels(net, q), std::move(joint));
  return result;
}

Distribution query_marginal(const Network& net, const std::vector<std::string>& variables, const Evidence& evidence,
                            const QueryOptions& options) {
  return query(net, variables, evidence, options).distribution;
}

Network apply_evidence(const Network& net, const Evidence& evidence) {
  Network out = net;
  for (const auto& [name, value] : evidence.hard) out.observe(name, value);
  for (const auto& [name, l] : evidence.soft) {
    const std::size_t v = out.index(name);
    if (l.size() != out.variable(v).values.size()) {
      throw ValidationError("soft evidence on '" + name + "' has the wrong length");
    }
    const double top = *std::max_element(l.begin(), l.end());
    if (!(top > 0.0)) throw ZeroProbabilityEvidence("soft evidence on '" + name + "' is identically zero");
    std::string child = "evidence:" + name;
    while (out.find(child)) child += "'";
    out.add_variable(child, {"yes", "no"});
    std::vector<double> table;
    for (double x : l) {
      if (!(x >= 0.0)) throw ValidationError("soft evidence on '" + name + "' has a negative entry");
      table.push_back(x / top);
      table.push_back(1.0 - x / top);
    }
    out.set_cpt(child, {name}, std::move(table));
    out.observe(child, "yes");
  }
  return out;
}

}  // namespace mbrl::bayes
