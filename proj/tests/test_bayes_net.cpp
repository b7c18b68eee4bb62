#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mbrl/bayes_net.hpp"
#include "mbrl/errors.hpp"
#include "mbrl/rng.hpp"

namespace {

using namespace mbrl;
using namespace mbrl::bayes;

Network chain_identity() {
  Network net;
  net.add_root("X", {"a", "b"}, {0.5, 0.5});
  net.add_variable("Y", {"a", "b"});
  net.set_cpt("Y", {"X"}, {1.0, 0.0, 0.0, 1.0});
  return net;
}

TEST(BayesNet, IdentityChain) {
  const auto net = chain_identity();
  const auto d = query_marginal(net, {"X"}, Evidence().set_hard("Y", "b"));
  EXPECT_DOUBLE_EQ(d.prob("b"), 1.0);
  EXPECT_DOUBLE_EQ(d.prob("a"), 0.0);
}

TEST(BayesNet, PriorRecovery) {
  Network net;
  net.add_root("R", {"lo", "hi"}, {0.2, 0.8});
  const auto d = query_marginal(net, {"R"});
  EXPECT_NEAR(d.prob("lo"), 0.2, 1e-15);
  EXPECT_NEAR(d.prob("hi"), 0.8, 1e-15);
}

TEST(BayesNet, HardEvidenceMatchesBayesRule) {
  Network net;
  net.add_root("D", {"yes", "no"}, {0.1, 0.9});
  net.add_variable("T", {"pos", "neg"});
  net.set_cpt("T", {"D"}, {0.9, 0.1, 0.2, 0.8});
  const double expected = 0.1 * 0.9 / (0.1 * 0.9 + 0.9 * 0.2);
  EXPECT_NEAR(query_marginal(net, {"D"}, Evidence().set_hard("T", "pos")).prob("yes"), expected, 1e-12);

  const auto folded = apply_evidence(net, Evidence().set_hard("T", "pos"));
  EXPECT_NEAR(query_marginal(folded, {"D"}).prob("yes"), expected, 1e-12);
}

TEST(BayesNet, SoftEvidence) {
  Network net;
  net.add_root("B", {"0", "1"}, {0.5, 0.5});
  auto d = query_marginal(apply_evidence(net, Evidence().set_soft("B", {0.8, 0.2})), {"B"});
  EXPECT_NEAR(d.prob("0"), 0.8, 1e-12);
  EXPECT_NEAR(d.prob("1"), 0.2, 1e-12);

  net.add_variable("C", {"x", "y", "z"});
  net.set_cpt("C", {"B"}, {0.2, 0.3, 0.5, 0.6, 0.3, 0.1});
  const auto before = query_marginal(net, {"C"});
  const auto after = query_marginal(apply_evidence(net, Evidence().set_soft("B", {0.4, 0.4})), {"C"});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(before[i], after[i], 1e-12);
}

TEST(BayesNet, ZeroProbabilityEvidenceThrows) {
  const auto net = chain_identity();
  Network observed = net;
  observed.observe("X", "a");
  EXPECT_THROW(query_marginal(observed, {"X"}, Evidence().set_hard("Y", "b")), ZeroProbabilityEvidence);
  Rng rng(1);
  EXPECT_THROW(query_marginal(observed, {"X"}, Evidence().set_hard("Y", "b"), {Method::Sampling, 1000, &rng}),
               ZeroProbabilityEvidence);
}

TEST(BayesNet, Validation) {
  Network net;
  net.add_variable("A", {"0", "1"});
  EXPECT_THROW(net.set_cpt("A", {"Missing"}, {1.0, 0.0}), ValidationError);
  EXPECT_THROW(net.set_cpt("A", {}, {0.7, 0.7}), ValidationError);
  EXPECT_THROW(net.set_cpt("A", {}, {1.0}), ValidationError);
  EXPECT_THROW(net.validate(), ValidationError);
  EXPECT_THROW(apply_evidence(chain_identity(), Evidence().set_hard("Z", "a")), ValidationError);
  EXPECT_THROW(query_marginal(chain_identity(), {"Z"}), ValidationError);
  Rng rng(1);
  EXPECT_THROW(query_marginal(chain_identity(), {"X"}, {}, {Method::Sampling, 0, &rng}), ValidationError);
  EXPECT_THROW(query_marginal(chain_identity(), {"X"}, {}, {Method::Sampling, 10, nullptr}), ValidationError);
}

TEST(BayesNet, CycleIsRejected) {
  Network net;
  net.add_variable("A", {"0", "1"});
  net.add_variable("B", {"0", "1"});
  net.set_cpt("A", {"B"}, {1, 0, 0, 1});
  net.set_cpt("B", {"A"}, {1, 0, 0, 1});
  EXPECT_THROW(net.topological_order(), ValidationError);
}

TEST(BayesNet, JointQuerySupport) {
  const auto d = query_marginal(chain_identity(), {"X", "Y"});
  EXPECT_EQ(d.support(), (std::vector<std::string>{"a,a", "a,b", "b,a", "b,b"}));
  EXPECT_DOUBLE_EQ(d.prob("a,a"), 0.5);
  EXPECT_DOUBLE_EQ(d.prob("a,b"), 0.0);
}

TEST(BayesNet, GoldenDump) {
  Network net;
  net.add_root("Weather", {"sun", "rain"}, {0.75, 0.25});
  net.add_variable("Mood", {"good", "bad"});
  net.set_cpt("Mood", {"Weather"}, {0.9, 0.1, 0.3, 0.7});
  net.observe("Mood", "good");
  net.attach_parameter("theta", DirichletParams({2.0, 1.0}));
  const std::string expected =
      "Weather {sun,rain}\n"
      "  0.75 0.25\n"
      "Mood {good,bad} | Weather observed=good\n"
      "  0.9 0.1\n"
      "  0.3 0.7\n"
      "param theta (2,1)\n";
  EXPECT_EQ(net.dump(), expected);
}

/// Random DAG over ≤6 variables: each variable draws up to two parents
/// among earlier ones.
struct RandomNet {
  Network net;
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> parents;
  std::vector<std::vector<std::string>> values;
  std::vector<std::vector<double>> tables;
};

RandomNet make_random_net(std::mt19937_64& rng) {
  RandomNet r;
  const std::size_t n = 2 + rng() % 5;
  std::gamma_distribution<double> g(1.0, 1.0);
  for (std::size_t v = 0; v < n; ++v) {
    r.names.push_back("V" + std::to_string(v));
    const std::size_t card = 2 + rng() % 2;
    std::vector<std::string> vals;
    for (std::size_t k = 0; k < card; ++k) vals.push_back("s" + std::to_string(k));
    r.values.push_back(vals);
    std::vector<std::string> ps;
    std::size_t rows = 1;
    for (std::size_t p = 0; p < v && ps.size() < 2; ++p) {
      if (rng() % 2 == 0) {
        ps.push_back(r.names[p]);
        rows *= r.values[p].size();
      }
    }
    r.parents.push_back(ps);
    std::vector<double> table(rows * card);
    for (std::size_t row = 0; row < rows; ++row) {
      double s = 0.0;
      for (std::size_t k = 0; k < card; ++k) s += (table[row * card + k] = g(rng) + 0.05);
      for (std::size_t k = 0; k < card; ++k) table[row * card + k] /= s;
    }
    r.tables.push_back(table);
  }
  for (std::size_t v = 0; v < n; ++v) r.net.add_variable(r.names[v], r.values[v]);
  for (std::size_t v = 0; v < n; ++v) r.net.set_cpt(r.names[v], r.parents[v], r.tables[v]);
  return r;
}

TEST(BayesNetProperty, SamplingAgreesWithExact) {
  std::mt19937_64 gen(2024);
  Rng rng(99);
  int checked = 0;
  for (int k = 0; k < 60; ++k) {
    auto r = make_random_net(gen);
    Evidence ev;
    const std::size_t last = r.names.size() - 1;
    if (k % 2 == 0) ev.set_hard(r.names[last], "s0");
    if (k % 3 == 0) ev.set_soft(r.names[0], std::vector<double>(r.values[0].size(), 0.5));
    const std::string q = r.names[k % 2 == 0 ? 0 : last];
    const auto exact = query_marginal(r.net, {q}, ev);
    const auto sampled = query(r.net, {q}, ev, {Method::Sampling, 20000, &rng});
    ASSERT_GT(sampled.effective_samples, 100.0);
    for (std::size_t i = 0; i < exact.size(); ++i) {
      const double p = exact[i];
      const double se = std::sqrt(std::max(p * (1.0 - p), 1e-6) / sampled.effective_samples);
      EXPECT_LE(std::abs(sampled.distribution[i] - p), 3.0 * se) << "net " << k << " value " << i;
    }
    ++checked;
  }
  EXPECT_GE(checked, 50);
}

TEST(BayesNetProperty, LargeSampleTotalVariation) {
  Network net;
  net.add_root("A", {"0", "1", "2"}, {0.2, 0.5, 0.3});
  net.add_variable("B", {"0", "1"});
  net.set_cpt("B", {"A"}, {0.9, 0.1, 0.4, 0.6, 0.2, 0.8});
  net.add_variable("C", {"0", "1"});
  net.set_cpt("C", {"A", "B"}, {0.5, 0.5, 0.1, 0.9, 0.3, 0.7, 0.8, 0.2, 0.6, 0.4, 0.05, 0.95});
  Rng rng(7);
  const auto exact = query_marginal(net, {"A"}, Evidence().set_hard("C", "1"));
  const auto sampled = query_marginal(net, {"A"}, Evidence().set_hard("C", "1"), {Method::Sampling, 100000, &rng});
  EXPECT_LT(exact.total_variation(sampled), 0.01);
}

TEST(BayesNetProperty, ReorderingInvariance) {
  std::mt19937_64 gen(5);
  for (int k = 0; k < 100; ++k) {
    auto r = make_random_net(gen);
    // Insert variables in reverse and CPTs in a shuffled order.
    Network other;
    for (std::size_t v = r.names.size(); v-- > 0;) other.add_variable(r.names[v], r.values[v]);
    std::vector<std::size_t> order(r.names.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen);
    for (std::size_t v : order) other.set_cpt(r.names[v], r.parents[v], r.tables[v]);
    Evidence ev;
    ev.set_hard(r.names.back(), "s1");
    for (const auto& name : r.names) {
      const auto a = query_marginal(r.net, {name}, ev);
      const auto b = query_marginal(other, {name}, ev);
      for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
    }
  }
}

TEST(BayesNetProperty, Normalization) {
  std::mt19937_64 gen(8);
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    auto r = make_random_net(gen);
    for (auto method : {Method::Exact, Method::Sampling}) {
      const auto d = query_marginal(r.net, {r.names[k % r.names.size()]}, {}, {method, 500, &rng});
      const double sum = std::accumulate(d.probs().begin(), d.probs().end(), 0.0);
      EXPECT_NEAR(sum, 1.0, 1e-9);
      for (double p : d.probs()) EXPECT_GE(p, 0.0);
    }
  }
}

}  // namespace
