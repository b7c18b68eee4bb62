#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbrl/domain.hpp"
#include "mbrl/errors.hpp"
#include "mbrl/simulator.hpp"

namespace {

using namespace mbrl;
using nlohmann::json;

const std::filesystem::path kData = MBRL_DATA_DIR;

json toy_json() {
  std::ifstream in(kData / "toy.json");
  std::stringstream ss;
  ss << in.rdbuf();
  return json::parse(ss.str());
}

std::size_t top_act(const NBestList& o) {
  const auto& e = o.entries();
  return std::max_element(e.begin(), e.end(), [](const auto& x, const auto& y) { return x.probability < y.probability; })
      ->user_act;
}

TEST(Simulator, NoiselessLimit) {
  const auto d = load_domain(kData / "toy.json");
  const Simulator sim(d, DirichletParams({1e6, 1.0, 1.0}));
  Rng rng(31);
  auto s = sim.reset(rng);
  const auto ask = d.action_labels.at("AskRepeat");
  int agree = 0;
  const int steps = 10000;
  for (int n = 0; n < steps; ++n) {
    const auto r = sim.step(s, ask, rng);
    if (!r.nbest.entries().empty() && top_act(r.nbest) == r.user_act) ++agree;
    s = r.next;
  }
  EXPECT_GT(agree, 0.999 * steps);
}

TEST(Simulator, NoiseChannelFractions) {
  const auto d = load_domain(kData / "toy.json");
  const Simulator sim(d);
  Rng rng(32);
  const auto ask = d.action_labels.at("AskRepeat");
  auto s = sim.reset(rng);
  std::array<int, 3> counts{};
  const int steps = 100000;
  for (int n = 0; n < steps; ++n) {
    const auto r = sim.step(s, ask, rng);
    ++counts[static_cast<std::size_t>(r.outcome)];
    if (r.outcome == RecognitionOutcome::None) {
      EXPECT_TRUE(r.nbest.entries().empty());
    } else {
      EXPECT_LE(r.nbest.entries().size(), 2U);
      EXPECT_EQ(r.nbest.entries().front().user_act == r.user_act, r.outcome == RecognitionOutcome::Correct);
    }
    s = r.next;
  }
  const double total = 5.4 + 0.52 + 1.6;
  const std::array<double, 3> expected{5.4 / total, 0.52 / total, 1.6 / total};
  for (std::size_t k = 0; k < 3; ++k) {
    const double f = counts[k] / static_cast<double>(steps);
    EXPECT_NEAR(f, expected[k], 0.02);
    // 3σ binomial band as well.
    EXPECT_NEAR(f, expected[k], 3.0 * std::sqrt(expected[k] * (1.0 - expected[k]) / steps));
  }
}

TEST(Simulator, ConfirmResponseMatchesPolicy) {
  const auto d = load_domain(kData / "toy.json");
  const Simulator sim(d);
  Rng rng(33);
  SimulatorState s;
  s.intention = d.intentions.at("Order(Tea)");
  const auto confirm = d.action_labels.at("Confirm(Order(Tea))");
  const auto affirm = d.user_acts.at("Affirm");
  const double p = sim.actual_next_act_vector(s, confirm)[affirm];
  EXPECT_GT(p, 0.9);
  const int n = 20000;
  int hits = 0;
  for (int k = 0; k < n; ++k) hits += sim.step(s, confirm, rng).user_act == affirm ? 1 : 0;
  EXPECT_NEAR(hits / static_cast<double>(n), p, 3.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST(Simulator, ActualDistributionMatchesFrequencies) {
  const auto d = load_domain(kData / "robot.json");
  const Simulator sim(d);
  Rng rng(34);
  auto s = sim.reset(rng);
  const auto a = d.action_labels.at("Greet(Hello)");
  const auto p = sim.actual_next_act_vector(s, a);
  std::vector<int> counts(p.size(), 0);
  const int n = 100000;
  for (int k = 0; k < n; ++k) ++counts[sim.step(s, a, rng).user_act];
  for (std::size_t u = 0; u < p.size(); ++u) {
    const double se = std::sqrt(std::max(p[u] * (1.0 - p[u]), 1e-12) / n);
    EXPECT_NEAR(counts[u] / static_cast<double>(n), p[u], 3.0 * se + 1e-12) << d.user_acts[u];
  }
}

TEST(Simulator, ActualDistributionIgnoresNoise) {
  const auto d = load_domain(kData / "robot.json");
  const Simulator noisy(d, DirichletParams({1.0, 5.0, 5.0}));
  const Simulator clean(d, DirichletParams({1e6, 1.0, 1.0}));
  Rng rng(35);
  const auto s = noisy.reset(rng);
  for (std::size_t a = 0; a < d.action_count(); ++a) {
    EXPECT_EQ(noisy.actual_next_act_vector(s, a), clean.actual_next_act_vector(s, a));
  }
}

TEST(Simulator, DeterministicPolicyGivesPointMass) {
  auto j = toy_json();
  j["simulator"]["rules"][0]["cases"][0]["effects"] = json::array({{{"value", "Affirm"}, {"p", 1.0}}});
  const auto d = parse_domain(j.dump());
  const Simulator sim(d);
  SimulatorState s;
  s.intention = d.intentions.at("Order(Coffee)");
  const auto dist = sim.actual_next_act_distribution(s, d.action_labels.at("Confirm(Order(Coffee))"));
  EXPECT_EQ(dist.prob("Affirm"), 1.0);
}

TEST(Simulator, ActualDistributionNormalized) {
  const auto d = load_domain(kData / "robot.json");
  const Simulator sim(d);
  Rng rng(36);
  for (int n = 0; n < 200; ++n) {
    SimulatorState s;
    s.intention = rng() % d.intention_count();
    s.context = rng() % d.context_count();
    const auto p = sim.actual_next_act_vector(s, rng() % d.action_count());
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double x : p) EXPECT_GE(x, 0.0);
  }
}

TEST(Simulator, EpisodeDone) {
  const auto d = load_domain(kData / "toy.json");
  const Simulator sim(d);
  Rng rng(37);
  const auto fresh = sim.reset(rng);
  EXPECT_FALSE(sim.episode_done(fresh));
  auto s = fresh;
  s.turn = sim.max_turns();
  EXPECT_TRUE(sim.episode_done(s));
}

TEST(Simulator, TerminalIntentionEndsEpisode) {
  auto j = toy_json();
  j["simulator"]["terminal_intentions"] = {"Order(Water)"};
  j["simulator"]["tasks_per_episode"] = 0;
  j["simulator"]["rules"][2]["cases"][0]["effects"] = json::array({{{"value", "Order(Water)"}, {"p", 1.0}}});
  const auto d = parse_domain(j.dump());
  const Simulator sim(d);
  Rng rng(38);
  auto s = sim.reset(rng);
  EXPECT_NE(d.intentions[s.intention], "Order(Water)");
  const auto ask = d.action_labels.at("AskRepeat");
  for (int turn = 1; turn <= 2; ++turn) {
    s = sim.step(s, ask, rng).next;
    EXPECT_FALSE(sim.episode_done(s)) << "turn " << turn;
  }
  const auto r = sim.step(s, d.action_labels.at("Execute(" + d.intentions[s.intention] + ")"), rng);
  EXPECT_TRUE(r.task_completed);
  EXPECT_EQ(r.next.turn, 3U);
  EXPECT_TRUE(sim.episode_done(r.next));
}

TEST(Simulator, TaskQuotaEndsEpisode) {
  const auto d = load_domain(kData / "toy.json");
  const Simulator sim(d);
  Rng rng(39);
  auto s = sim.reset(rng);
  std::size_t completed = 0;
  while (!sim.episode_done(s)) {
    const auto r = sim.step(s, d.action_labels.at("Execute(" + d.intentions[s.intention] + ")"), rng);
    completed += r.task_completed ? 1 : 0;
    s = r.next;
  }
  EXPECT_EQ(completed, d.simulator.tasks_per_episode);
  EXPECT_TRUE(s.terminal);
}

TEST(Simulator, ExecutedPickUpChangesContext) {
  const auto d = load_domain(kData / "robot.json");
  const Simulator sim(d);
  Rng rng(40);
  SimulatorState s = sim.reset(rng);
  EXPECT_EQ(d.contexts.label(s.context), "carrying=none,visible=both");
  s.intention = d.intentions.at("PickUp(Box)");
  const auto r = sim.step(s, d.action_labels.at("Execute(PickUp(Box))"), rng);
  EXPECT_EQ(d.contexts.label(r.next.context), "carrying=Box,visible=both");
  const auto wrong = sim.step(s, d.action_labels.at("Execute(PickUp(Cylinder))"), rng);
  EXPECT_EQ(wrong.next.context, s.context);
}

TEST(Simulator, ReproducibleUnderSeed) {
  const auto d = load_domain(kData / "robot.json");
  const Simulator sim(d);
  auto trace = [&](std::uint64_t seed) {
    Rng rng(seed);
    auto s = sim.reset(rng);
    std::vector<double> out;
    for (int k = 0; k < 200; ++k) {
      const auto r = sim.step(s, k % d.action_count(), rng);
      out.push_back(static_cast<double>(r.user_act));
      for (const auto& e : r.nbest.entries()) out.push_back(e.probability);
      s = sim.episode_done(r.next) ? sim.reset(rng) : r.next;
    }
    return out;
  };
  EXPECT_EQ(trace(5), trace(5));
  EXPECT_NE(trace(5), trace(6));
}

TEST(Simulator, RejectsBadInput) {
  const auto d = load_domain(kData / "toy.json");
  EXPECT_THROW(Simulator(d, DirichletParams({1.0, 1.0})), ValidationError);
  const Simulator sim(d);
  Rng rng(1);
  EXPECT_THROW(sim.step(sim.reset(rng), d.action_count(), rng), ValidationError);
}

}  // namespace
