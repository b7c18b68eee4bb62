#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mbrl/belief.hpp"
#include "mbrl/domain.hpp"
#include "mbrl/errors.hpp"
#include "mbrl/reward.hpp"

namespace {

using namespace mbrl;
using nlohmann::json;

const std::filesystem::path kData = MBRL_DATA_DIR;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json toy_json() { return json::parse(read_file(kData / "toy.json")); }

TEST(Domain, LoadsToyFixture) {
  const auto d = load_domain(kData / "toy.json");
  EXPECT_EQ(d.intention_count(), 3U);
  EXPECT_EQ(d.user_act_count(), 5U);
  EXPECT_EQ(d.action_count(), 7U);
  EXPECT_EQ(d.context_count(), 1U);
  EXPECT_EQ(d.state_count(), 15U);
}

TEST(Domain, RobotStateCount) {
  const auto d = load_domain(kData / "robot.json");
  EXPECT_EQ(d.intention_count(), 11U);
  EXPECT_EQ(d.user_act_count(), 16U);
  EXPECT_EQ(d.action_count(), 37U);
  EXPECT_EQ(d.context_count(), 12U);
  EXPECT_EQ(d.state_count(), 2112U);
}

TEST(Domain, ActionKindsAndTypes) {
  const auto d = load_domain(kData / "toy.json");
  const auto execute = d.action_labels.at("Execute(Order(Tea))");
  EXPECT_EQ(d.machine_actions[execute].type, "Execute");
  EXPECT_EQ(d.machine_actions[execute].kind, ActionKind::Physical);
  const auto confirm = d.action_labels.at("Confirm(Order(Tea))");
  EXPECT_EQ(d.machine_actions[confirm].kind, ActionKind::Conversational);
  EXPECT_EQ(d.action_types(), (std::vector<std::string>{"Execute", "Confirm", "AskRepeat"}));
}

TEST(Domain, LabelsAreCanonicalized) {
  auto j = toy_json();
  j["intentions"] = {"Order( Coffee )", "Order(Tea)", "Order(Water)"};
  const auto d = parse_domain(j.dump());
  EXPECT_EQ(d.intentions[0], "Order(Coffee)");
  EXPECT_TRUE(d.intentions.find("Order(Coffee)").has_value());
}

TEST(Domain, UnknownIntentionInRuleIsRejected) {
  auto j = toy_json();
  j["model_config"]["rules"]["rules"][0]["cases"][0]["if"] = "a_m = Confirm(X) && i_u' = Order(Juice)";
  try {
    parse_domain(j.dump());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("Order(Juice)"), std::string::npos) << e.what();
  }
}

TEST(Domain, UnknownRewardActionIsRejected) {
  auto j = toy_json();
  j["rewards"].push_back({{"action", "Dance"}, {"value", 1}});
  EXPECT_THROW(parse_domain(j.dump()), ValidationError);
}

TEST(Domain, DuplicateLabelsAreRejected) {
  auto j = toy_json();
  j["intentions"] = {"Order(Tea)", "Order(Tea)"};
  EXPECT_THROW(parse_domain(j.dump()), ValidationError);
}

TEST(Domain, EmptyVocabularyIsRejected) {
  auto j = toy_json();
  j["intentions"] = json::array();
  EXPECT_THROW(parse_domain(j.dump()), ValidationError);
}

TEST(Domain, SyntaxErrorReportsLine) {
  const std::string text = "{\n  \"schema_version\": 1,\n  \"name\": \"broken\",\n  \"intentions\": [\n}";
  try {
    parse_domain(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GE(e.line(), 4U);
  }
}

TEST(Domain, UnsupportedSchemaVersion) {
  auto j = toy_json();
  j["schema_version"] = 99;
  EXPECT_THROW(parse_domain(j.dump()), Error);
}

TEST(Domain, MissingFileIsAnError) { EXPECT_THROW(load_domain(kData / "does_not_exist.json"), Error); }

TEST(Domain, SaveLoadRoundTrip) {
  for (const char* name : {"toy.json", "robot.json"}) {
    const auto d = load_domain(kData / name);
    const auto path = std::filesystem::temp_directory_path() / (std::string("mbrl_roundtrip_") + name);
    save_domain(d, path);
    const auto again = load_domain(path);
    EXPECT_EQ(serialize_domain(again), serialize_domain(d)) << name;
    EXPECT_EQ(again.intentions.labels(), d.intentions.labels());
    EXPECT_EQ(again.user_acts.labels(), d.user_acts.labels());
    EXPECT_EQ(again.action_labels.labels(), d.action_labels.labels());
    std::filesystem::remove(path);
  }
}

TEST(NBest, Invariants) {
  EXPECT_NO_THROW(NBestList({{0, 0.6}, {1, 0.4}}));
  EXPECT_NO_THROW(NBestList());
  EXPECT_THROW(NBestList({{0, 0.0}}), ValidationError);
  EXPECT_THROW(NBestList({{0, 1.2}}), ValidationError);
  EXPECT_THROW(NBestList({{0, 0.7}, {1, 0.4}}), ValidationError);
  EXPECT_THROW(NBestList({{0, 0.3}, {0, 0.3}}), ValidationError);
  EXPECT_NEAR(NBestList({{0, 0.5}, {2, 0.25}}).total(), 0.75, 1e-15);
}

class RobotRewards : public ::testing::Test {
 protected:
  void SetUp() override {
    domain = load_domain(kData / "robot.json");
    rewards = RewardModel(domain);
  }
  double r(const std::string& action, const std::string& intention, std::size_t context = 0) const {
    return rewards.reward(domain.action_labels.at(action), domain.intentions.at(intention), context);
  }
  DomainSpec domain;
  RewardModel rewards;
};

TEST_F(RobotRewards, TableValues) {
  EXPECT_EQ(r("Execute(Move(Left))", "Move(Left)"), 6.0);
  EXPECT_EQ(r("Execute(Move(Left))", "Move(Right)"), -6.0);
  EXPECT_EQ(r("Answer(AskSee(Box))", "AskSee(Box)"), 6.0);
  EXPECT_EQ(r("Ground(SitDown)", "SitDown"), 2.0);
  EXPECT_EQ(r("Ground(SitDown)", "StandUp"), -6.0);
  EXPECT_EQ(r("Confirm(Release)", "Release"), -0.5);
  EXPECT_EQ(r("Confirm(Release)", "SitDown"), -1.5);
  EXPECT_EQ(r("Ignore", "Release"), -1.5);
  for (std::size_t c = 0; c < domain.context_count(); ++c) {
    for (const auto& i : domain.intentions.labels()) EXPECT_EQ(r("AskRepeat", i, c), -1.0);
  }
}

TEST_F(RobotRewards, DialogueStateOverload) {
  const DialogueState s{domain.user_acts.at("Affirm"), domain.intentions.at("Release"), 3};
  EXPECT_EQ(rewards.reward(s, domain.action_labels.at("Confirm(Release)")), -0.5);
}

TEST_F(RobotRewards, PureFunction) {
  const auto a = domain.action_labels.at("Execute(PickUp(Box))");
  const double first = rewards.reward(a, 4, 5);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(rewards.reward(a, 4, 5), first);
}

TEST(Reward, FirstMatchWinsAndUnmatchedIsZero) {
  auto j = toy_json();
  j["rewards"] = json::array({
      {{"action", "Execute(X)"}, {"when", "i_u = X"}, {"value", 6}},
      {{"action", "Execute(Order(Tea))"}, {"value", 100}},
      {{"action", "Execute(X)"}, {"value", -6}},
  });
  const auto d = parse_domain(j.dump());
  const RewardModel rm(d);
  const auto tea = d.intentions.at("Order(Tea)");
  const auto coffee = d.intentions.at("Order(Coffee)");
  EXPECT_EQ(rm.reward(d.action_labels.at("Execute(Order(Tea))"), tea, 0), 6.0);
  EXPECT_EQ(rm.reward(d.action_labels.at("Execute(Order(Tea))"), coffee, 0), 100.0);
  EXPECT_EQ(rm.reward(d.action_labels.at("Execute(Order(Coffee))"), tea, 0), -6.0);
  EXPECT_EQ(rm.reward(d.action_labels.at("AskRepeat"), tea, 0), 0.0);
}

TEST(BeliefReward, Examples) {
  const RewardModel rm(1, 2, 1, {6.0, -6.0});
  EXPECT_DOUBLE_EQ(rm.belief_reward(BeliefState(2, 1, {1.0, 0.0}), 0), 6.0);
  EXPECT_DOUBLE_EQ(rm.belief_reward(BeliefState(2, 1, {0.5, 0.5}), 0), 0.0);
  EXPECT_NEAR(rm.belief_reward(BeliefState(2, 1, {0.7, 0.3}), 0), 2.4, 1e-12);
}

TEST(BeliefReward, PointMassEqualsStateReward) {
  const auto d = load_domain(kData / "robot.json");
  const RewardModel rm(d);
  std::mt19937_64 rng(11);
  for (int n = 0; n < 100; ++n) {
    const std::size_t i = rng() % d.intention_count();
    const std::size_t c = rng() % d.context_count();
    const std::size_t a = rng() % d.action_count();
    EXPECT_EQ(rm.belief_reward(BeliefState::point_mass(d, i, c), a), rm.reward(a, i, c));
  }
}

std::vector<double> random_joint(std::size_t n, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(0.5, 1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) s += (x = g(rng) + 1e-12);
  for (auto& x : v) x /= s;
  return v;
}

TEST(BeliefReward, LinearInBelief) {
  const auto d = load_domain(kData / "robot.json");
  const RewardModel rm(d);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = d.intention_count() * d.context_count();
  for (int k = 0; k < 200; ++k) {
    const BeliefState b1(d.intention_count(), d.context_count(), random_joint(n, rng));
    const BeliefState b2(d.intention_count(), d.context_count(), random_joint(n, rng));
    const double lambda = u(rng);
    const std::size_t a = rng() % d.action_count();
    const double mixed = rm.belief_reward(BeliefState::mix(b1, b2, lambda), a);
    const double expected = lambda * rm.belief_reward(b1, a) + (1.0 - lambda) * rm.belief_reward(b2, a);
    EXPECT_NEAR(mixed, expected, 1e-12);
  }
}

TEST(Context, MixedRadixRoundTrip) {
  const auto d = load_domain(kData / "robot.json");
  for (std::size_t c = 0; c < d.context_count(); ++c) {
    EXPECT_EQ(d.contexts.encode(d.contexts.decode(c)), c);
  }
  EXPECT_EQ(d.contexts.label(0), "carrying=none,visible=none");
  EXPECT_EQ(d.contexts.value_of(d.contexts.encode({2, 1}), 0), 2U);
}

}  // namespace
