#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "mbrl/errors.hpp"
#include "mbrl/harness.hpp"

namespace {

using namespace mbrl;

const std::filesystem::path kData = MBRL_DATA_DIR;
const std::filesystem::path kTestData = std::filesystem::path(__FILE__).parent_path() / "data";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_code(const std::string& args) {
  const std::string cmd = std::string(MBRL_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Kl, ClosedForms) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-9);
  EXPECT_NEAR(kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}), std::log(2.0), 1e-5);
  EXPECT_NEAR(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{0.75, 0.25}),
              0.5 * std::log(2.0 / 3.0) + 0.5 * std::log(2.0), 1e-5);
  EXPECT_NEAR(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{0.75, 0.25}), 0.1438, 1e-4);
}

TEST(Kl, SmoothingKeepsZeroPredictionsFinite) {
  const double kl = kl_divergence(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 0.0});
  EXPECT_TRUE(std::isfinite(kl));
  EXPECT_NEAR(kl, std::log((1.0 + 2e-6) / 1e-6), 1e-9);
}

TEST(Kl, MismatchedSupportThrows) {
  EXPECT_THROW(kl_divergence(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), ValidationError);
  EXPECT_THROW(kl_divergence(Distribution({"a", "b"}, {0.5, 0.5}), Distribution({"a", "c"}, {0.5, 0.5})),
               ValidationError);
}

TEST(KlProperty, NonnegativeAndZeroOnlyWhenEqual) {
  std::mt19937_64 rng(41);
  std::gamma_distribution<double> g(0.7, 1.0);
  for (int n = 0; n < 500; ++n) {
    const std::size_t k = 2 + rng() % 8;
    std::vector<double> p(k), q(k);
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      sp += (p[i] = n % 5 == 0 && i == 0 ? 0.0 : g(rng));
      sq += (q[i] = g(rng));
    }
    for (std::size_t i = 0; i < k; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const double eps = 1e-6;
    std::vector<double> smoothed(k);
    for (std::size_t i = 0; i < k; ++i) smoothed[i] = (q[i] + eps) / (1.0 + eps * static_cast<double>(k));
    double tv = 0.0;
    for (std::size_t i = 0; i < k; ++i) tv += 0.5 * std::abs(p[i] - smoothed[i]);
    const double kl = kl_divergence(p, q, eps);
    EXPECT_GE(kl, 0.0);
    // Pinsker: KL ≥ 2·TV², so a vanishing KL forces p onto the smoothed q.
    EXPECT_GE(kl, 2.0 * tv * tv - 1e-12);
    EXPECT_NEAR(kl_divergence(smoothed, q, eps), 0.0, 1e-9);
  }
}

class RobotEpisode : public ::testing::Test {
 protected:
  void SetUp() override { domain = load_domain(kData / "robot.json"); }
  DomainSpec domain;
};

TEST_F(RobotEpisode, AskRepeatPolicyCostsOnePerTurn) {
  const Simulator sim(domain);
  const Planner planner(RewardModel(domain), PlanConfig{});
  LearnerState ls{TransitionModel::from_domain(domain, ModelKind::Rules), BeliefState::uniform(domain), {}, 0};
  const auto ask = domain.action_labels.at("AskRepeat");
  EpisodeOptions options;
  options.policy = [ask](const BeliefState&, const TransitionModel&, Rng&) { return ask; };
  Rng rng(42);
  for (int ep = 0; ep < 3; ++ep) {
    const auto rec = run_episode(domain, ls, planner, sim, rng, options);
    ASSERT_TRUE(rec.error.empty()) << rec.error;
    EXPECT_GE(rec.turns, 1U);
    EXPECT_EQ(rec.total_return, -static_cast<double>(rec.turns));
  }
}

TEST_F(RobotEpisode, TrueModelWithoutNoisePredictsActualActs) {
  const Simulator sim(domain, DirichletParams({1e6, 1.0, 1.0}));
  const Planner planner(RewardModel(domain), PlanConfig{});
  LearnerState ls{sim.truth(), BeliefState::uniform(domain), {}, 0};
  EpisodeOptions options;
  options.learn = false;
  options.record_trace = true;
  Rng rng(43);
  for (int ep = 0; ep < 5; ++ep) {
    const auto rec = run_episode(domain, ls, planner, sim, rng, options);
    ASSERT_TRUE(rec.error.empty()) << rec.error;
    for (const auto& t : rec.trace) EXPECT_LT(t.kl, 0.05) << "episode " << ep << " turn " << t.turn;
  }
}

TEST_F(RobotEpisode, TrueModelBeatsPriorOnKl) {
  const Simulator sim(domain);
  const Planner planner(RewardModel(domain), PlanConfig{});
  auto mean_kl = [&](TransitionModel model) {
    LearnerState ls{std::move(model), BeliefState::uniform(domain), {}, 0};
    EpisodeOptions options;
    options.learn = false;
    Rng rng(44);
    double total = 0.0;
    for (int ep = 0; ep < 20; ++ep) total += run_episode(domain, ls, planner, sim, rng, options).mean_kl;
    return total / 20.0;
  };
  const double truth = mean_kl(sim.truth());
  EXPECT_LE(truth, mean_kl(TransitionModel::from_domain(domain, ModelKind::Multinomial)));
  EXPECT_LE(truth, mean_kl(TransitionModel::from_domain(domain, ModelKind::Rules)));
}

TEST_F(RobotEpisode, DeterministicUnderSeed) {
  const Simulator sim(domain);
  const Planner planner(RewardModel(domain), PlanConfig{});
  auto play = [&] {
    LearnerState ls{TransitionModel::from_domain(domain, ModelKind::Rules), BeliefState::uniform(domain), {}, 0};
    ls.config.theta_samples = 20;
    EpisodeOptions options;
    options.record_trace = true;
    Rng rng(45);
    std::vector<EpisodeRecord> out;
    for (int ep = 0; ep < 2; ++ep) out.push_back(run_episode(domain, ls, planner, sim, rng, options));
    std::ostringstream ss;
    write_trace_csv(ss, domain, out);
    write_detail_csv(ss, out);
    return ss.str();
  };
  EXPECT_EQ(play(), play());
}

ExperimentConfig small_config(ModelKind kind) {
  ExperimentConfig cfg;
  cfg.domain_path = kData / "toy.json";
  cfg.model = kind;
  cfg.runs = 2;
  cfg.episodes = 3;
  cfg.seed = 17;
  cfg.learner.theta_samples = 20;
  cfg.workers = 2;
  return cfg;
}

TEST(Experiment, RowCountsAndAggregate) {
  const auto d = load_domain(kData / "toy.json");
  const auto result = run_experiment(d, small_config(ModelKind::Multinomial));
  ASSERT_EQ(result.records.size(), 6U);
  ASSERT_EQ(result.aggregate.size(), 3U);
  for (std::size_t ep = 1; ep <= 3; ++ep) {
    double ret = 0.0, kl = 0.0;
    for (const auto& r : result.records) {
      if (r.episode != ep) continue;
      ret += r.total_return / 2.0;
      kl += r.mean_kl / 2.0;
      EXPECT_GE(r.turns, 1U);
      EXPECT_GE(r.mean_kl, 0.0);
    }
    EXPECT_EQ(result.aggregate[ep - 1].episode, ep);
    EXPECT_NEAR(result.aggregate[ep - 1].mean_return, ret, 1e-12);
    EXPECT_NEAR(result.aggregate[ep - 1].mean_kl, kl, 1e-12);
  }
  std::ostringstream detail, agg;
  write_detail_csv(detail, result.records);
  write_aggregate_csv(agg, result.aggregate);
  const std::string d_text = detail.str();
  const std::string a_text = agg.str();
  EXPECT_EQ(d_text.rfind("run,episode,return,mean_kl,turns,wall_ms\n", 0), 0U);
  EXPECT_EQ(a_text.rfind("episode,mean_return,se_return,mean_kl,se_kl\n", 0), 0U);
  EXPECT_EQ(std::count(d_text.begin(), d_text.end(), '\n'), 7);
  EXPECT_EQ(std::count(a_text.begin(), a_text.end(), '\n'), 4);
}

TEST(Experiment, WorkerCountDoesNotChangeResults) {
  const auto d = load_domain(kData / "toy.json");
  auto cfg = small_config(ModelKind::Rules);
  std::ostringstream a, b;
  write_detail_csv(a, run_experiment(d, cfg).records);
  cfg.workers = 1;
  write_detail_csv(b, run_experiment(d, cfg).records);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Experiment, InterruptStopsEarly) {
  const auto d = load_domain(kData / "toy.json");
  interrupt_flag() = true;
  const auto result = run_experiment(d, small_config(ModelKind::Rules));
  interrupt_flag() = false;
  EXPECT_TRUE(result.interrupted);
  EXPECT_TRUE(result.records.empty());
}

TEST(Experiment, Validation) {
  auto cfg = small_config(ModelKind::Rules);
  cfg.runs = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = small_config(ModelKind::Rules);
  cfg.episodes = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Cli, RunIsByteIdenticalAcrossInvocations) {
  const auto dir = std::filesystem::temp_directory_path() / "mbrl_cli_test";
  std::filesystem::create_directories(dir);
  const std::string base = "run --domain " + (kData / "toy.json").string() +
                           " --model rules --runs 2 --episodes 3 --theta-samples 20 --seed 5 --out ";
  ASSERT_EQ(exit_code(base + (dir / "a.csv").string()), 0);
  ASSERT_EQ(exit_code(base + (dir / "b.csv").string()), 0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(slurp(dir / "a_aggregate.csv"), slurp(dir / "b_aggregate.csv"));
  EXPECT_FALSE(slurp(dir / "a.csv").empty());
  std::filesystem::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(exit_code(""), 1);
  EXPECT_EQ(exit_code("run --domain /does/not/exist.json --out x.csv"), 1);
  EXPECT_EQ(exit_code("run --domain " + (kData / "toy.json").string() + " --model lstm --out x.csv"), 1);
  const auto bad = std::filesystem::temp_directory_path() / "mbrl_bad_domain.json";
  std::ofstream(bad) << "{\n";
  EXPECT_EQ(exit_code("run --domain " + bad.string() + " --out x.csv"), 2);
  std::filesystem::remove(bad);
  EXPECT_EQ(exit_code("plan --domain " + (kData / "toy.json").string() + " --belief " +
                      (kTestData / "toy_belief.json").string()),
            0);
  EXPECT_EQ(exit_code("fit-dirichlet --samples " + (kTestData / "samples.csv").string()), 0);
}

}  // namespace
