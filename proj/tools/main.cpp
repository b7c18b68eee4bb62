#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mbrl/dirichlet.hpp"
#include "mbrl/domain.hpp"
#include "mbrl/errors.hpp"
#include "mbrl/harness.hpp"
#include "mbrl/planner.hpp"
#include "mbrl/reward.hpp"
#include "mbrl/transition_model.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

void on_interrupt(int) { mbrl::interrupt_flag().store(true); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mbrl::Error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// {"context": {var: value}, "intentions": {label: weight} | [weights]}
mbrl::BeliefState load_belief(const mbrl::DomainSpec& d, const std::string& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  std::vector<std::size_t> values;
  for (const auto& var : d.contexts.variables()) {
    if (j.contains("context") && j["context"].contains(var.name)) {
      values.push_back(var.values.at(j["context"][var.name].get<std::string>()));
    } else {
      values.push_back(0);
    }
  }
  const std::size_t context = d.contexts.encode(values);
  std::vector<double> weights(d.intention_count(), 1.0);
  if (j.contains("intentions")) {
    const auto& w = j["intentions"];
    if (w.is_array()) {
      weights = w.get<std::vector<double>>();
      if (weights.size() != d.intention_count()) throw mbrl::ValidationError("belief has the wrong length");
    } else {
      std::fill(weights.begin(), weights.end(), 0.0);
      for (const auto& [label, p] : w.items()) weights[d.intentions.at(mbrl::canonical_label(label))] = p.get<double>();
    }
  }
  if (mbrl::normalize(weights) <= 0.0) throw mbrl::ValidationError("belief weights sum to zero");
  std::vector<double> joint(d.intention_count() * d.context_count(), 0.0);
  for (std::size_t i = 0; i < d.intention_count(); ++i) joint[i * d.context_count() + context] = weights[i];
  return mbrl::BeliefState(d.intention_count(), d.context_count(), std::move(joint));
}

std::vector<std::vector<double>> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mbrl::Error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw mbrl::ParseError("non-numeric sample row", line_no, 1);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based Bayesian reinforcement learning for dialogue POMDPs"};
  app.require_subcommand(1);

  mbrl::ExperimentConfig run_cfg;
  std::string model_name = "multinomial";
  std::string trace_dir;
  auto* run = app.add_subcommand("run", "Run learning experiments and write CSV results");
  run->add_option("--domain", run_cfg.domain_path, "Domain file")->required()->check(CLI::ExistingFile);
  run->add_option("--model", model_name, "Transition model")->check(CLI::IsMember({"multinomial", "rules"}));
  run->add_option("--runs", run_cfg.runs, "Independent runs")->check(CLI::PositiveNumber);
  run->add_option("--episodes", run_cfg.episodes, "Episodes per run")->check(CLI::PositiveNumber);
  run->add_option("--horizon", run_cfg.plan.horizon, "Planning horizon")->check(CLI::PositiveNumber);
  run->add_option("--gamma", run_cfg.plan.gamma, "Discount factor")->check(CLI::Range(0.0, 1.0));
  run->add_option("--topk-obs", run_cfg.plan.obs_top_k, "Observation branches")->check(CLI::PositiveNumber);
  run->add_option("--planner-noise", run_cfg.plan.planner_noise, "Planner confusion mass")
      ->check(CLI::Range(0.0, 1.0));
  run->add_option("--theta-samples", run_cfg.learner.theta_samples, "Parameter samples per update")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", run_cfg.seed, "Master seed");
  run->add_option("--out", run_cfg.out, "Detail CSV path")->required();
  run->add_option("--workers", run_cfg.workers, "Worker threads (0 = all cores)");
  run->add_option("--dump-traces", trace_dir, "Directory for per-turn trace CSVs");
  run->add_flag("--record-wall-time", run_cfg.record_wall_time, "Fill the wall_ms column");

  std::string plan_domain;
  std::string plan_belief;
  std::string plan_model = "multinomial";
  mbrl::PlanConfig plan_cfg;
  auto* plan = app.add_subcommand("plan", "Select one action for a belief and print Q per action");
  plan->add_option("--domain", plan_domain, "Domain file")->required()->check(CLI::ExistingFile);
  plan->add_option("--belief", plan_belief, "Belief JSON")->required()->check(CLI::ExistingFile);
  plan->add_option("--horizon", plan_cfg.horizon, "Planning horizon")->check(CLI::PositiveNumber);
  plan->add_option("--gamma", plan_cfg.gamma, "Discount factor")->check(CLI::Range(0.0, 1.0));
  plan->add_option("--topk-obs", plan_cfg.obs_top_k, "Observation branches")->check(CLI::PositiveNumber);
  plan->add_option("--model", plan_model, "Transition model")->check(CLI::IsMember({"multinomial", "rules"}));

  std::string samples_path;
  auto* fit = app.add_subcommand("fit-dirichlet", "Fit a Dirichlet to rows of a CSV file");
  fit->add_option("--samples", samples_path, "CSV with one probability vector per row")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) {
      run_cfg.model = model_name == "rules" ? mbrl::ModelKind::Rules : mbrl::ModelKind::Multinomial;
      if (!trace_dir.empty()) run_cfg.trace_dir = trace_dir;
      std::signal(SIGINT, on_interrupt);
      const auto result = mbrl::run_experiment(run_cfg);
      std::size_t failed = 0;
      for (const auto& r : result.records) failed += r.error.empty() ? 0 : 1;
      std::cerr << "wrote " << result.records.size() << " episode rows to " << run_cfg.out.string() << "\n";
      if (failed > 0) std::cerr << failed << " episodes aborted with errors\n";
      if (result.interrupted) {
        std::cerr << "interrupted; partial results flushed\n";
        return kExitRuntime;
      }
    } else if (*plan) {
      const auto domain = mbrl::load_domain(plan_domain);
      const auto belief = load_belief(domain, plan_belief);
      const auto model = mbrl::TransitionModel::from_domain(
          domain, plan_model == "rules" ? mbrl::ModelKind::Rules : mbrl::ModelKind::Multinomial);
      const mbrl::Planner planner(mbrl::RewardModel(domain), plan_cfg);
      mbrl::Rng rng(0);
      const auto result = planner.plan(belief, model, rng);
      std::cout << "action,q\n";
      for (std::size_t a = 0; a < result.q.size(); ++a) {
        std::printf("%s,%.6f\n", domain.action_labels[a].c_str(), result.q[a]);
      }
      std::cout << "selected: " << domain.action_labels[result.action] << "\n";
    } else if (*fit) {
      const auto rows = load_samples(samples_path);
      const auto result = mbrl::fit_dirichlet(rows);
      for (std::size_t k = 0; k < result.params.size(); ++k) {
        std::printf("%s%.6g", k ? "," : "", result.params.alpha()[k]);
      }
      std::printf("\n");
      if (!result.converged) std::cerr << "warning: fit stopped after " << result.iterations << " iterations\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
