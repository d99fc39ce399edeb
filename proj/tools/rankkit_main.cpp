// Copyright 2026 The rankkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// rankkit: data generation, training, evaluation, quantization, bandit
// simulation and ablation over the synthetic click world.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankkit/checkpoint.hpp"
#include "rankkit/config.hpp"
#include "rankkit/datagen.hpp"
#include "rankkit/error.hpp"
#include "rankkit/eval.hpp"
#include "rankkit/log.hpp"
#include "rankkit/pipeline.hpp"

namespace {

using namespace rankkit;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int verbose = 0;
};

ExperimentConfig load(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig() : load_config_file(g.config_path);
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("write failed for " + path);
}

std::string with_extension(const std::string& path, const std::string& ext) {
  return std::filesystem::path(path).replace_extension(ext).string();
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::string out;
  std::optional<std::size_t> windows;
  std::string stream = "train";
  std::string randomizer_checkpoint;
  std::size_t replay_sessions = 0;
  std::size_t replay_window = 0;
};

int cmd_gen_data(const Globals& g, const GenDataArgs& a) {
  const ExperimentConfig c = load(g);
  const std::size_t windows = a.windows.value_or(c.data.windows);
  const auto paths = gen_data(c, a.out, windows, a.stream);
  for (const auto& p : paths) std::cout << "wrote " << p << '\n';

  if (a.replay_sessions > 0) {
    PseudoRandomRanker::ItemScorer base = [](const TrainingExample&) { return 0.0; };
    if (!a.randomizer_checkpoint.empty()) {
      auto model = std::make_shared<const MultiTaskModel>(
          restore_model(load_checkpoint_file(a.randomizer_checkpoint)));
      base = model_scorer(model, c.headline_task);
    }
    const PseudoRandomRanker ranker(base, c.data.replay.top_n, randomizer_seed(c.seed));
    ReplayConfig rc = c.data.replay;
    rc.sessions = a.replay_sessions;
    rc.window = a.replay_window;
    const WorldModel world = make_world(c);
    const auto sessions = generate_replay_log(world, ranker, rc, Rng::stream(c.seed, "replay"));
    const std::string path = (std::filesystem::path(a.out) / "replay.jsonl").string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    write_replay_jsonl(out, sessions);
    std::cout << "wrote " << path << " (" << sessions.size() << " sessions)\n";
  }
  return exit_code::kOk;
}

struct TrainArgs {
  std::string data;
  std::string out_checkpoint;
  std::string from_checkpoint;
  std::string cold_checkpoint;
  std::string test;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  const ExperimentConfig c = load(g);
  const Dataset data = read_jsonl_file(a.data);
  std::optional<Checkpoint> from;
  std::optional<Checkpoint> cold;
  if (!a.from_checkpoint.empty()) from = load_checkpoint_file(a.from_checkpoint);
  if (!a.cold_checkpoint.empty()) {
    if (!from) throw ConfigError("--cold-checkpoint requires --from-checkpoint");
    cold = load_checkpoint_file(a.cold_checkpoint);
  }

  TrainResult result = run_train(c, data, from ? &*from : nullptr, cold ? &*cold : nullptr,
                                 [](std::size_t epoch, double loss) {
                                   std::printf("epoch %zu loss %.6f\n", epoch, loss);
                                 });
  save_checkpoint_file(result.checkpoint, a.out_checkpoint);
  std::printf("steps %lld\n", static_cast<long long>(result.report.steps));

  const Dataset eval_data = a.test.empty() ? data : read_jsonl_file(a.test);
  const MetricsReport report =
      run_eval(result.checkpoint, eval_data, {.headline_task = c.headline_task});
  std::cout << report.to_json();
  std::cout << "wrote " << a.out_checkpoint << '\n';
  return exit_code::kOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string replay_log;
  bool randomizer = false;
  std::string out;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  const ExperimentConfig c = load(g);
  const Checkpoint ck = load_checkpoint_file(a.checkpoint);
  const Dataset data = read_jsonl_file(a.data);
  std::vector<ReplaySession> sessions;
  EvalOptions opts;
  opts.headline_task = c.headline_task;
  opts.randomizer = a.randomizer;
  opts.top_n = c.data.replay.top_n;
  opts.randomizer_seed = randomizer_seed(c.seed);
  if (!a.replay_log.empty()) {
    sessions = read_replay_jsonl_file(a.replay_log);
    opts.replay = &sessions;
  } else if (a.randomizer) {
    throw ConfigError("--randomizer needs --replay-log");
  }
  const MetricsReport report = run_eval(ck, data, opts);
  for (const auto& [task, m] : report.per_task) {
    if (!m.auc) log::warn("AUC undefined for task " + task + " (single-class slice)");
  }
  if (report.replay && !report.replay->rate) {
    log::warn("replay rate undefined: no matched impressions");
  }
  if (a.out.empty()) {
    std::cout << report.to_json();
  } else {
    write_text(a.out, report.to_json());
    write_text(with_extension(a.out, ".csv"), report.to_csv());
    std::cout << "wrote " << a.out << '\n';
  }
  return exit_code::kOk;
}

struct QuantizeArgs {
  std::string checkpoint;
  std::string out;
};

int cmd_quantize(const Globals&, const QuantizeArgs& a) {
  const QuantizeResult r = run_quantize(load_checkpoint_file(a.checkpoint));
  save_checkpoint_file(r.checkpoint, a.out);
  const double reduction =
      r.bytes_before == 0 ? 0.0
                          : 100.0 * (1.0 - static_cast<double>(r.bytes_after) /
                                               static_cast<double>(r.bytes_before));
  std::printf("embedding bytes %zu -> %zu (%.2f%% smaller)\n", r.bytes_before, r.bytes_after,
              reduction);
  std::cout << "wrote " << a.out << '\n';
  return exit_code::kOk;
}

struct BanditArgs {
  std::size_t rounds = 2000;
  std::size_t seeds = 20;
  std::string checkpoint;
  std::string out;
};

int cmd_bandit(const Globals& g, const BanditArgs& a) {
  const ExperimentConfig c = load(g);
  const auto seeds = seed_range(c.seed, a.seeds);
  BanditCurves curves;
  if (!c.bandit.arm_means.empty()) {
    curves = simulate_gaussian_bandit(c.bandit, a.rounds, seeds);
  } else {
    if (a.checkpoint.empty()) {
      throw ConfigError("bandit-sim needs --checkpoint for the representation (or bandit.arm_means)");
    }
    curves = simulate_neural_bandit(c, load_checkpoint_file(a.checkpoint), a.rounds, seeds);
  }
  for (const auto& [policy, _] : curves.cumulative) {
    std::printf("%-9s mean cumulative regret %.4f\n", policy.c_str(), curves.mean_final(policy));
  }
  if (!a.out.empty()) {
    write_text(a.out, curves.to_csv());
    std::cout << "wrote " << a.out << '\n';
  }
  return exit_code::kOk;
}

struct AblateArgs {
  std::vector<std::string> variants;
  std::size_t seeds = 5;
  std::string data;
  std::string test;
  std::string out;
};

int cmd_ablate(const Globals& g, const AblateArgs& a) {
  const ExperimentConfig c = load(g);
  std::optional<Dataset> train;
  std::optional<Dataset> test;
  if (!a.data.empty() || !a.test.empty()) {
    if (a.data.empty() || a.test.empty()) throw ConfigError("ablate takes --data and --test together");
    train = read_jsonl_file(a.data);
    test = read_jsonl_file(a.test);
  }
  const AblationTable table = run_ablation(c, a.variants, seed_range(c.seed, a.seeds),
                                           train ? &*train : nullptr, test ? &*test : nullptr);
  std::cout << table.to_markdown();
  if (!a.out.empty()) {
    write_text(with_extension(a.out, ".md"), table.to_markdown());
    write_text(with_extension(a.out, ".csv"), table.to_csv());
  }
  return exit_code::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rankkit: ranking-model toolkit on a synthetic click world"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_flag("-v,--verbose", g.verbose, "More logging (repeatable)");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write one JSONL file per time window");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--windows", gen.windows, "Number of windows (default: config)");
  gen_cmd->add_option("--stream", gen.stream, "train or test draw")
      ->check(CLI::IsMember({"train", "test"}));
  gen_cmd->add_option("--randomizer-checkpoint", gen.randomizer_checkpoint,
                      "Model whose ranking the replay log randomizes");
  gen_cmd->add_option("--replay-sessions", gen.replay_sessions, "Also write replay.jsonl");
  gen_cmd->add_option("--replay-window", gen.replay_window, "Window of the replay sessions");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Cold-start or incremental training");
  train_cmd->add_option("--data", tr.data, "Training JSONL")->required();
  train_cmd->add_option("--out-checkpoint", tr.out_checkpoint, "Checkpoint to write")->required();
  train_cmd->add_option("--from-checkpoint", tr.from_checkpoint, "Previous cycle's checkpoint");
  train_cmd->add_option("--cold-checkpoint", tr.cold_checkpoint, "Cold-start checkpoint");
  train_cmd->add_option("--test", tr.test, "Held-out JSONL for the final metrics");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Metrics report for a checkpoint");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--data", ev.data, "Evaluation JSONL")->required();
  eval_cmd->add_option("--replay-log", ev.replay_log, "Replay sessions JSONL");
  eval_cmd->add_flag("--randomizer", ev.randomizer,
                     "Score replay sessions with the pseudo-random serving ranker");
  eval_cmd->add_option("--out", ev.out, "JSON report path (CSV mirror alongside)");

  QuantizeArgs qa;
  auto* quant_cmd = app.add_subcommand("quantize", "Post-training int8 embedding quantization");
  quant_cmd->add_option("--checkpoint", qa.checkpoint)->required();
  quant_cmd->add_option("--out", qa.out)->required();

  BanditArgs ba;
  auto* bandit_cmd = app.add_subcommand("bandit-sim", "Regret of thompson, greedy and random");
  bandit_cmd->add_option("--rounds", ba.rounds);
  bandit_cmd->add_option("--seeds", ba.seeds, "Number of seeds, starting at --seed");
  bandit_cmd->add_option("--checkpoint", ba.checkpoint, "Representation model");
  bandit_cmd->add_option("--out", ba.out, "CSV of per-seed and mean curves");

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "Cumulative variant stacking");
  ablate_cmd->add_option("--variants", ab.variants, "Variants in stacking order")
      ->required()
      ->delimiter(',');
  ablate_cmd->add_option("--seeds", ab.seeds, "Number of seeds, starting at --seed");
  ablate_cmd->add_option("--data", ab.data, "Training JSONL (default: generated)");
  ablate_cmd->add_option("--test", ab.test, "Held-out JSONL (default: generated)");
  ablate_cmd->add_option("--out", ab.out, "Output prefix for .md and .csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code::kConfig;
  }

  log::set_level(g.verbose >= 2 ? log::Level::kDebug
                 : g.verbose == 1 ? log::Level::kInfo
                                  : log::Level::kWarn);
  try {
    if (*gen_cmd) return cmd_gen_data(g, gen);
    if (*train_cmd) return cmd_train(g, tr);
    if (*eval_cmd) return cmd_eval(g, ev);
    if (*quant_cmd) return cmd_quantize(g, qa);
    if (*bandit_cmd) return cmd_bandit(g, ba);
    if (*ablate_cmd) return cmd_ablate(g, ab);
  } catch (const Error& e) {
    std::cerr << "rankkit: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "rankkit: " << e.what() << '\n';
    return 1;
  }
  return exit_code::kConfig;
}
