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

#include "rankkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>

#include "rankkit/bandit.hpp"
#include "rankkit/error.hpp"
#include "rankkit/layers.hpp"
#include "rankkit/log.hpp"
#include "rankkit/rng.hpp"

namespace rankkit {

WorldModel make_world(const ExperimentConfig& config) {
  return WorldModel(config.world, config.effective_world_seed());
}

Dataset window_data(const ExperimentConfig& config, const WorldModel& world, std::size_t window,
                    const std::string& stream, std::size_t rows) {
  const Rng rng = Rng::stream(config.seed, "datagen").substream(stream);
  return generate(world, rows, window, rng);
}

std::vector<std::string> gen_data(const ExperimentConfig& config, const std::string& out_dir,
                                  std::size_t windows, const std::string& stream) {
  if (windows == 0) throw ConfigError("--windows must be positive");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir + ": " + ec.message());
  const WorldModel world = make_world(config);
  const std::size_t rows = stream == "test" ? config.data.test_rows : config.data.rows_per_window;
  std::vector<std::string> paths;
  for (std::size_t w = 0; w < windows; ++w) {
    char name[48];
    std::snprintf(name, sizeof(name), "window_%02zu.jsonl", w);
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    write_jsonl_file(path, window_data(config, world, w, stream, rows));
    paths.push_back(path);
  }
  return paths;
}

// ---------------------------------------------------------------------------

TrainResult run_train(const ExperimentConfig& config, const Dataset& data, const Checkpoint* from,
                      const Checkpoint* cold,
                      std::function<void(std::size_t epoch, double mean_loss)> on_epoch) {
  MultiTaskModel model(config.model);
  TrainOptions options;
  options.optimizer = config.optimizer;
  options.shuffle_seed = config.seed;
  options.on_epoch = std::move(on_epoch);

  if (from == nullptr) {
    if (cold != nullptr) throw ConfigError("a cold checkpoint only makes sense with --from-checkpoint");
    Rng init = Rng::stream(config.seed, "init");
    model.init(init);
  } else {
    if (model_config_to_json(from->model_config) != model_config_to_json(config.model)) {
      throw SchemaError("checkpoint topology differs from the configured model");
    }
    const Checkpoint* anchor = cold;
    if (anchor == nullptr) {
      if (from->kind != "cold") {
        throw SnapshotError("incremental training from an incremental checkpoint needs --cold-checkpoint");
      }
      anchor = from;
    }
    if (model_config_to_json(anchor->model_config) != model_config_to_json(config.model)) {
      throw SchemaError("cold checkpoint topology differs from the configured model");
    }
    if (!from->has_fisher() || !anchor->has_fisher()) {
      throw SnapshotError("incremental training needs Fisher diagonals in both snapshots");
    }
    load_weights(model, *from);
    IncrementalSetup setup{config.incremental, snapshot_of(*anchor), snapshot_of(*from)};
    incremental_init(model.parameters(), setup.cold, setup.prior, config.incremental.cold_weight);
    options.incremental = std::move(setup);
    options.optimizer.epochs = config.incremental.epochs;
    options.optimizer.total_steps = 0;
  }

  TrainResult result;
  result.report = train(model, data, options);
  fisher_diag(model, data, config.incremental.fisher_cap);
  if (config.quantize && !model.embeddings_quantized()) model.quantize_embeddings();
  result.checkpoint = capture_checkpoint(model, from ? "incremental" : "cold");
  result.checkpoint.metadata["steps"] = std::to_string(result.report.steps);
  result.checkpoint.metadata["examples"] = std::to_string(data.size());
  return result;
}

std::uint64_t randomizer_seed(std::uint64_t seed) {
  return Rng::stream(seed, "randomizer").seed();
}

PseudoRandomRanker::ItemScorer model_scorer(std::shared_ptr<const MultiTaskModel> model,
                                            const std::string& task) {
  const std::size_t t = model->task_index(task);
  return [model = std::move(model), t](const TrainingExample& ex) {
    return sigmoid(model->logits(ex)[t]);
  };
}

MetricsReport run_eval(const Checkpoint& checkpoint, const Dataset& data, const EvalOptions& options) {
  auto model = std::make_shared<const MultiTaskModel>(restore_model(checkpoint));
  MetricsReport report = evaluate(*model, data, options.headline_task);
  if (options.replay) {
    const auto scorer = model_scorer(model, report.headline_task);
    const SessionScorer session_scorer =
        options.randomizer
            ? PseudoRandomRanker(scorer, options.top_n, options.randomizer_seed).as_scorer()
            : per_item_scorer(scorer);
    report.replay = replay_contribution_rate(*options.replay, session_scorer);
  }
  return report;
}

QuantizeResult run_quantize(const Checkpoint& checkpoint) {
  if (!checkpoint.quantized_tables.empty()) {
    throw InputError("checkpoint embeddings are already quantized");
  }
  MultiTaskModel model = restore_model(checkpoint);
  if (model.embedding_tables().empty()) throw InputError("checkpoint has no embedding tables");
  model.quantize_embeddings();

  QuantizeResult result;
  result.checkpoint = capture_checkpoint(model, checkpoint.kind);
  result.checkpoint.posteriors = checkpoint.posteriors;
  result.checkpoint.metadata = checkpoint.metadata;
  result.bytes_before = embedding_payload_bytes(checkpoint);
  result.bytes_after = embedding_payload_bytes(result.checkpoint);
  return result;
}

// ---------------------------------------------------------------------------
// Bandit simulation

namespace {

const std::vector<std::string> kPolicies = {"thompson", "greedy", "random"};

// One policy's running state over a shared feature space.
class PolicyState {
 public:
  PolicyState(std::string policy, const BanditConfig& config, std::size_t dim)
      : policy_(std::move(policy)),
        config_(config),
        posterior_(Posterior::prior(dim, config.prior_scale, config.noise_variance)) {}

  std::size_t choose(std::span<const Tensor> candidates, std::size_t round, Rng& rng) {
    if (policy_ == "random") return rng.uniform_int(candidates.size());
    if (policy_ == "thompson") return select_item(posterior_, candidates, rng);
    if (round < config_.forced_pulls) return round % candidates.size();
    if (!mean_) mean_ = posterior_.mean();
    return argmax_score(*mean_, candidates);
  }

  void observe(Tensor z, double y) {
    pending_z_.push_back(std::move(z));
    pending_y_.push_back(y);
    if (pending_z_.size() >= config_.update_every) flush();
  }

 private:
  void flush() {
    posterior_ = posterior_update(posterior_, pending_z_, pending_y_);
    pending_z_.clear();
    pending_y_.clear();
    mean_.reset();
  }

  std::string policy_;
  BanditConfig config_;
  Posterior posterior_;
  std::optional<Tensor> mean_;
  std::vector<Tensor> pending_z_;
  std::vector<double> pending_y_;
};

BanditCurves empty_curves(const std::vector<std::uint64_t>& seeds) {
  BanditCurves curves;
  curves.seeds = seeds;
  for (const auto& p : kPolicies) curves.cumulative[p].resize(seeds.size());
  return curves;
}

}  // namespace

double BanditCurves::mean_final(const std::string& policy) const {
  const auto& runs = cumulative.at(policy);
  if (runs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : runs) total += r.empty() ? 0.0 : r.back();
  return total / static_cast<double>(runs.size());
}

std::string BanditCurves::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "policy,seed,round,cumulative_regret\n";
  for (const auto& [policy, runs] : cumulative) {
    for (std::size_t s = 0; s < runs.size(); ++s) {
      for (std::size_t r = 0; r < runs[s].size(); ++r) {
        os << policy << ',' << seeds[s] << ',' << r + 1 << ',' << runs[s][r] << '\n';
      }
    }
    const std::size_t rounds = runs.empty() ? 0 : runs.front().size();
    for (std::size_t r = 0; r < rounds; ++r) {
      double mean = 0.0;
      for (const auto& run : runs) mean += run[r];
      os << policy << ",mean," << r + 1 << ',' << mean / static_cast<double>(runs.size()) << '\n';
    }
  }
  return os.str();
}

BanditCurves simulate_gaussian_bandit(const BanditConfig& config, std::size_t rounds,
                                      const std::vector<std::uint64_t>& seeds) {
  const std::size_t arms = config.arm_means.size();
  if (arms < 2) throw ConfigError("bandit.arm_means needs at least two arms");
  const double best = *std::max_element(config.arm_means.begin(), config.arm_means.end());
  std::vector<Tensor> features;
  for (std::size_t a = 0; a < arms; ++a) {
    Tensor e = Tensor::zeros(arms);
    e[a] = 1.0;
    features.push_back(std::move(e));
  }

  BanditCurves curves = empty_curves(seeds);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const Rng base = Rng::stream(seeds[s], "bandit");
    for (const auto& policy : kPolicies) {
      Rng rng = base.substream(policy);
      PolicyState state(policy, config, arms);
      auto& curve = curves.cumulative[policy][s];
      curve.reserve(rounds);
      double regret = 0.0;
      for (std::size_t round = 0; round < rounds; ++round) {
        const std::size_t arm = state.choose(features, round, rng);
        const double reward = config.arm_means[arm] + config.reward_noise * rng.normal();
        state.observe(features[arm], reward);
        regret += best - config.arm_means[arm];
        curve.push_back(regret);
      }
    }
  }
  return curves;
}

BanditCurves simulate_neural_bandit(const ExperimentConfig& config, const Checkpoint& checkpoint,
                                    std::size_t rounds, const std::vector<std::uint64_t>& seeds) {
  const auto& bc = config.bandit;
  const MultiTaskModel model = restore_model(checkpoint);
  const WorldModel world = make_world(config);
  const auto& world_tasks = world.config().tasks;
  auto task_it = std::find(world_tasks.begin(), world_tasks.end(), bc.task);
  if (task_it == world_tasks.end()) throw ConfigError("bandit.task is not a world task");
  const std::size_t world_task = static_cast<std::size_t>(task_it - world_tasks.begin());
  const std::size_t dim = model.representation_dim(bc.task);
  if (dim > kMaxPosteriorDim) {
    throw ConfigError("representation width " + std::to_string(dim) + " exceeds " +
                      std::to_string(kMaxPosteriorDim));
  }

  BanditCurves curves = empty_curves(seeds);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const Rng base = Rng::stream(seeds[s], "bandit");
    for (const auto& policy : kPolicies) {
      // The world draws share one stream across policies so every policy
      // faces the same candidate slates.
      Rng world_rng = base.substream("slates");
      Rng rng = base.substream(policy);
      PolicyState state(policy, bc, dim);
      auto& curve = curves.cumulative[policy][s];
      curve.reserve(rounds);
      double regret = 0.0;
      std::vector<Tensor> z(bc.candidates);
      std::vector<double> p(bc.candidates);
      for (std::size_t round = 0; round < rounds; ++round) {
        const std::size_t member = world.sample_member(world_rng);
        const std::size_t device = world_rng.uniform_int(world.config().device_count);
        for (std::size_t k = 0; k < bc.candidates; ++k) {
          const TrainingExample ex =
              world.make_example(member, world.sample_item(world_rng), device, world_rng);
          const Vec rep = model.representation(ex, bc.task);
          z[k] = Tensor({dim}, rep);
          p[k] = world.probability(ex, world_task, 0);
        }
        const double reward_draw = world_rng.uniform();
        const std::size_t pick = state.choose(z, round, rng);
        const double y = reward_draw < p[pick] ? 1.0 : 0.0;
        state.observe(z[pick], y);
        regret += *std::max_element(p.begin(), p.end()) - p[pick];
        curve.push_back(regret);
      }
    }
  }
  return curves;
}

// ---------------------------------------------------------------------------
// Ablation

void apply_variant(ExperimentConfig& config, const std::string& variant) {
  auto& m = config.model;
  if (variant == "mlp-baseline") {
    m.id_features.clear();
    m.interaction = Interaction::kNone;
    m.isotonic = false;
    m.calibration_feature.clear();
    m.gating = false;
    m.grouping.clear();
    config.quantize = false;
  } else if (variant == "+ids") {
    m.id_features = {"member", "item"};
  } else if (variant == "+isotonic") {
    m.isotonic = true;
    if (std::find(m.schema_features.begin(), m.schema_features.end(), "device") !=
        m.schema_features.end()) {
      m.calibration_feature = "device";
    }
  } else if (variant == "+large-mlp") {
    for (auto& h : m.hidden) h *= 2;
  } else if (variant == "+gating") {
    m.gating = true;
  } else if (variant == "+grouping") {
    m.grouping.clear();
    for (std::size_t t = 0; t < m.tasks.size(); ++t) {
      m.grouping[m.tasks[t]] = t == 0 ? "primary" : "engagement";
    }
  } else if (variant == "+lowrank-dcn") {
    m.interaction = Interaction::kLowRank;
  } else if (variant == "+residual-dcn") {
    m.interaction = Interaction::kResidual;
  } else if (variant == "+quantization") {
    config.quantize = true;
  } else {
    std::string allowed;
    for (const auto& v : kAblationVariants) allowed += (allowed.empty() ? "" : ", ") + v;
    throw ConfigError("unknown ablation variant '" + variant + "' (allowed: " + allowed + ")");
  }
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation; 0 for a single value.
double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string fmt(double v, int digits = 5) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

double AblationRow::mean_auc() const { return mean_of(auc); }
double AblationRow::mean_delta() const { return mean_of(delta); }
double AblationRow::sd_delta() const { return sd_of(delta); }
double AblationRow::sd_auc() const { return sd_of(auc); }

std::string AblationTable::to_markdown() const {
  std::ostringstream os;
  os << "| variant | mean AUC | sd AUC | delta AUC | sd delta | delta % | mean O/E |\n";
  os << "|---|---|---|---|---|---|---|\n";
  const double base = rows.empty() ? 0.0 : rows.front().mean_auc();
  for (const auto& r : rows) {
    os << "| " << r.variant << " | " << fmt(r.mean_auc()) << " | " << fmt(r.sd_auc()) << " | "
       << fmt(r.mean_delta()) << " | " << fmt(r.sd_delta()) << " | "
       << fmt(100.0 * r.mean_delta() / base, 3) << " | " << fmt(mean_of(r.oe), 4) << " |\n";
  }
  return os.str();
}

std::string AblationTable::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "variant,seed,auc,delta_auc,oe_ratio\n";
  for (const auto& r : rows) {
    for (std::size_t s = 0; s < r.auc.size(); ++s) {
      os << r.variant << ',' << seeds[s] << ',' << r.auc[s] << ',' << r.delta[s] << ',' << r.oe[s]
         << '\n';
    }
    os << r.variant << ",mean," << r.mean_auc() << ',' << r.mean_delta() << ',' << mean_of(r.oe)
       << '\n';
    os << r.variant << ",sd," << r.sd_auc() << ',' << r.sd_delta() << ",\n";
  }
  return os.str();
}

AblationTable run_ablation(const ExperimentConfig& config, const std::vector<std::string>& variants,
                           const std::vector<std::uint64_t>& seeds, const Dataset* train,
                           const Dataset* test) {
  if (variants.empty()) throw ConfigError("ablate needs at least one variant");
  if (seeds.empty()) throw ConfigError("ablate needs at least one seed");
  {
    ExperimentConfig probe = config;
    for (const auto& v : variants) apply_variant(probe, v);
  }
  if ((train == nullptr) != (test == nullptr)) {
    throw ConfigError("ablate takes both a training and a test dataset, or neither");
  }

  AblationTable table;
  table.seeds = seeds;
  for (const auto& v : variants) table.rows.push_back({v, {}, {}, {}});

  const WorldModel world = make_world(config);
  for (std::uint64_t seed : seeds) {
    ExperimentConfig cfg = config;
    cfg.seed = seed;
    cfg.world_seed = config.effective_world_seed();
    Dataset own_train;
    Dataset own_test;
    if (train == nullptr) {
      own_train = window_data(cfg, world, 0, "train", cfg.data.rows_per_window);
      own_test = window_data(cfg, world, 0, "test", cfg.data.test_rows);
    }
    const Dataset& tr = train ? *train : own_train;
    const Dataset& te = test ? *test : own_test;

    apply_variant(cfg, "mlp-baseline");
    double baseline = 0.0;
    for (std::size_t i = 0; i < variants.size(); ++i) {
      apply_variant(cfg, variants[i]);
      cfg.validate();
      TrainResult trained = run_train(cfg, tr, nullptr, nullptr);
      const MetricsReport report = run_eval(trained.checkpoint, te, {.headline_task = cfg.headline_task});
      const double auc = report.auc().value_or(std::numeric_limits<double>::quiet_NaN());
      if (i == 0) baseline = auc;
      auto& row = table.rows[i];
      row.auc.push_back(auc);
      row.delta.push_back(auc - baseline);
      row.oe.push_back(report.oe_ratio().value_or(std::numeric_limits<double>::quiet_NaN()));
      log::info("ablate seed " + std::to_string(seed) + " " + variants[i] + " auc " + fmt(auc));
    }
  }
  return table;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> out(count);
  std::iota(out.begin(), out.end(), first);
  return out;
}

}  // namespace rankkit
