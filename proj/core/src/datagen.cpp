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

#include "rankkit/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rankkit/error.hpp"
#include "rankkit/hash.hpp"
#include "rankkit/layers.hpp"

namespace rankkit {

using nlohmann::json;

void WorldConfig::validate() const {
  if (dense_dim == 0) throw ConfigError("world.dense_dim must be positive");
  if (member_vocab == 0 || item_vocab == 0 || device_count == 0) {
    throw ConfigError("world vocabularies must be non-empty");
  }
  if (!(zipf_exponent > 0.0)) throw ConfigError("world.zipf_exponent must be > 0");
  if (cross_pairs > 0 && dense_dim < 2) throw ConfigError("cross term needs dense_dim >= 2");
  if (device_scales.size() != device_count) {
    throw ConfigError("world.device_scales needs one entry per device");
  }
  if (tasks.empty()) throw ConfigError("world.tasks must be non-empty");
  if (task_scales.size() != tasks.size()) throw ConfigError("world.task_scales per task");
  if (!task_rates.empty()) {
    if (task_rates.size() != tasks.size()) throw ConfigError("world.task_rates per task");
    for (double r : task_rates) {
      if (!(r > 0.0 && r < 1.0)) throw ConfigError("world.task_rates must lie in (0, 1)");
    }
  }
  if (!task_offsets.empty() && task_offsets.size() != tasks.size()) {
    throw ConfigError("world.task_offsets per task");
  }
  if (impressions_per_session == 0) throw ConfigError("impressions_per_session must be > 0");
  if (max_windows == 0) throw ConfigError("world.max_windows must be > 0");
}

WorldConfig WorldConfig::zero() {
  WorldConfig c;
  c.dense_weight_scale = 0.0;
  c.latent_scale = 0.0;
  c.id_bias_scale = 0.0;
  c.cross_strength = 0.0;
  c.drift_scale = 0.0;
  c.device_scales.assign(c.device_count, 1.0);
  c.task_rates.clear();
  return c;
}

namespace {

std::vector<double> zipf_cdf(std::size_t n, double s) {
  std::vector<double> cdf(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += std::pow(static_cast<double>(k + 1), -s);
    cdf[k] = total;
  }
  for (auto& c : cdf) c /= total;
  return cdf;
}

std::size_t sample_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::size_t parse_index(const TrainingExample& ex, const std::string& feature, char prefix) {
  auto it = ex.ids.find(feature);
  if (it == ex.ids.end() || it->second.empty()) {
    throw DataError("example has no '" + feature + "' id");
  }
  const std::string& id = it->second.front();
  std::size_t value = 0;
  if (id.size() < 2 || id[0] != prefix ||
      std::from_chars(id.data() + 1, id.data() + id.size(), value).ec != std::errc{}) {
    throw DataError("malformed " + feature + " id '" + id + "'");
  }
  return value;
}

Rng example_stream(std::uint64_t seed, std::size_t window, std::size_t index) {
  std::uint64_t state = seed ^ (0x9e3779b97f4a7c15ULL * (window + 1));
  const std::uint64_t a = splitmix64(state);
  state = a ^ (0xd1b54a32d192ed03ULL * (index + 1));
  return Rng(splitmix64(state));
}

}  // namespace

std::string member_id(std::size_t k) { return "m" + std::to_string(k); }
std::string item_id(std::size_t k) { return "i" + std::to_string(k); }
std::string device_id(std::size_t k) { return "d" + std::to_string(k); }

WorldModel::WorldModel(WorldConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng = Rng::stream(seed, "world");
  const auto& c = config_;

  dense_weights_.resize(c.dense_dim);
  for (auto& w : dense_weights_) w = c.dense_weight_scale * rng.normal();

  auto latent = [&](std::size_t n) {
    std::vector<std::vector<double>> out(n, std::vector<double>(c.latent_dim));
    for (auto& row : out) {
      for (auto& v : row) v = c.latent_scale * rng.normal();
    }
    return out;
  };
  member_latent_ = latent(c.member_vocab);
  item_latent_ = latent(c.item_vocab);

  member_bias_.resize(c.member_vocab);
  for (auto& b : member_bias_) b = c.id_bias_scale * rng.normal();

  item_bias_.assign(c.max_windows, std::vector<double>(c.item_vocab));
  for (auto& b : item_bias_[0]) b = c.id_bias_scale * rng.normal();
  for (std::size_t w = 1; w < c.max_windows; ++w) {
    for (std::size_t i = 0; i < c.item_vocab; ++i) {
      item_bias_[w][i] = item_bias_[w - 1][i] + c.drift_scale * rng.normal();
    }
  }

  // Distinct pairs (a < b), alternating sign so the term has no mean shift.
  for (std::size_t k = 0; k < c.cross_pairs; ++k) {
    std::size_t a = rng.uniform_int(c.dense_dim);
    std::size_t b = rng.uniform_int(c.dense_dim - 1);
    if (b >= a) ++b;
    if (a > b) std::swap(a, b);
    cross_index_.emplace_back(a, b);
    cross_coef_.push_back((k % 2 == 0 ? 1.0 : -1.0) * c.cross_strength);
  }

  member_cdf_ = zipf_cdf(c.member_vocab, c.zipf_exponent);
  item_cdf_ = zipf_cdf(c.item_vocab, c.zipf_exponent);

  offsets_.assign(c.tasks.size(), 0.0);
  if (!c.task_rates.empty()) {
    solve_offsets(seed);
  } else if (!c.task_offsets.empty()) {
    offsets_ = c.task_offsets;
  }
}

std::size_t WorldModel::sample_member(Rng& rng) const { return sample_cdf(member_cdf_, rng); }
std::size_t WorldModel::sample_item(Rng& rng) const { return sample_cdf(item_cdf_, rng); }

double WorldModel::raw_score(const std::vector<double>& dense, std::size_t member,
                             std::size_t item, std::size_t window) const {
  if (member >= config_.member_vocab || item >= config_.item_vocab) {
    throw DataError("id outside the world vocabulary");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < dense_weights_.size(); ++j) s += dense_weights_[j] * dense[j];
  const auto& m = member_latent_[member];
  const auto& v = item_latent_[item];
  for (std::size_t j = 0; j < m.size(); ++j) s += m[j] * v[j];
  for (std::size_t k = 0; k < cross_index_.size(); ++k) {
    s += cross_coef_[k] * dense[cross_index_[k].first] * dense[cross_index_[k].second];
  }
  s += member_bias_[member] + item_bias(item, window);
  return s;
}

double WorldModel::item_bias(std::size_t item, std::size_t window) const {
  return item_bias_[std::min(window, item_bias_.size() - 1)][item];
}

void WorldModel::add_item_drift(std::size_t item, std::size_t from_window, double delta) {
  if (item >= config_.item_vocab) throw BoundsError("item outside the world vocabulary");
  for (std::size_t w = from_window; w < item_bias_.size(); ++w) item_bias_[w][item] += delta;
}

double WorldModel::score(const TrainingExample& ex, std::size_t window) const {
  if (ex.dense.size() != config_.dense_dim) throw DataError("dense width differs from the world");
  return raw_score(ex.dense, parse_index(ex, "member", 'm'), parse_index(ex, "item", 'i'), window);
}

double WorldModel::probability(const TrainingExample& ex, std::size_t task,
                               std::size_t window) const {
  if (task >= offsets_.size()) throw BoundsError("task index out of range");
  const std::size_t device = parse_index(ex, "device", 'd');
  if (device >= config_.device_count) throw DataError("device outside the world vocabulary");
  const double z = offsets_[task] +
                   config_.device_scales[device] * config_.task_scales[task] * score(ex, window);
  return sigmoid(z);
}

TrainingExample WorldModel::make_example(std::size_t member, std::size_t item, std::size_t device,
                                         Rng& rng) const {
  TrainingExample ex;
  ex.dense.resize(config_.dense_dim);
  for (auto& x : ex.dense) x = rng.normal();
  ex.ids["member"] = {member_id(member)};
  ex.ids["item"] = {item_id(item)};
  ex.ids["device"] = {device_id(device)};
  return ex;
}

void WorldModel::solve_offsets(std::uint64_t seed) {
  // Monte Carlo sample of (device scale * score) on window 0, then bisection
  // per task on the mean probability.
  constexpr std::size_t kSample = 20000;
  Rng rng = Rng::stream(seed, "world-offsets");
  std::vector<double> scaled(kSample);
  for (std::size_t n = 0; n < kSample; ++n) {
    const std::size_t member = sample_member(rng);
    const std::size_t item = sample_item(rng);
    const std::size_t device = rng.uniform_int(config_.device_count);
    std::vector<double> dense(config_.dense_dim);
    for (auto& x : dense) x = rng.normal();
    scaled[n] = config_.device_scales[device] * raw_score(dense, member, item, 0);
  }
  for (std::size_t t = 0; t < offsets_.size(); ++t) {
    const double target = config_.task_rates[t];
    double lo = -30.0;
    double hi = 30.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double mid = 0.5 * (lo + hi);
      double mean = 0.0;
      for (double s : scaled) mean += sigmoid(mid + config_.task_scales[t] * s);
      mean /= static_cast<double>(kSample);
      (mean < target ? lo : hi) = mid;
    }
    offsets_[t] = 0.5 * (lo + hi);
  }
}

Dataset generate(const WorldModel& world, std::size_t n, std::size_t window, const Rng& rng) {
  if (n == 0) throw ParameterError("generate needs n >= 1");
  const auto& c = world.config();
  Dataset out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng r = example_stream(rng.seed(), window, i);
    const std::size_t member = world.sample_member(r);
    const std::size_t item = world.sample_item(r);
    const std::size_t device = r.uniform_int(c.device_count);
    TrainingExample ex = world.make_example(member, item, device, r);
    for (std::size_t t = 0; t < c.tasks.size(); ++t) {
      ex.labels[c.tasks[t]] = r.bernoulli(world.probability(ex, t, window)) ? 1 : 0;
    }
    ex.timestamp = static_cast<std::int64_t>(window) * c.window_seconds +
                   static_cast<std::int64_t>(i * static_cast<std::size_t>(c.window_seconds) / n);
    ex.session = "w" + std::to_string(window) + "s" + std::to_string(i / c.impressions_per_session);
    ex.position = static_cast<int>(i % c.impressions_per_session) + 1;
    out[i] = std::move(ex);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replay

PseudoRandomRanker::PseudoRandomRanker(ItemScorer base, std::size_t top_n, std::uint64_t seed)
    : base_(std::move(base)), top_n_(top_n), seed_(seed) {
  if (top_n_ < 2) throw ParameterError("top_n must be >= 2");
}

std::vector<std::string> PseudoRandomRanker::order(
    const std::string& session_id, const std::map<std::string, TrainingExample>& candidates) const {
  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(candidates.size());
  for (const auto& [item, ex] : candidates) scored.emplace_back(base_(ex), item);
  // Descending score; the map's key order breaks ties.
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  out.reserve(scored.size());
  for (auto& s : scored) out.push_back(std::move(s.second));

  Rng rng(seed_ ^ hash_id(session_id));
  const std::size_t n = std::min(top_n_, out.size());
  for (std::size_t i = n; i > 1; --i) {
    std::swap(out[i - 1], out[rng.uniform_int(i)]);
  }
  return out;
}

SessionScorer PseudoRandomRanker::as_scorer() const {
  return [self = *this](const ReplaySession& s) {
    const auto served = self.order(s.session_id, s.candidates);
    std::map<std::string, double> rank_score;
    for (std::size_t i = 0; i < served.size(); ++i) {
      rank_score[served[i]] = -static_cast<double>(i);
    }
    std::vector<double> out;
    out.reserve(s.served.size());
    for (const auto& item : s.served) {
      auto it = rank_score.find(item);
      out.push_back(it == rank_score.end() ? -static_cast<double>(served.size()) : it->second);
    }
    return out;
  };
}

double contribution_probability(const WorldModel& world, const TrainingExample& ex,
                                std::size_t window) {
  const auto& tasks = world.config().tasks;
  double none = 1.0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (tasks[t] == "click") continue;
    none *= 1.0 - world.probability(ex, t, window);
  }
  return 1.0 - none;
}

std::vector<ReplaySession> generate_replay_log(const WorldModel& world,
                                               const PseudoRandomRanker& ranker,
                                               const ReplayConfig& config, const Rng& rng) {
  if (config.top_n < 2) throw ParameterError("top_n must be >= 2");
  if (config.candidates < config.top_n) throw ParameterError("candidates must be >= top_n");
  const auto& c = world.config();
  std::vector<ReplaySession> out;
  out.reserve(config.sessions);
  for (std::size_t k = 0; k < config.sessions; ++k) {
    Rng r = example_stream(rng.seed() ^ 0x5e55105e55105eULL, config.window, k);
    ReplaySession s;
    s.session_id = "r" + std::to_string(config.window) + "_" + std::to_string(k);
    const std::size_t member = world.sample_member(r);
    const std::size_t device = r.uniform_int(c.device_count);
    while (s.candidates.size() < config.candidates) {
      const std::size_t item = world.sample_item(r);
      const std::string id = item_id(item);
      if (s.candidates.count(id)) {
        // Zipf heads repeat; fall back to a uniform draw to keep ids unique.
        const std::size_t alt = r.uniform_int(c.item_vocab);
        if (s.candidates.count(item_id(alt))) continue;
        TrainingExample ex = world.make_example(member, alt, device, r);
        ex.session = s.session_id;
        s.candidates.emplace(item_id(alt), std::move(ex));
        continue;
      }
      TrainingExample ex = world.make_example(member, item, device, r);
      ex.session = s.session_id;
      s.candidates.emplace(id, std::move(ex));
    }
    s.served = ranker.order(s.session_id, s.candidates);
    for (std::size_t p = 0; p < s.served.size(); ++p) {
      auto& ex = s.candidates.at(s.served[p]);
      ex.position = static_cast<int>(p) + 1;
      ex.timestamp = static_cast<std::int64_t>(config.window) * c.window_seconds;
      const double examine = std::pow(static_cast<double>(p + 1), -config.examination_decay);
      if (r.bernoulli(examine * contribution_probability(world, ex, config.window))) {
        s.contributions.insert(s.served[p]);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON Lines

namespace {

json example_to_json(const TrainingExample& ex) {
  json j;
  j["dense"] = ex.dense;
  j["ids"] = ex.ids;
  j["labels"] = ex.labels;
  j["ts"] = ex.timestamp;
  j["session"] = ex.session;
  j["pos"] = ex.position;
  return j;
}

TrainingExample example_from_json(const json& j) {
  static const std::vector<std::string> kFields = {"dense", "ids", "labels", "ts", "session", "pos"};
  if (!j.is_object()) throw DataError("example is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kFields.begin(), kFields.end(), key) == kFields.end()) {
      throw DataError("unknown example field '" + key + "'");
    }
  }
  for (const auto& f : kFields) {
    if (!j.contains(f)) throw DataError("example misses field '" + f + "'");
  }
  TrainingExample ex;
  try {
    ex.dense = j.at("dense").get<std::vector<double>>();
    ex.ids = j.at("ids").get<std::map<std::string, std::vector<std::string>>>();
    ex.labels = j.at("labels").get<std::map<std::string, int>>();
    ex.timestamp = j.at("ts").get<std::int64_t>();
    ex.session = j.at("session").get<std::string>();
    ex.position = j.at("pos").get<int>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad example field: ") + e.what());
  }
  for (double x : ex.dense) {
    if (!std::isfinite(x)) throw DataError("non-finite dense feature");
  }
  for (const auto& [task, y] : ex.labels) {
    if (y != 0 && y != 1) throw DataError("label for '" + task + "' is not 0/1");
  }
  if (ex.position < 1) throw DataError("pos must be >= 1");
  return ex;
}

template <typename F>
void for_each_line(std::istream& is, F&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      std::string what = e.what();
      const std::string prefix = "data error: ";
      if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
      throw DataError("line " + std::to_string(line_no) + ": " + what);
    }
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

}  // namespace

void write_example_jsonl(std::ostream& os, const TrainingExample& ex) {
  os << example_to_json(ex).dump() << '\n';
}

void write_jsonl(std::ostream& os, const Dataset& data) {
  for (const auto& ex : data) write_example_jsonl(os, ex);
}

Dataset read_jsonl(std::istream& is) {
  Dataset out;
  for_each_line(is, [&](const json& j) { out.push_back(example_from_json(j)); });
  return out;
}

Dataset read_jsonl_file(const std::string& path) {
  auto in = open_in(path);
  return read_jsonl(in);
}

void write_jsonl_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_jsonl(out, data);
  if (!out) throw DataError("write failed for " + path);
}

void write_replay_jsonl(std::ostream& os, const std::vector<ReplaySession>& sessions) {
  for (const auto& s : sessions) {
    json j;
    j["session"] = s.session_id;
    j["served"] = s.served;
    j["contributions"] = s.contributions;
    json cands = json::object();
    for (const auto& [item, ex] : s.candidates) cands[item] = example_to_json(ex);
    j["candidates"] = cands;
    os << j.dump() << '\n';
  }
}

std::vector<ReplaySession> read_replay_jsonl(std::istream& is) {
  std::vector<ReplaySession> out;
  for_each_line(is, [&](const json& j) {
    ReplaySession s;
    try {
      s.session_id = j.at("session").get<std::string>();
      s.served = j.at("served").get<std::vector<std::string>>();
      s.contributions = j.at("contributions").get<std::set<std::string>>();
      for (const auto& [item, ex] : j.at("candidates").items()) {
        s.candidates.emplace(item, example_from_json(ex));
      }
    } catch (const json::exception& e) {
      throw DataError(std::string("bad replay session: ") + e.what());
    }
    if (s.served.empty()) throw DataError("session " + s.session_id + " served nothing");
    std::set<std::string> seen;
    for (const auto& item : s.served) {
      if (!seen.insert(item).second) throw DataError("duplicate served item " + item);
      if (!s.candidates.count(item)) throw DataError("served item without features: " + item);
    }
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<ReplaySession> read_replay_jsonl_file(const std::string& path) {
  auto in = open_in(path);
  return read_replay_jsonl(in);
}

}  // namespace rankkit
