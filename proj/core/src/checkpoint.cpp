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

#include "rankkit/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "rankkit/config.hpp"
#include "rankkit/error.hpp"

namespace rankkit {

using nlohmann::json;

std::size_t TensorRecord::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::size_t TensorRecord::byte_length() const {
  return element_count() * (dtype == Dtype::kF64 ? sizeof(double) : sizeof(std::int8_t));
}

bool Checkpoint::has_fisher() const {
  return std::any_of(tensors.begin(), tensors.end(),
                     [](const auto& kv) { return kv.first.rfind("fisher/", 0) == 0; });
}

namespace {

constexpr const char* kFisherPrefix = "fisher/";
constexpr const char* kPosteriorPrefix = "posterior/";

TensorRecord f64_record(const Tensor& t) {
  TensorRecord r;
  r.shape = t.shape();
  r.dtype = Dtype::kF64;
  r.f64.assign(t.values().begin(), t.values().end());
  return r;
}

Tensor to_tensor(const TensorRecord& r, const std::string& name) {
  if (r.dtype != Dtype::kF64) throw SchemaError("tensor " + name + " is not f64");
  return Tensor(r.shape, r.f64);
}

const TensorRecord& find_tensor(const Checkpoint& c, const std::string& name) {
  auto it = c.tensors.find(name);
  if (it == c.tensors.end()) throw SchemaError("checkpoint has no tensor " + name);
  return it->second;
}

// Little-endian primitives.
template <typename T>
void put(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw DataError("checkpoint is truncated");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

Checkpoint capture_checkpoint(MultiTaskModel& model, const std::string& kind) {
  if (kind != "cold" && kind != "incremental") {
    throw ParameterError("checkpoint kind must be cold or incremental");
  }
  Checkpoint c;
  c.kind = kind;
  c.model_config = model.config();
  for (Parameter* p : model.parameters()) {
    c.tensors[p->name] = f64_record(p->value);
    if (p->fisher_diag) c.tensors[kFisherPrefix + p->name] = f64_record(*p->fisher_diag);
  }
  for (EmbeddingTable* t : model.embedding_tables()) {
    if (!t->quantized()) continue;
    const QuantizedTable& q = t->quantized_table();
    TensorRecord codes;
    codes.shape = {q.rows, q.dim};
    codes.dtype = Dtype::kI8;
    codes.i8 = q.payload;
    c.tensors[t->name()] = std::move(codes);
    c.tensors[t->name() + "/middle"] = f64_record(q.middle);
    c.tensors[t->name() + "/scale"] = f64_record(q.scale);
    c.quantized_tables.push_back(t->name());
  }
  std::sort(c.quantized_tables.begin(), c.quantized_tables.end());
  return c;
}

void load_weights(MultiTaskModel& model, const Checkpoint& c) {
  std::set<std::string> expected;
  const std::set<std::string> quantized(c.quantized_tables.begin(), c.quantized_tables.end());

  for (EmbeddingTable* t : model.embedding_tables()) {
    if (!quantized.count(t->name())) continue;
    const TensorRecord& codes = find_tensor(c, t->name());
    if (codes.dtype != Dtype::kI8 || codes.shape != std::vector<std::size_t>{t->rows(), t->dim()}) {
      throw SchemaError("quantized table " + t->name() + " does not match the model");
    }
    QuantizedTable q;
    q.rows = t->rows();
    q.dim = t->dim();
    q.payload = codes.i8;
    q.middle = to_tensor(find_tensor(c, t->name() + "/middle"), t->name() + "/middle");
    q.scale = to_tensor(find_tensor(c, t->name() + "/scale"), t->name() + "/scale");
    if (q.middle.shape() != std::vector<std::size_t>{q.rows} || !q.scale.same_shape(q.middle)) {
      throw SchemaError("quantization metadata of " + t->name() + " does not match the model");
    }
    if (!t->quantized()) t->set_quantized(std::move(q));
    else throw SchemaError("model table " + t->name() + " is already quantized");
    expected.insert({t->name(), t->name() + "/middle", t->name() + "/scale"});
  }
  for (const auto& name : quantized) {
    if (!expected.count(name)) throw SchemaError("checkpoint quantizes unknown table " + name);
  }

  for (Parameter* p : model.parameters()) {
    const TensorRecord& r = find_tensor(c, p->name);
    if (r.dtype != Dtype::kF64 || r.shape != p->value.shape()) {
      throw SchemaError("tensor " + p->name + " has shape " +
                        shape_string(r.shape) + " in the checkpoint, model expects " +
                        shape_string(p->value.shape()));
    }
    std::copy(r.f64.begin(), r.f64.end(), p->value.span().begin());
    expected.insert(p->name);
    auto f = c.tensors.find(kFisherPrefix + p->name);
    if (f != c.tensors.end()) {
      if (f->second.shape != p->value.shape()) throw SchemaError("fisher shape of " + p->name);
      p->fisher_diag = to_tensor(f->second, f->first);
      expected.insert(f->first);
    } else {
      p->fisher_diag.reset();
    }
  }

  for (const auto& [name, _] : c.tensors) {
    if (name.rfind(kPosteriorPrefix, 0) == 0) continue;
    if (!expected.count(name)) throw SchemaError("checkpoint tensor " + name + " is not in the model");
  }
}

MultiTaskModel restore_model(const Checkpoint& checkpoint) {
  MultiTaskModel model(checkpoint.model_config);
  load_weights(model, checkpoint);
  return model;
}

Snapshot snapshot_of(const Checkpoint& c) {
  Snapshot s;
  for (const auto& [name, r] : c.tensors) {
    if (r.dtype != Dtype::kF64 || name.rfind(kPosteriorPrefix, 0) == 0) continue;
    if (name.rfind(kFisherPrefix, 0) == 0) {
      s.fisher[name.substr(std::strlen(kFisherPrefix))] = to_tensor(r, name);
    } else {
      s.weights[name] = to_tensor(r, name);
    }
  }
  return s;
}

void save_checkpoint(const Checkpoint& c, std::ostream& os) {
  // Posteriors travel as ordinary tensors plus scalar metadata.
  std::map<std::string, TensorRecord> tensors = c.tensors;
  json posteriors = json::object();
  for (const auto& [task, p] : c.posteriors) {
    tensors[kPosteriorPrefix + task + "/precision"] = f64_record(p.precision);
    tensors[kPosteriorPrefix + task + "/moment"] = f64_record(p.moment);
    posteriors[task] = {{"dim", p.dim},
                        {"prior_scale", p.prior_scale},
                        {"noise_variance", p.noise_variance},
                        {"observation_count", p.observation_count}};
  }

  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["kind"] = c.kind;
  manifest["model_config"] = json::parse(model_config_to_json(c.model_config));
  manifest["quantization"] = {{"scheme", "middle-max"}, {"bits", 8}, {"tables", c.quantized_tables}};
  manifest["posteriors"] = posteriors;
  manifest["metadata"] = c.metadata;
  json list = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, r] : tensors) {
    if (r.element_count() != (r.dtype == Dtype::kF64 ? r.f64.size() : r.i8.size())) {
      throw DimensionError("tensor " + name + " data does not match its shape");
    }
    list.push_back({{"name", name},
                    {"shape", r.shape},
                    {"dtype", r.dtype == Dtype::kF64 ? "f64" : "i8"},
                    {"byte_offset", offset},
                    {"byte_length", r.byte_length()}});
    offset += r.byte_length();
  }
  manifest["tensors"] = list;
  const std::string text = manifest.dump();

  os.write(kCheckpointMagic, 4);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, r] : tensors) {
    if (r.dtype == Dtype::kF64) {
      for (double v : r.f64) put<double>(os, v);
    } else {
      os.write(reinterpret_cast<const char*>(r.i8.data()), static_cast<std::streamsize>(r.i8.size()));
    }
  }
  if (!os) throw DataError("failed writing checkpoint");
}

Checkpoint load_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kCheckpointMagic)) {
    throw DataError("not a rankkit checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw SnapshotError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto manifest_bytes = get<std::uint64_t>(is);
  if (manifest_bytes > (std::uint64_t{1} << 32)) throw DataError("checkpoint manifest too large");
  std::string text(manifest_bytes, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(manifest_bytes))) {
    throw DataError("checkpoint manifest is truncated");
  }

  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint manifest is not JSON: ") + e.what());
  }

  Checkpoint c;
  try {
    c.kind = manifest.at("kind").get<std::string>();
    c.model_config = parse_model_config(manifest.at("model_config").dump());
    c.quantized_tables = manifest.at("quantization").at("tables").get<std::vector<std::string>>();
    c.metadata = manifest.at("metadata").get<std::map<std::string, std::string>>();

    std::uint64_t expected_offset = 0;
    for (const auto& entry : manifest.at("tensors")) {
      TensorRecord r;
      const auto name = entry.at("name").get<std::string>();
      r.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto dtype = entry.at("dtype").get<std::string>();
      if (dtype == "f64") {
        r.dtype = Dtype::kF64;
      } else if (dtype == "i8") {
        r.dtype = Dtype::kI8;
      } else {
        throw DataError("tensor " + name + " has unknown dtype " + dtype);
      }
      if (entry.at("byte_offset").get<std::uint64_t>() != expected_offset ||
          entry.at("byte_length").get<std::uint64_t>() != r.byte_length()) {
        throw DataError("tensor " + name + " has inconsistent offsets");
      }
      expected_offset += r.byte_length();
      if (r.dtype == Dtype::kF64) {
        r.f64.resize(r.element_count());
        for (auto& v : r.f64) v = get<double>(is);
      } else {
        r.i8.resize(r.element_count());
        if (!is.read(reinterpret_cast<char*>(r.i8.data()), static_cast<std::streamsize>(r.i8.size()))) {
          throw DataError("checkpoint payload is truncated");
        }
      }
      c.tensors.emplace(name, std::move(r));
    }

    for (const auto& [task, meta] : manifest.at("posteriors").items()) {
      Posterior p;
      p.dim = meta.at("dim").get<std::size_t>();
      p.prior_scale = meta.at("prior_scale").get<double>();
      p.noise_variance = meta.at("noise_variance").get<double>();
      p.observation_count = meta.at("observation_count").get<std::int64_t>();
      const std::string base = kPosteriorPrefix + task;
      p.precision = to_tensor(find_tensor(c, base + "/precision"), base + "/precision");
      p.moment = to_tensor(find_tensor(c, base + "/moment"), base + "/moment");
      c.tensors.erase(base + "/precision");
      c.tensors.erase(base + "/moment");
      c.posteriors.emplace(task, std::move(p));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  return c;
}

void save_checkpoint_file(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path);
  save_checkpoint(checkpoint, out);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

std::size_t embedding_payload_bytes(const Checkpoint& c) {
  MultiTaskModel shape_only(c.model_config);
  std::size_t bytes = 0;
  for (const EmbeddingTable* t : std::as_const(shape_only).embedding_tables()) {
    for (const auto* suffix : {"", "/middle", "/scale"}) {
      auto it = c.tensors.find(t->name() + suffix);
      if (it != c.tensors.end()) bytes += it->second.byte_length();
    }
  }
  return bytes;
}

}  // namespace rankkit
