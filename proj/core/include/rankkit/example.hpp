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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rankkit {

/// One impression. Labels absent from the map are missing and masked out of
/// the loss for that task.
struct TrainingExample {
  std::vector<double> dense;
  std::map<std::string, std::vector<std::string>> ids;
  std::map<std::string, int> labels;
  std::int64_t timestamp = 0;
  std::string session;
  int position = 1;

  std::optional<int> label(const std::string& task) const {
    auto it = labels.find(task);
    if (it == labels.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

using Dataset = std::vector<TrainingExample>;

}  // namespace rankkit
