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

#include "rankkit/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <set>
#include <string>

namespace rankkit::log {
namespace {

std::atomic<int> g_level{static_cast<int>(Level::kWarn)};
std::mutex g_mu;

void emit(Level at, const char* tag, std::string_view msg) {
  if (g_level.load() < static_cast<int>(at)) return;
  std::lock_guard<std::mutex> lock(g_mu);
  std::cerr << '[' << tag << "] " << msg << '\n';
}

}  // namespace

void set_level(Level level) { g_level.store(static_cast<int>(level)); }
Level level() { return static_cast<Level>(g_level.load()); }

void warn(std::string_view msg) { emit(Level::kWarn, "warn", msg); }
void info(std::string_view msg) { emit(Level::kInfo, "info", msg); }
void debug(std::string_view msg) { emit(Level::kDebug, "debug", msg); }

void warn_once(std::string_view key, std::string_view msg) {
  static std::set<std::string, std::less<>> seen;
  {
    std::lock_guard<std::mutex> lock(g_mu);
    if (!seen.emplace(key).second) return;
  }
  warn(msg);
}

}  // namespace rankkit::log
