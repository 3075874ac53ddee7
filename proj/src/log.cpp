// Copyright 2026 The debias-bench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "debias/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace debias {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warning};
std::atomic<std::size_t> g_warnings{0};
std::mutex g_mutex;

void emit(const char* tag, std::string_view msg) {
  std::lock_guard lock(g_mutex);
  std::cerr << '[' << tag << "] " << msg << '\n';
}
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_info(std::string_view msg) {
  if (g_level.load() <= LogLevel::Info) emit("info", msg);
}

void log_warning(std::string_view msg) {
  ++g_warnings;
  if (g_level.load() <= LogLevel::Warning) emit("warn", msg);
}

std::size_t warning_count() { return g_warnings; }

}  // namespace debias
