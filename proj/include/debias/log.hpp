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

#pragma once

#include <cstddef>
#include <string_view>

namespace debias {

enum class LogLevel { Debug = 0, Info = 1, Warning = 2, Silent = 3 };

// Process-wide threshold; messages below it are dropped.
void set_log_level(LogLevel level);
LogLevel log_level();

void log_info(std::string_view msg);
void log_warning(std::string_view msg);

// Number of warnings emitted since startup (counted even when silenced).
std::size_t warning_count();

}  // namespace debias
