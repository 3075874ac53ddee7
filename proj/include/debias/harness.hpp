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

// Ratio x method x seed sweeps, run persistence and report tables.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "debias/dataset.hpp"
#include "debias/trainers.hpp"

namespace debias {

struct DataSource {
  // "synth" or "manifest".
  std::string kind = "synth";
  SynthParams synth;
  std::uint64_t seed = 0;  // synthetic generation seed
  std::string manifest;
  std::string features;
  bool filter = true;  // dominant-category filter before amplification
  // "alternating" or "msp_podcast".
  std::string directions = "alternating";
};

struct ExperimentSpec {
  DataSource data;
  std::vector<int> ratios{1, 5, 10, 20, 40};
  std::vector<MethodKind> methods{MethodKind::ERM};
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t seed = 0;
  TrainConfig train;
  Hyperparams hp;
  std::size_t workers = 1;
  bool checkpoints = true;
  std::string output_dir = "runs";

  // Throws ConfigError.
  void validate() const;
};

// Parses the JSON config; unknown keys are rejected.
ExperimentSpec parse_experiment_spec(std::string_view json);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
std::string experiment_spec_json(const ExperimentSpec& spec);

struct ReportRow {
  MethodKind method = MethodKind::ERM;
  int ratio = 1;
  std::uint64_t seed = 0;
  double f1 = 0.0;
  double acc = 0.0;
  double tpr_gap = 0.0;
  double fpr_gap = 0.0;
  double f1_gap = 0.0;
  double dp_gap = 0.0;
  // Set when the run failed; the metric fields are then meaningless.
  std::optional<std::string> error;
};

// Deterministic 64-bit mixing of the inputs.
std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0,
                          std::uint64_t d = 0);
RatioSpec ratio_spec(const std::string& directions, int ratio, std::size_t categories);

// Base dataset of the spec (generated or loaded, then filtered).
Dataset load_source(const DataSource& src);
// Training data for one (ratio, repetition), shared by all methods.
Dataset sweep_dataset(const Dataset& base, const ExperimentSpec& spec, int ratio,
                      std::uint64_t rep_seed);
// Seed of one training run.
std::uint64_t run_seed(const ExperimentSpec& spec, MethodKind method, int ratio,
                       std::uint64_t rep_seed);

// Runs every missing (method, ratio, seed) triple, persisting one file per
// run under output_dir/runs, then writes report.csv and report.md. Failed
// runs are recorded with an error marker. Returns all rows in report order.
std::vector<ReportRow> run_experiment(const ExperimentSpec& spec);

// Rows of every run file found under `dir`/runs.
std::vector<ReportRow> load_rows(const std::filesystem::path& dir);

enum class ReportFormat { Csv, Markdown };
ReportFormat parse_report_format(std::string_view s);  // "csv", "md" / "markdown"

// Sorted by method (report order), ratio, seed; a mean row follows each
// (method, ratio) group with more than one successful seed.
std::string emit_report(std::vector<ReportRow> rows, ReportFormat format);

// Seed-mean of successful rows per (method, ratio), in report order.
std::vector<ReportRow> mean_rows(const std::vector<ReportRow>& rows);

// Write-temp-then-rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace debias
