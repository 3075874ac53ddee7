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

#include "debias/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "debias/error.hpp"

namespace debias {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("debias_harness_" + name);
  fs::remove_all(d);
  return d;
}

ExperimentSpec tiny_spec(const fs::path& out) {
  ExperimentSpec s;
  s.data.synth.n = 300;
  s.data.synth.classes = 3;
  s.data.synth.dims = 4;
  s.data.synth.layers = 1;
  s.ratios = {1, 3};
  s.methods = {MethodKind::ERM, MethodKind::GR};
  s.seeds = {0, 1};
  s.seed = 9;
  s.train.lr = 1e-3;
  s.train.max_epochs = 2;
  s.train.hidden = 8;
  s.train.adv_hidden = 4;
  s.train.intrinsic = 4;
  s.train.bias = 4;
  s.output_dir = out.string();
  return s;
}

ReportRow row(MethodKind m, int ratio, std::uint64_t seed, double f1, double tpr) {
  ReportRow r;
  r.method = m;
  r.ratio = ratio;
  r.seed = seed;
  r.f1 = f1;
  r.acc = 0.5;
  r.tpr_gap = tpr;
  r.fpr_gap = 0.1;
  r.f1_gap = 0.1;
  r.dp_gap = 0.1;
  return r;
}

TEST(Spec, ParsesAndRoundTrips) {
  const ExperimentSpec s = parse_experiment_spec(R"({
    "data": {"source": "synth", "synth": {"n": 500, "bias_strength": 0.5}, "seed": 3},
    "ratios": [1, 20],
    "methods": ["ERM", "BLIND+d", "disent"],
    "seeds": [4, 5],
    "train": {"lr": 0.001, "max_epochs": 7},
    "hyperparams": {"lambda_adv": 1.5, "adversary_input": "aggregated"}
  })");
  EXPECT_EQ(s.data.synth.n, 500u);
  EXPECT_EQ(s.data.synth.bias_strength, 0.5);
  EXPECT_EQ(s.ratios, (std::vector<int>{1, 20}));
  EXPECT_EQ(s.methods,
            (std::vector<MethodKind>{MethodKind::ERM, MethodKind::BLIND_PLUS_D, MethodKind::DISENT}));
  EXPECT_EQ(s.train.max_epochs, 7u);
  EXPECT_EQ(s.train.patience, 5u);
  EXPECT_EQ(s.hp.lambda_adv, 1.5);
  EXPECT_EQ(s.hp.adversary_input, AdversaryInput::Aggregated);

  const std::string text = experiment_spec_json(s);
  EXPECT_EQ(experiment_spec_json(parse_experiment_spec(text)), text);
}

TEST(Spec, RejectsBadInput) {
  EXPECT_THROW(parse_experiment_spec("{"), ConfigError);
  EXPECT_THROW(parse_experiment_spec(R"({"ratio": [1]})"), ConfigError);
  EXPECT_THROW(parse_experiment_spec(R"({"train": {"learning_rate": 1}})"), ConfigError);
  EXPECT_THROW(parse_experiment_spec(R"({"ratios": [0]})"), ConfigError);
  EXPECT_THROW(parse_experiment_spec(R"({"seeds": [1, 1]})"), ConfigError);
  EXPECT_THROW(parse_experiment_spec(R"({"methods": ["XYZ"]})"), ConfigError);
  EXPECT_THROW(parse_experiment_spec(R"({"train": {"lr": "fast"}})"), ConfigError);
  EXPECT_THROW(parse_experiment_spec(R"({"data": {"source": "manifest"}})"), ConfigError);
  EXPECT_THROW(parse_report_format("html"), ConfigError);
}

TEST(Seeds, DeriveSeedIsDeterministicAndSpreads) {
  EXPECT_EQ(derive_seed(1, 2, 3, 4), derive_seed(1, 2, 3, 4));
  EXPECT_NE(derive_seed(1, 2, 3, 4), derive_seed(1, 2, 4, 3));
  EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
  const ExperimentSpec s = tiny_spec("x");
  EXPECT_NE(run_seed(s, MethodKind::ERM, 1, 0), run_seed(s, MethodKind::GR, 1, 0));
  EXPECT_NE(run_seed(s, MethodKind::ERM, 1, 0), run_seed(s, MethodKind::ERM, 1, 1));
}

TEST(Report, CsvHasMeanRowsAndFixedFormat) {
  const std::vector<ReportRow> rows{row(MethodKind::GR, 1, 0, 0.5, 0.2),
                                    row(MethodKind::ERM, 1, 1, 0.7, 0.3),
                                    row(MethodKind::ERM, 1, 0, 0.6, 0.1)};
  EXPECT_EQ(emit_report(rows, ReportFormat::Csv),
            "method,ratio,seed,f1,acc,tpr_gap,fpr_gap,f1_gap,dp_gap,status\n"
            "ERM,1,0,0.600000,0.500000,0.100000,0.100000,0.100000,0.100000,ok\n"
            "ERM,1,1,0.700000,0.500000,0.300000,0.100000,0.100000,0.100000,ok\n"
            "ERM,1,mean,0.650000,0.500000,0.200000,0.100000,0.100000,0.100000,ok\n"
            "GR,1,0,0.500000,0.500000,0.200000,0.100000,0.100000,0.100000,ok\n");
  const auto means = mean_rows(rows);
  ASSERT_EQ(means.size(), 2u);
  EXPECT_DOUBLE_EQ(means[0].f1, 0.65);
}

TEST(Report, MarkdownMarksBestAndSecondBest) {
  const std::vector<ReportRow> rows{row(MethodKind::ERM, 1, 0, 0.6, 0.3),
                                    row(MethodKind::ADV, 1, 0, 0.5, 0.1),
                                    row(MethodKind::GR, 1, 0, 0.4, 0.2)};
  const std::string md = emit_report(rows, ReportFormat::Markdown);
  EXPECT_NE(md.find("## Ratio 1:1\n"), std::string::npos);
  EXPECT_NE(md.find("| ERM | 0 | **0.6000** | **0.5000** | 0.3000 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| ADV | 0 | <u>0.5000</u> | **0.5000** | **0.1000** |"), std::string::npos) << md;
  EXPECT_NE(md.find("| GR | 0 | 0.4000 | **0.5000** | <u>0.2000</u> |"), std::string::npos) << md;
}

TEST(Report, FailedRunsAreMarkedAndExcludedFromMeans) {
  std::vector<ReportRow> rows{row(MethodKind::ERM, 1, 0, 0.6, 0.1), row(MethodKind::ERM, 1, 1, 0, 0)};
  rows[1].error = "boom";
  const std::string csv = emit_report(rows, ReportFormat::Csv);
  EXPECT_NE(csv.find("ERM,1,1,,,,,,,error\n"), std::string::npos) << csv;
  EXPECT_EQ(csv.find("mean"), std::string::npos);  // one successful seed only
  EXPECT_NE(emit_report(rows, ReportFormat::Markdown).find("| ERM | 1 | ERROR |"), std::string::npos);
  ASSERT_EQ(mean_rows(rows).size(), 1u);
  EXPECT_EQ(mean_rows(rows)[0].f1, 0.6);
}

TEST(Report, IndependentOfInputOrder) {
  std::vector<ReportRow> rows{row(MethodKind::ERM, 5, 0, 0.6, 0.1), row(MethodKind::GR, 1, 2, 0.5, 0.2),
                              row(MethodKind::ERM, 1, 1, 0.7, 0.3)};
  const std::string a = emit_report(rows, ReportFormat::Markdown);
  std::reverse(rows.begin(), rows.end());
  EXPECT_EQ(emit_report(rows, ReportFormat::Markdown), a);
}

TEST(Sweep, ResumedAndFreshRunsGiveIdenticalReports) {
  const fs::path a = fresh_dir("a"), b = fresh_dir("b");
  const auto rows = run_experiment(tiny_spec(a));
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) EXPECT_FALSE(r.error) << *r.error;
  const std::string csv = slurp(a / "report.csv");
  const std::string md = slurp(a / "report.md");
  EXPECT_TRUE(fs::exists(a / "runs" / "gr_r3_s1.json"));
  EXPECT_TRUE(fs::exists(a / "runs" / "gr_r3_s1.log.csv"));
  EXPECT_TRUE(fs::exists(a / "runs" / "gr_r3_s1.emoc"));
  EXPECT_TRUE(fs::exists(a / "spec.json"));

  // Resume: completed runs are skipped, so their files stay untouched.
  const auto stamp = fs::last_write_time(a / "runs" / "erm_r1_s0.json");
  fs::remove(a / "runs" / "gr_r3_s1.json");
  run_experiment(tiny_spec(a));
  EXPECT_EQ(fs::last_write_time(a / "runs" / "erm_r1_s0.json"), stamp);
  EXPECT_EQ(slurp(a / "report.csv"), csv);
  EXPECT_EQ(slurp(a / "report.md"), md);

  ExperimentSpec sb = tiny_spec(b);
  sb.workers = 2;
  run_experiment(sb);
  EXPECT_EQ(slurp(b / "report.csv"), csv);
  EXPECT_EQ(slurp(b / "report.md"), md);
  EXPECT_EQ(emit_report(load_rows(b), ReportFormat::Csv), csv);
  EXPECT_THROW(load_rows(fresh_dir("missing")), ConfigError);
}

TEST(Sweep, DatasetsFollowRatio) {
  ExperimentSpec s = tiny_spec("unused");
  s.data.synth.n = 2000;
  const Dataset base = load_source(s.data);
  const Dataset d = sweep_dataset(base, s, 10, 0);
  const auto counts = d.dominant_counts(Split::Train);
  const RatioSpec rs = ratio_spec("alternating", 10, 3);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const auto maj = counts[c][static_cast<std::size_t>(rs.majority[c])];
    const auto min = counts[c][static_cast<std::size_t>(other(rs.majority[c]))];
    EXPECT_LE(min, maj / 10 + 1) << c;
    EXPECT_GE(min + 1, maj / 10) << c;
  }
  EXPECT_THROW(ratio_spec("msp_podcast", 1, 3), ConfigError);
}

}  // namespace
}  // namespace debias
