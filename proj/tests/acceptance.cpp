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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Tolerances and budgets are pinned here.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "debias/error.hpp"
#include "debias/gradcheck.hpp"
#include "debias/harness.hpp"
#include "debias/log.hpp"
#include "debias/losses.hpp"
#include "debias/metrics.hpp"
#include "metric_oracle.hpp"

namespace {

using namespace debias;
namespace fs = std::filesystem;

constexpr double kMetricTol = 1e-12;
constexpr int kOracleInstances = 250;
constexpr double kOracleBudget = 10.0;
constexpr double kGradBudget = 60.0;
constexpr double kGceIdentityTol = 1e-4;
constexpr double kGceLimitTol = 1e-4;
constexpr double kTrendInversion = 0.01;
constexpr double kTrendRise = 0.05;
constexpr double kTrendBudget = 600.0;
constexpr double kEfficacyBudget = 900.0;
constexpr double kReduction = 0.30;
constexpr double kF1Drop = 0.05;
constexpr double kReweightTol = 1e-9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Runs `body` and converts a thrown error into a failure line.
void criterion(int id, const std::string& what, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, what, std::string("error: ") + e.what());
  }
}

// ---- 1 --------------------------------------------------------------------

void metric_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4242);
  double worst = 0.0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const oracle::Instance in = oracle::random_instance(rng);
    const oracle::Metrics want = oracle::compute(in);
    Tensor probs(in.probs.size(), in.probs[0].size()), labels(probs.rows(), probs.cols());
    std::vector<Gender> g;
    for (std::size_t r = 0; r < in.probs.size(); ++r) {
      for (std::size_t c = 0; c < probs.cols(); ++c) {
        probs(r, c) = in.probs[r][c];
        labels(r, c) = in.labels[r][c];
      }
      g.push_back(in.genders[r] == 0 ? Gender::F : Gender::M);
    }
    const MetricReport got = evaluate(probs, labels, g);
    for (auto [a, b] : {std::pair{got.f1, want.f1}, {got.acc, want.acc}, {got.tpr_gap, want.tpr_gap},
                        {got.fpr_gap, want.fpr_gap}, {got.f1_gap, want.f1_gap}, {got.dp_gap, want.dp_gap}})
      worst = std::max(worst, std::abs(a - b));
  }
  const double t = seconds_since(t0);
  report(1, worst <= kMetricTol && t < kOracleBudget, "metrics match brute-force oracle",
         std::to_string(kOracleInstances) + " instances, max abs diff " + fmt("%.2e", worst) + ", " +
             fmt("%.2f", t) + " s");
}

// ---- 2 --------------------------------------------------------------------

void gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t n = 0;
  for (const auto& list : {check_loss_gradients(), check_step_gradients()}) {
    for (const auto& r : list) {
      ++n;
      if (!(r.max_rel_error <= worst)) {
        worst = r.max_rel_error;
        worst_name = r.name;
      }
    }
  }
  const double t = seconds_since(t0);
  report(2, worst <= kGradCheckTolerance && t < kGradBudget, "losses and step functions pass gradient checks",
         std::to_string(n) + " checks, worst " + fmt("%.2e", worst) + " at " + worst_name + ", " +
             fmt("%.2f", t) + " s");
}

// ---- 3 --------------------------------------------------------------------

// Central differences of f with respect to every entry of w.
std::vector<double> numeric_grad(Tensor& w, const std::function<double()>& f, double eps = 1e-6) {
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double keep = w[i];
    w[i] = keep + eps;
    const double up = f();
    w[i] = keep - eps;
    const double down = f();
    w[i] = keep;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

void gce_identity() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::size_t D = 5, C = 4;
  double worst_rel = 0.0, worst_limit = 0.0;
  for (int t = 0; t < 20; ++t) {
    Tensor x(1, D), w(D, C), y(1, C);
    for (auto& v : x.values()) v = n(rng);
    for (auto& v : w.values()) v = n(rng);
    const std::size_t j = static_cast<std::size_t>(t) % C;
    y(0, j) = 1.0;
    auto probs = [&] {
      return ad::softmax_rows(ad::matmul(Value::constant(x), Value::constant(w)));
    };
    const double yhat = probs().data()(0, j);
    const auto g_gce = numeric_grad(w, [&] { return gce_multilabel(y, probs(), 0.7).item(); });
    const auto g_ce =
        numeric_grad(w, [&] { return ce_soft(y, probs(), ClassBalanceWeights::uniform(C)).item(); });
    double scale = 0.0;
    for (double v : g_gce) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < g_gce.size(); ++i)
      worst_rel = std::max(worst_rel, std::abs(g_gce[i] - std::pow(yhat, 0.7) * g_ce[i]) / scale);
    const Value p = probs();
    worst_limit = std::max(worst_limit, std::abs(gce_multilabel(y, p, 1e-6).item() -
                                                 ce_soft(y, p, ClassBalanceWeights::uniform(C)).item()));
  }
  report(3, worst_rel <= kGceIdentityTol && worst_limit <= kGceLimitTol,
         "GCE gradient is yhat^q times CE gradient; GCE tends to CE",
         "q=0.7 max rel err " + fmt("%.2e", worst_rel) + ", q=1e-6 max abs err " + fmt("%.2e", worst_limit));
}

// ---- 4 to 6 -----------------------------------------------------------------

ExperimentSpec synthetic_spec(const fs::path& out) {
  ExperimentSpec s;
  s.data.synth.n = 4000;
  s.data.synth.classes = 6;
  s.data.synth.bias_strength = 0.8;
  s.seeds = {0, 1, 2};
  s.train.lr = 1e-3;
  s.checkpoints = false;
  s.output_dir = out.string();
  return s;
}

std::map<std::pair<MethodKind, int>, ReportRow> means_of(const std::vector<ReportRow>& rows) {
  std::map<std::pair<MethodKind, int>, ReportRow> out;
  for (const auto& r : rows)
    if (r.error) throw Error("run failed: " + *r.error);
  for (const auto& m : mean_rows(rows)) out[{m.method, m.ratio}] = m;
  return out;
}

std::map<std::pair<MethodKind, int>, ReportRow> g_means;

void bias_trend(const fs::path& work) {
  const auto t0 = Clock::now();
  ExperimentSpec s = synthetic_spec(work / "sweep");
  s.methods = {MethodKind::ERM};
  s.ratios = {1, 5, 10, 20, 40};
  const auto means = means_of(run_experiment(s));
  const double t = seconds_since(t0);
  std::vector<double> gaps;
  for (int r : s.ratios) gaps.push_back(means.at({MethodKind::ERM, r}).tpr_gap);
  int inversions = 0;
  bool small = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    if (gaps[i] < gaps[i - 1]) {
      ++inversions;
      small = small && gaps[i - 1] - gaps[i] <= kTrendInversion;
    }
  }
  const double rise = gaps.back() - gaps.front();
  std::string detail = "ERM TPR_gap";
  for (std::size_t i = 0; i < gaps.size(); ++i)
    detail += " 1:" + std::to_string(s.ratios[i]) + "=" + fmt("%.4f", gaps[i]);
  detail += ", rise " + fmt("%.4f", rise) + ", " + fmt("%.0f", t) + " s";
  report(4, inversions <= 1 && small && rise >= kTrendRise && t < kTrendBudget,
         "ERM TPR gap grows with the bias ratio", detail);
  g_means.insert(means.begin(), means.end());
}

double reduction(double base, double v) { return base > 0 ? (base - v) / base : 0.0; }

void debias_efficacy(const fs::path& work) {
  const auto t0 = Clock::now();
  ExperimentSpec s = synthetic_spec(work / "sweep");
  s.methods = {MethodKind::ERM, MethodKind::DS, MethodKind::RW, MethodKind::GADRO};
  s.ratios = {20};
  const auto means = means_of(run_experiment(s));
  const double t = seconds_since(t0);
  g_means.insert(means.begin(), means.end());
  const ReportRow& erm = means.at({MethodKind::ERM, 20});
  bool ok = t < kEfficacyBudget;
  std::string detail;
  for (MethodKind k : {MethodKind::DS, MethodKind::RW}) {
    const ReportRow& m = means.at({k, 20});
    const double a = reduction(erm.tpr_gap, m.tpr_gap), b = reduction(erm.fpr_gap, m.fpr_gap),
                 c = reduction(erm.dp_gap, m.dp_gap);
    ok = ok && a >= kReduction && b >= kReduction && c >= kReduction;
    detail += std::string(method_name(k)) + " reductions TPR " + fmt("%.0f%%", 100 * a) + " FPR " +
              fmt("%.0f%%", 100 * b) + " DP " + fmt("%.0f%%", 100 * c) + "; ";
  }
  const ReportRow& g = means.at({MethodKind::GADRO, 20});
  const bool gadro = g.tpr_gap < erm.tpr_gap && g.fpr_gap < erm.fpr_gap && g.f1_gap < erm.f1_gap &&
                     g.dp_gap < erm.dp_gap && erm.f1 - g.f1 <= kF1Drop;
  ok = ok && gadro;
  detail += "GADRO gaps " + fmt("%.4f", g.tpr_gap) + "/" + fmt("%.4f", g.fpr_gap) + "/" +
            fmt("%.4f", g.f1_gap) + "/" + fmt("%.4f", g.dp_gap) + " vs ERM " + fmt("%.4f", erm.tpr_gap) +
            "/" + fmt("%.4f", erm.fpr_gap) + "/" + fmt("%.4f", erm.f1_gap) + "/" + fmt("%.4f", erm.dp_gap) +
            ", F1 drop " + fmt("%.4f", erm.f1 - g.f1) + "; " + fmt("%.0f", t) + " s";
  report(5, ok, "DS and RW cut gaps by 30%; GADRO lowers all gaps at small F1 cost", detail);
}

void adversarial_signature(const fs::path& work) {
  ExperimentSpec s = synthetic_spec(work / "sweep");
  s.methods = {MethodKind::ERM, MethodKind::ADV};
  s.ratios = {20};
  const auto means = means_of(run_experiment(s));
  const ReportRow& erm = means.at({MethodKind::ERM, 20});
  const ReportRow& adv = means.at({MethodKind::ADV, 20});
  const double r = reduction(erm.dp_gap, adv.dp_gap);
  report(6, r >= kReduction, "ADV reduces DP gap at 1:20",
         "DP_gap ERM " + fmt("%.4f", erm.dp_gap) + " ADV " + fmt("%.4f", adv.dp_gap) + ", reduction " +
             fmt("%.0f%%", 100 * r));
}

// ---- 7 --------------------------------------------------------------------

void resampler_exactness() {
  SynthParams p;
  p.n = 4000;
  p.classes = 8;
  p.spec = alternating_directions(5, p.classes);
  const Dataset base = synth_generate(p, 31);

  bool balanced = true;
  const Dataset down = downsample_balance(base, 3);
  for (const auto& c : down.dominant_counts(Split::Train)) balanced = balanced && c[0] == c[1];

  double worst = 0.0;
  const auto w = compute_reweights(base);
  const auto counts = base.dominant_counts(Split::Train);
  double N = 0.0;
  std::array<double, 2> n_g{0, 0};
  for (const auto& c : counts) {
    n_g[0] += static_cast<double>(c[0]);
    n_g[1] += static_cast<double>(c[1]);
    N += static_cast<double>(c[0] + c[1]);
  }
  std::map<std::pair<std::size_t, std::size_t>, double> mass;
  for (std::size_t i = 0; i < base.size(); ++i)
    if (base[i].split == Split::Train)
      mass[{base[i].dominant(), static_cast<std::size_t>(*base[i].gender)}] += w[i];
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double n_c = static_cast<double>(counts[c][0] + counts[c][1]);
    for (std::size_t g = 0; g < 2; ++g) {
      if (counts[c][g] == 0) continue;
      worst = std::max(worst, std::abs(mass[{c, g}] - n_g[g] * n_c / N));
    }
  }

  // Amplification with the corpus directions on synthetic data.
  SynthParams q = p;
  q.spec = RatioSpec{1, {}};
  const Dataset flat = dominant_filter(synth_generate(q, 32));
  const RatioSpec dirs = msp_podcast_directions(20);
  const Dataset amp = amplify_bias(flat, dirs, 5);
  bool direction = true;
  double ratio_err = 0.0;
  for (Split s : {Split::Train, Split::Dev}) {
    const auto ac = amp.dominant_counts(s);
    for (std::size_t c = 0; c < ac.size(); ++c) {
      const auto maj = static_cast<double>(ac[c][static_cast<std::size_t>(dirs.majority[c])]);
      const auto min = static_cast<double>(ac[c][static_cast<std::size_t>(other(dirs.majority[c]))]);
      direction = direction && maj > min;
      ratio_err = std::max(ratio_err, std::abs(min - maj / 20.0));
    }
  }
  report(7, balanced && worst <= kReweightTol && direction && ratio_err <= 1.0,
         "downsampling, reweighting and amplification are exact",
         std::string("downsample ") + (balanced ? "balanced" : "unbalanced") + ", reweight mass err " +
             fmt("%.2e", worst) + ", amplify directions " + (direction ? "ok" : "wrong") +
             ", max |minority - majority/20| " + fmt("%.2f", ratio_err));
}

// ---- 8 --------------------------------------------------------------------

void guard() {
  SynthParams p;
  p.n = 400;
  p.classes = 4;
  p.dims = 8;
  p.layers = 2;
  p.spec = alternating_directions(5, p.classes);
  const Dataset ds = synth_generate(p, 8);
  const Dataset blind = ds.without_gender(Split::Train);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.hidden = 16;
  cfg.adv_hidden = 8;
  cfg.intrinsic = 8;
  cfg.bias = 8;
  std::size_t ok = 0;
  std::string bad;
  for (MethodKind k : kAllMethods) {
    bool good = false;
    if (uses_bias_supervision(k)) {
      try {
        train({k, {}}, cfg, blind);
      } catch (const ConfigError&) {
        good = true;
      }
    } else {
      const GenderGuard armed(true);
      try {
        good = train({k, {}}, cfg, ds, &armed).gender_reads == 0;
      } catch (const AccessError&) {
      }
    }
    if (good) {
      ++ok;
    } else {
      bad += std::string(" ") + std::string(method_name(k));
    }
  }
  report(8, ok == kAllMethods.size(), "bias supervision guard",
         std::to_string(ok) + "/" + std::to_string(kAllMethods.size()) + " methods behave" +
             (bad.empty() ? "" : ", failing:" + bad));
}

// ---- 9 --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism(const fs::path& work) {
  auto spec = [&](const char* dir) {
    ExperimentSpec s;
    s.data.synth.n = 600;
    s.data.synth.dims = 8;
    s.ratios = {1, 10};
    s.methods = {MethodKind::ERM, MethodKind::ADV, MethodKind::GADRO, MethodKind::LFF, MethodKind::DISENT};
    s.seeds = {0, 1};
    s.train.lr = 1e-3;
    s.train.max_epochs = 3;
    s.train.hidden = 32;
    s.train.adv_hidden = 16;
    s.train.intrinsic = 16;
    s.train.bias = 16;
    s.output_dir = (work / dir).string();
    return s;
  };
  run_experiment(spec("det_a"));
  run_experiment(spec("det_b"));
  bool same = true;
  for (const char* f : {"report.csv", "report.md"}) {
    const std::string a = slurp(work / "det_a" / f), b = slurp(work / "det_b" / f);
    same = same && !a.empty() && a == b;
  }
  report(9, same, "repeated sweeps give byte-identical reports",
         same ? "report.csv and report.md identical" : "reports differ");
}

}  // namespace

int main() {
  set_log_level(LogLevel::Silent);
  const fs::path work = fs::temp_directory_path() / "debias_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  criterion(1, "metrics match brute-force oracle", metric_oracle);
  criterion(2, "losses and step functions pass gradient checks", gradients);
  criterion(3, "GCE gradient identity and CE limit", gce_identity);
  criterion(4, "ERM TPR gap grows with the bias ratio", [&] { bias_trend(work); });
  criterion(5, "debiasing efficacy at 1:20", [&] { debias_efficacy(work); });
  criterion(6, "ADV reduces DP gap at 1:20", [&] { adversarial_signature(work); });
  criterion(7, "resampler exactness", resampler_exactness);
  criterion(8, "bias supervision guard", guard);
  criterion(9, "repeated sweeps give byte-identical reports", [&] { determinism(work); });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
