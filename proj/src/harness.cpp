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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "debias/error.hpp"
#include "debias/log.hpp"

namespace debias {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t method_index(MethodKind k) {
  return static_cast<std::size_t>(std::find(kAllMethods.begin(), kAllMethods.end(), k) -
                                  kAllMethods.begin());
}

std::string method_slug(MethodKind k) {
  std::string out;
  for (char ch : method_name(k)) {
    if (ch == '+') {
      out += "_plus_";
    } else if (ch == '-') {
      out += "_minus_";
    } else {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  return out;
}

std::string run_stem(MethodKind m, int ratio, std::uint64_t seed) {
  return method_slug(m) + "_r" + std::to_string(ratio) + "_s" + std::to_string(seed);
}

// ---- JSON helpers ------------------------------------------------------------

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError(std::string("unknown key '") + k + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

SynthParams parse_synth(const json& j) {
  reject_unknown(j,
                 {"n", "classes", "dims", "layers", "bias_strength", "label_noise", "emotion_scale",
                  "gender_scale", "class_prior", "male_majority_weight"},
                 "data.synth");
  SynthParams p;
  read(j, "n", p.n);
  read(j, "classes", p.classes);
  read(j, "dims", p.dims);
  read(j, "layers", p.layers);
  read(j, "bias_strength", p.bias_strength);
  read(j, "label_noise", p.label_noise);
  read(j, "emotion_scale", p.emotion_scale);
  read(j, "gender_scale", p.gender_scale);
  read(j, "class_prior", p.class_prior);
  read(j, "male_majority_weight", p.male_majority_weight);
  return p;
}

json synth_json(const SynthParams& p) {
  return json{{"n", p.n},
              {"classes", p.classes},
              {"dims", p.dims},
              {"layers", p.layers},
              {"bias_strength", p.bias_strength},
              {"label_noise", p.label_noise},
              {"emotion_scale", p.emotion_scale},
              {"gender_scale", p.gender_scale},
              {"class_prior", p.class_prior},
              {"male_majority_weight", p.male_majority_weight}};
}

TrainConfig parse_train(const json& j) {
  reject_unknown(j,
                 {"lr", "weight_decay", "batch_size", "max_epochs", "patience", "hidden",
                  "adv_hidden", "intrinsic", "bias"},
                 "train");
  TrainConfig c;
  read(j, "lr", c.lr);
  read(j, "weight_decay", c.weight_decay);
  read(j, "batch_size", c.batch_size);
  read(j, "max_epochs", c.max_epochs);
  read(j, "patience", c.patience);
  read(j, "hidden", c.hidden);
  read(j, "adv_hidden", c.adv_hidden);
  read(j, "intrinsic", c.intrinsic);
  read(j, "bias", c.bias);
  return c;
}

json train_json(const TrainConfig& c) {
  return json{{"lr", c.lr},           {"weight_decay", c.weight_decay},
              {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
              {"patience", c.patience}, {"hidden", c.hidden},
              {"adv_hidden", c.adv_hidden}, {"intrinsic", c.intrinsic},
              {"bias", c.bias}};
}

Hyperparams parse_hp(const json& j) {
  reject_unknown(j,
                 {"lambda_adv", "adversary_input", "lambda_diff", "k", "lambda_gr", "tau", "gamma", "lambda_b",
                  "lambda_gd", "q", "alpha", "r", "lambda_lvr", "omega", "center_loss", "beta",
                  "difficulty_weights", "swap", "swap_start", "reweight"},
                 "hyperparams");
  Hyperparams h;
  read(j, "lambda_adv", h.lambda_adv);
  if (j.contains("adversary_input")) {
    std::string where;
    read(j, "adversary_input", where);
    if (where == "aggregated") {
      h.adversary_input = AdversaryInput::Aggregated;
    } else if (where == "embedding") {
      h.adversary_input = AdversaryInput::Embedding;
    } else {
      throw ConfigError("adversary_input must be 'aggregated' or 'embedding'");
    }
  }
  read(j, "lambda_diff", h.lambda_diff);
  read(j, "k", h.k);
  read(j, "lambda_gr", h.lambda_gr);
  read(j, "tau", h.tau);
  read(j, "gamma", h.gamma);
  read(j, "lambda_b", h.lambda_b);
  read(j, "lambda_gd", h.lambda_gd);
  read(j, "q", h.q);
  read(j, "alpha", h.alpha);
  read(j, "r", h.r);
  read(j, "lambda_lvr", h.lambda_lvr);
  read(j, "omega", h.omega);
  read(j, "center_loss", h.center_loss);
  read(j, "beta", h.beta);
  read(j, "difficulty_weights", h.difficulty_weights);
  read(j, "swap", h.swap);
  read(j, "swap_start", h.swap_start);
  if (j.contains("reweight")) {
    std::string mode;
    read(j, "reweight", mode);
    if (mode == "gender_category") {
      h.reweight = ReweightMode::GenderCategory;
    } else if (mode == "gender") {
      h.reweight = ReweightMode::GenderOnly;
    } else {
      throw ConfigError("reweight must be 'gender_category' or 'gender'");
    }
  }
  return h;
}

json hp_json(const Hyperparams& h) {
  return json{{"lambda_adv", h.lambda_adv},
              {"adversary_input",
               h.adversary_input == AdversaryInput::Embedding ? "embedding" : "aggregated"},
              {"lambda_diff", h.lambda_diff},
              {"k", h.k},
              {"lambda_gr", h.lambda_gr},
              {"tau", h.tau},
              {"gamma", h.gamma},
              {"lambda_b", h.lambda_b},
              {"lambda_gd", h.lambda_gd},
              {"q", h.q},
              {"alpha", h.alpha},
              {"r", h.r},
              {"lambda_lvr", h.lambda_lvr},
              {"omega", h.omega},
              {"center_loss", h.center_loss},
              {"beta", h.beta},
              {"difficulty_weights", h.difficulty_weights},
              {"swap", h.swap},
              {"swap_start", h.swap_start},
              {"reweight", h.reweight == ReweightMode::GenderOnly ? "gender" : "gender_category"}};
}

json row_json(const ReportRow& r) {
  json j{{"method", std::string(method_name(r.method))}, {"ratio", r.ratio}, {"seed", r.seed}};
  if (r.error) {
    j["error"] = *r.error;
  } else {
    j["metrics"] = json{{"f1", r.f1},           {"acc", r.acc},         {"tpr_gap", r.tpr_gap},
                        {"fpr_gap", r.fpr_gap}, {"f1_gap", r.f1_gap}, {"dp_gap", r.dp_gap}};
  }
  return j;
}

ReportRow parse_row(const json& j) {
  ReportRow r;
  r.method = parse_method(j.at("method").get<std::string>());
  r.ratio = j.at("ratio").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("error")) {
    r.error = j.at("error").get<std::string>();
    return r;
  }
  const json& m = j.at("metrics");
  r.f1 = m.at("f1").get<double>();
  r.acc = m.at("acc").get<double>();
  r.tpr_gap = m.at("tpr_gap").get<double>();
  r.fpr_gap = m.at("fpr_gap").get<double>();
  r.f1_gap = m.at("f1_gap").get<double>();
  r.dp_gap = m.at("dp_gap").get<double>();
  return r;
}

std::optional<ReportRow> read_run_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return std::nullopt;
  try {
    return parse_row(json::parse(in));
  } catch (const std::exception& e) {
    log_warning("ignoring unreadable run file " + p.string() + ": " + e.what());
    return std::nullopt;
  }
}

bool row_less(const ReportRow& a, const ReportRow& b) {
  const auto ka = std::tuple(method_index(a.method), a.ratio, a.seed);
  const auto kb = std::tuple(method_index(b.method), b.ratio, b.seed);
  return ka < kb;
}

std::string fmt(double v, int decimals) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

// ---- spec ------------------------------------------------------------------

void ExperimentSpec::validate() const {
  if (data.kind != "synth" && data.kind != "manifest") {
    throw ConfigError("data.source must be 'synth' or 'manifest'");
  }
  if (data.kind == "manifest" && (data.manifest.empty() || data.features.empty())) {
    throw ConfigError("manifest source needs 'manifest' and 'features' paths");
  }
  if (data.directions != "alternating" && data.directions != "msp_podcast") {
    throw ConfigError("directions must be 'alternating' or 'msp_podcast'");
  }
  if (ratios.empty()) throw ConfigError("ratio list is empty");
  for (int r : ratios)
    if (r < 1) throw ConfigError("ratios must be positive integers");
  if (methods.empty()) throw ConfigError("method list is empty");
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (std::set(seeds.begin(), seeds.end()).size() != seeds.size()) throw ConfigError("duplicate seeds");
  if (workers == 0) throw ConfigError("workers must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
}

ExperimentSpec parse_experiment_spec(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"data", "ratios", "methods", "seeds", "seed", "train", "hyperparams", "workers",
                  "checkpoints", "output_dir"},
                 "config");
  ExperimentSpec s;
  if (j.contains("data")) {
    const json& d = j["data"];
    reject_unknown(d, {"source", "synth", "seed", "manifest", "features", "filter", "directions"},
                   "data");
    read(d, "source", s.data.kind);
    if (d.contains("synth")) s.data.synth = parse_synth(d["synth"]);
    read(d, "seed", s.data.seed);
    read(d, "manifest", s.data.manifest);
    read(d, "features", s.data.features);
    read(d, "filter", s.data.filter);
    read(d, "directions", s.data.directions);
  }
  read(j, "ratios", s.ratios);
  if (j.contains("methods")) {
    std::vector<std::string> names;
    read(j, "methods", names);
    s.methods.clear();
    for (const auto& n : names) s.methods.push_back(parse_method(n));
  }
  read(j, "seeds", s.seeds);
  read(j, "seed", s.seed);
  if (j.contains("train")) s.train = parse_train(j["train"]);
  if (j.contains("hyperparams")) s.hp = parse_hp(j["hyperparams"]);
  read(j, "workers", s.workers);
  read(j, "checkpoints", s.checkpoints);
  read(j, "output_dir", s.output_dir);
  s.validate();
  return s;
}

ExperimentSpec load_experiment_spec(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_spec(buf.str());
}

std::string experiment_spec_json(const ExperimentSpec& s) {
  std::vector<std::string> methods;
  for (auto m : s.methods) methods.emplace_back(method_name(m));
  json j{{"data",
          {{"source", s.data.kind},
           {"synth", synth_json(s.data.synth)},
           {"seed", s.data.seed},
           {"manifest", s.data.manifest},
           {"features", s.data.features},
           {"filter", s.data.filter},
           {"directions", s.data.directions}}},
         {"ratios", s.ratios},
         {"methods", methods},
         {"seeds", s.seeds},
         {"seed", s.seed},
         {"train", train_json(s.train)},
         {"hyperparams", hp_json(s.hp)},
         {"workers", s.workers},
         {"checkpoints", s.checkpoints},
         {"output_dir", s.output_dir}};
  return j.dump(2) + "\n";
}

// ---- sweep -------------------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  // splitmix64 finalizer over a running combination.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(a);
  for (std::uint64_t v : {b, c, d}) h = mix(h ^ v);
  return h;
}

RatioSpec ratio_spec(const std::string& directions, int ratio, std::size_t categories) {
  if (directions == "msp_podcast") {
    RatioSpec s = msp_podcast_directions(ratio);
    if (s.majority.size() != categories) {
      throw ConfigError("msp_podcast directions need exactly " + std::to_string(s.majority.size()) +
                        " categories");
    }
    return s;
  }
  return alternating_directions(ratio, categories);
}

Dataset load_source(const DataSource& src) {
  Dataset ds = src.kind == "synth" ? synth_generate(src.synth, src.seed)
                                   : load_manifest(src.manifest, src.features);
  return src.filter ? dominant_filter(ds) : ds;
}

Dataset sweep_dataset(const Dataset& base, const ExperimentSpec& spec, int ratio,
                      std::uint64_t rep_seed) {
  const RatioSpec rs = ratio_spec(spec.data.directions, ratio, base.num_categories());
  return amplify_bias(base, rs, derive_seed(spec.seed, 0xa3b1f1ULL, static_cast<std::uint64_t>(ratio), rep_seed));
}

std::uint64_t run_seed(const ExperimentSpec& spec, MethodKind method, int ratio,
                       std::uint64_t rep_seed) {
  return derive_seed(spec.seed, method_index(method), static_cast<std::uint64_t>(ratio), rep_seed);
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<ReportRow> load_rows(const fs::path& dir) {
  const fs::path runs = dir / "runs";
  if (!fs::is_directory(runs)) throw ConfigError("no runs directory under " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(runs)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ReportRow> rows;
  for (const auto& f : files)
    if (auto r = read_run_file(f)) rows.push_back(std::move(*r));
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

std::vector<ReportRow> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const fs::path out = spec.output_dir;
  const fs::path runs = out / "runs";
  fs::create_directories(runs);
  write_file_atomic(out / "spec.json", experiment_spec_json(spec));

  struct Task {
    MethodKind method;
    int ratio;
    std::uint64_t seed;
    std::size_t data;  // index into `datasets`
  };
  std::vector<Task> tasks;
  std::vector<std::pair<int, std::uint64_t>> keys;
  for (int ratio : spec.ratios) {
    for (std::uint64_t s : spec.seeds) {
      std::size_t pending = 0;
      for (MethodKind m : spec.methods) {
        if (fs::exists(runs / (run_stem(m, ratio, s) + ".json"))) continue;
        tasks.push_back({m, ratio, s, keys.size()});
        ++pending;
      }
      if (pending > 0) keys.emplace_back(ratio, s);
    }
  }

  std::vector<std::optional<Dataset>> datasets(keys.size());
  std::vector<std::string> data_errors(keys.size());
  if (!tasks.empty()) {
    const Dataset base = load_source(spec.data);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      try {
        datasets[i] = sweep_dataset(base, spec, keys[i].first, keys[i].second);
      } catch (const Error& e) {
        data_errors[i] = e.what();
      }
    }
  }

  auto execute = [&](const Task& t) {
    ReportRow row;
    row.method = t.method;
    row.ratio = t.ratio;
    row.seed = t.seed;
    const std::string stem = run_stem(t.method, t.ratio, t.seed);
    try {
      if (!datasets[t.data]) throw ConfigError(data_errors[t.data]);
      const Dataset& ds = *datasets[t.data];
      MethodSpec ms{t.method, spec.hp};
      TrainConfig cfg = spec.train;
      cfg.seed = run_seed(spec, t.method, t.ratio, t.seed);
      const TrainResult res = train(ms, cfg, ds);
      const MetricReport m = evaluate_split(res.model, ds, Split::Test);
      row.f1 = m.f1;
      row.acc = m.acc;
      row.tpr_gap = m.tpr_gap;
      row.fpr_gap = m.fpr_gap;
      row.f1_gap = m.f1_gap;
      row.dp_gap = m.dp_gap;
      write_file_atomic(runs / (stem + ".log.csv"), training_log_csv(res.log));
      if (spec.checkpoints) {
        const auto bytes = checkpoint_bytes(res.model);
        write_file_atomic(runs / (stem + ".emoc"),
                          std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      }
    } catch (const std::exception& e) {
      row.error = e.what();
      log_warning("run " + stem + " failed: " + e.what());
    }
    write_file_atomic(runs / (stem + ".json"), row_json(row).dump(2) + "\n");
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        execute(tasks[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(spec.workers, std::max<std::size_t>(tasks.size(), 1));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Only the triples of this spec, read back from disk so that resumed and
  // fresh sweeps report identical bytes.
  std::vector<ReportRow> rows;
  for (int ratio : spec.ratios)
    for (std::uint64_t s : spec.seeds)
      for (MethodKind m : spec.methods)
        if (auto r = read_run_file(runs / (run_stem(m, ratio, s) + ".json"))) rows.push_back(*r);
  std::sort(rows.begin(), rows.end(), row_less);
  write_file_atomic(out / "report.csv", emit_report(rows, ReportFormat::Csv));
  write_file_atomic(out / "report.md", emit_report(rows, ReportFormat::Markdown));
  return rows;
}

// ---- reports -------------------------------------------------------------------

ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "md" || s == "markdown") return ReportFormat::Markdown;
  throw ConfigError("report format must be 'csv' or 'md'");
}

std::vector<ReportRow> mean_rows(const std::vector<ReportRow>& rows) {
  std::map<std::pair<std::size_t, int>, std::pair<ReportRow, std::size_t>> acc;
  for (const auto& r : rows) {
    if (r.error) continue;
    auto& [sum, n] = acc[{method_index(r.method), r.ratio}];
    if (n == 0) {
      sum = r;
      sum.seed = 0;
    } else {
      sum.f1 += r.f1;
      sum.acc += r.acc;
      sum.tpr_gap += r.tpr_gap;
      sum.fpr_gap += r.fpr_gap;
      sum.f1_gap += r.f1_gap;
      sum.dp_gap += r.dp_gap;
    }
    ++n;
  }
  std::vector<ReportRow> out;
  for (auto& [_, v] : acc) {
    auto& [sum, n] = v;
    const double k = static_cast<double>(n);
    for (double* f : {&sum.f1, &sum.acc, &sum.tpr_gap, &sum.fpr_gap, &sum.f1_gap, &sum.dp_gap}) *f /= k;
    out.push_back(sum);
  }
  return out;
}

std::string emit_report(std::vector<ReportRow> rows, ReportFormat format) {
  std::sort(rows.begin(), rows.end(), row_less);
  const auto means = mean_rows(rows);
  auto seeds_ok = [&](const ReportRow& m) {
    return std::count_if(rows.begin(), rows.end(), [&](const ReportRow& r) {
      return !r.error && r.method == m.method && r.ratio == m.ratio;
    });
  };

  // Rows in output order; `summary` marks the row representing its
  // (method, ratio) group in the markdown ranking.
  struct Line {
    ReportRow row;
    bool mean = false;
    bool summary = false;
  };
  std::vector<Line> lines;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].method == rows[i].method && rows[j].ratio == rows[i].ratio) ++j;
    const ReportRow* mean = nullptr;
    for (const auto& m : means)
      if (m.method == rows[i].method && m.ratio == rows[i].ratio) mean = &m;
    const bool with_mean = mean != nullptr && seeds_ok(*mean) > 1;
    for (std::size_t k = i; k < j; ++k) lines.push_back({rows[k], false, !with_mean && !rows[k].error});
    if (with_mean) lines.push_back({*mean, true, true});
    i = j;
  }

  auto metrics = [](const ReportRow& r) {
    return std::array<double, 6>{r.f1, r.acc, r.tpr_gap, r.fpr_gap, r.f1_gap, r.dp_gap};
  };
  std::string out;
  if (format == ReportFormat::Csv) {
    out = "method,ratio,seed,f1,acc,tpr_gap,fpr_gap,f1_gap,dp_gap,status\n";
    for (const auto& l : lines) {
      out += std::string(method_name(l.row.method)) + "," + std::to_string(l.row.ratio) + "," +
             (l.mean ? std::string("mean") : std::to_string(l.row.seed));
      for (double v : metrics(l.row)) out += "," + (l.row.error ? std::string() : fmt(v, 6));
      out += l.row.error ? ",error\n" : ",ok\n";
    }
    return out;
  }

  std::vector<int> ratios;
  for (const auto& l : lines)
    if (std::find(ratios.begin(), ratios.end(), l.row.ratio) == ratios.end()) ratios.push_back(l.row.ratio);
  std::sort(ratios.begin(), ratios.end());
  constexpr std::array<bool, 6> kHigherBetter = {true, true, false, false, false, false};
  for (int ratio : ratios) {
    // Distinct ranked values per metric among the summary rows.
    std::array<std::vector<double>, 6> ranked;
    for (const auto& l : lines) {
      if (l.row.ratio != ratio || !l.summary) continue;
      const auto m = metrics(l.row);
      for (std::size_t c = 0; c < 6; ++c) ranked[c].push_back(std::round(m[c] * 1e4) / 1e4);
    }
    for (std::size_t c = 0; c < 6; ++c) {
      auto& v = ranked[c];
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      if (kHigherBetter[c]) std::reverse(v.begin(), v.end());
    }
    if (!out.empty()) out += "\n";
    out += "## Ratio 1:" + std::to_string(ratio) + "\n\n";
    out += "| Method | Seed | F1 | ACC | TPR_gap | FPR_gap | F1_gap | DP_gap |\n";
    out += "|---|---|---|---|---|---|---|---|\n";
    for (const auto& l : lines) {
      if (l.row.ratio != ratio) continue;
      out += "| " + std::string(method_name(l.row.method)) + " | " +
             (l.mean ? std::string("mean") : std::to_string(l.row.seed)) + " |";
      if (l.row.error) {
        out += " ERROR | | | | | |\n";
        continue;
      }
      const auto m = metrics(l.row);
      for (std::size_t c = 0; c < 6; ++c) {
        std::string cell = fmt(m[c], 4);
        if (l.summary) {
          const double v = std::round(m[c] * 1e4) / 1e4;
          if (!ranked[c].empty() && v == ranked[c][0]) {
            cell = "**" + cell + "**";
          } else if (ranked[c].size() > 1 && v == ranked[c][1]) {
            cell = "<u>" + cell + "</u>";
          }
        }
        out += " " + cell + " |";
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace debias
