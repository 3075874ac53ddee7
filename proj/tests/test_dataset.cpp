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

#include "debias/dataset.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "debias/error.hpp"

namespace debias {
namespace {

namespace fs = std::filesystem;

struct Cell {
  std::size_t category;
  Gender gender;
  Split split;
  std::size_t count;
};

// One-dimensional dataset with `count` one-hot samples per cell.
Dataset make_dataset(std::size_t categories, const std::vector<Cell>& cells) {
  std::vector<std::string> names;
  // Datasets need two categories; extra ones stay empty.
  for (std::size_t c = 0; c < std::max<std::size_t>(categories, 2); ++c)
    names.push_back("c" + std::to_string(c));
  std::vector<Sample> samples;
  for (const Cell& cell : cells) {
    for (std::size_t k = 0; k < cell.count; ++k) {
      Sample s;
      s.id = "s" + std::to_string(samples.size());
      s.features = {static_cast<float>(samples.size())};
      s.label.assign(names.size(), 0.0);
      s.label[cell.category] = 1.0;
      s.gender = cell.gender;
      s.split = cell.split;
      samples.push_back(std::move(s));
    }
  }
  return Dataset(names, 1, 1, std::move(samples));
}

std::size_t count_of(const Dataset& ds, Split s, std::size_t c, Gender g) {
  return ds.dominant_counts(s)[c][static_cast<std::size_t>(g)];
}

std::set<std::string> ids(const Dataset& ds) {
  std::set<std::string> out;
  for (const auto& s : ds.samples()) out.insert(s.id);
  return out;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("debias_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Dataset, ValidatesInvariants) {
  Sample s;
  s.id = "a";
  s.features = {1.0f, 2.0f};
  s.label = {0.5, 0.4};  // sums to 0.9
  s.gender = Gender::F;
  EXPECT_THROW(Dataset({"x", "y"}, 1, 2, {s}), ValidationError);
  s.label = {0.6, 0.4};
  EXPECT_THROW(Dataset({"x", "y"}, 1, 3, {s}), ShapeError);
  EXPECT_THROW(Dataset({"x", "y"}, 1, 2, {s, s}), ValidationError);  // duplicate id
  s.features = {1.0f, std::nanf("")};
  EXPECT_THROW(Dataset({"x", "y"}, 1, 2, {s}), ValidationError);
}

TEST(Dataset, CountsRecomputable) {
  const Dataset ds = synth_generate(SynthParams{.n = 300, .label_noise = 0.1}, 3);
  const EffectiveCounts again = compute_counts(ds);
  for (std::size_t c = 0; c < ds.num_categories(); ++c)
    for (Split s : kSplits)
      for (std::optional<Gender> g : {std::optional(Gender::F), std::optional(Gender::M),
                                      std::optional<Gender>()})
        EXPECT_NEAR(ds.counts().at(c, g, s), again.at(c, g, s), 1e-9);
}

TEST(DominantFilter, StrictAtHalf) {
  auto sample = [](std::string id, std::vector<double> label) {
    Sample s;
    s.id = std::move(id);
    s.features = {0.0f};
    s.label = std::move(label);
    s.gender = Gender::F;
    return s;
  };
  const Dataset ds({"a", "b", "c"}, 1, 1,
                   {sample("x", {0.34, 0.33, 0.33}), sample("y", {0.51, 0.49, 0.0}),
                    sample("z", {0.5, 0.5, 0.0}), sample("w", {0.0, 0.6, 0.4})});
  const Dataset f = dominant_filter(ds);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].id, "y");
  EXPECT_EQ(f[1].id, "w");
  EXPECT_EQ(ids(dominant_filter(f)), ids(f));  // idempotent
}

TEST(AmplifyBias, ReproducesCorpusCountsAt20) {
  // Angry is male-majority, fear female-majority.
  const Dataset ds = make_dataset(2, {{0, Gender::M, Split::Train, 3357},
                                      {0, Gender::F, Split::Train, 2000},
                                      {1, Gender::F, Split::Train, 218},
                                      {1, Gender::M, Split::Train, 150}});
  const Dataset out = amplify_bias(ds, RatioSpec{20, {Gender::M, Gender::F}}, 1);
  EXPECT_EQ(count_of(out, Split::Train, 0, Gender::M), 3357u);
  EXPECT_EQ(count_of(out, Split::Train, 0, Gender::F), 167u);
  EXPECT_EQ(count_of(out, Split::Train, 1, Gender::F), 218u);
  EXPECT_EQ(count_of(out, Split::Train, 1, Gender::M), 10u);
}

TEST(AmplifyBias, RatioOneEqualizes) {
  const Dataset ds = make_dataset(1, {{0, Gender::M, Split::Dev, 30}, {0, Gender::F, Split::Dev, 12}});
  const Dataset out = amplify_bias(ds, RatioSpec{1, {Gender::M, Gender::M}}, 0);
  EXPECT_EQ(count_of(out, Split::Dev, 0, Gender::M), 12u);
  EXPECT_EQ(count_of(out, Split::Dev, 0, Gender::F), 12u);
}

TEST(AmplifyBias, ScarceMinorityShrinksMajority) {
  const Dataset ds = make_dataset(1, {{0, Gender::M, Split::Train, 100}, {0, Gender::F, Split::Train, 2}});
  const Dataset out = amplify_bias(ds, RatioSpec{20, {Gender::M, Gender::M}}, 0);
  EXPECT_EQ(count_of(out, Split::Train, 0, Gender::F), 2u);
  EXPECT_EQ(count_of(out, Split::Train, 0, Gender::M), 40u);
}

TEST(AmplifyBias, MissingMajorityIsConfigError) {
  const Dataset ds = make_dataset(1, {{0, Gender::F, Split::Train, 10}});
  EXPECT_THROW(amplify_bias(ds, RatioSpec{5, {Gender::M, Gender::M}}, 0), ConfigError);
}

TEST(AmplifyBias, NeverAddsAndKeepsTestVerbatim) {
  const Dataset ds = synth_generate(SynthParams{.n = 600}, 5);
  for (int r : {1, 5, 10, 20, 40}) {
    const Dataset out = amplify_bias(ds, alternating_directions(r, ds.num_categories()), 9);
    EXPECT_LE(out.size(), ds.size());
    const auto in_ids = ids(ds);
    for (const auto& s : out.samples()) EXPECT_TRUE(in_ids.count(s.id));
    const auto a = ds.indices(Split::Test), b = out.indices(Split::Test);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(ds[a[i]].id, out[b[i]].id);
      EXPECT_EQ(ds[a[i]].features, out[b[i]].features);
    }
    // Bit-reproducible.
    EXPECT_EQ(manifest_csv(out),
              manifest_csv(amplify_bias(ds, alternating_directions(r, ds.num_categories()), 9)));
  }
}

TEST(AmplifyBias, MspDirections) {
  const RatioSpec spec = msp_podcast_directions(20);
  // angry, sad, happy, surprise, fear, disgust, contempt, neutral
  const std::vector<Gender> want{Gender::M, Gender::F, Gender::M, Gender::F,
                                 Gender::F, Gender::M, Gender::F, Gender::M};
  EXPECT_EQ(spec.majority, want);
}

TEST(DownsampleBalance, Examples) {
  const Dataset ds = make_dataset(3, {{0, Gender::F, Split::Train, 4},
                                      {0, Gender::M, Split::Train, 40},
                                      {1, Gender::F, Split::Train, 30},
                                      {1, Gender::M, Split::Train, 3},
                                      {2, Gender::F, Split::Train, 50},
                                      {2, Gender::M, Split::Train, 50},
                                      {0, Gender::M, Split::Dev, 7}});
  const Dataset out = downsample_balance(ds, 2);
  const auto counts = out.dominant_counts(Split::Train);
  EXPECT_EQ(counts[0], (std::array<std::size_t, 2>{4, 4}));
  EXPECT_EQ(counts[1], (std::array<std::size_t, 2>{3, 3}));
  EXPECT_EQ(counts[2], (std::array<std::size_t, 2>{50, 50}));
  EXPECT_EQ(out.count(Split::Dev), 7u);
  EXPECT_THROW(downsample_balance(make_dataset(1, {{0, Gender::F, Split::Train, 3}}), 0), ConfigError);
}

TEST(Reweights, SingleCategoryExample) {
  const Dataset ds = make_dataset(1, {{0, Gender::F, Split::Train, 20}, {0, Gender::M, Split::Train, 80}});
  // The joint weight is 1 when N_c = N; the gender-only weight is N / (2 N_g).
  for (double v : compute_reweights(ds)) EXPECT_NEAR(v, 1.0, 1e-12);
  const auto g = compute_reweights(ds, ReweightMode::GenderOnly);
  EXPECT_NEAR(g.front(), 2.5, 1e-12);
  EXPECT_NEAR(g.back(), 0.625, 1e-12);
}

TEST(Reweights, GroupMassIdentityAndTotal) {
  SynthParams p;
  p.n = 800;
  p.spec = alternating_directions(10, p.classes);
  const Dataset ds = synth_generate(p, 4);
  const auto w = compute_reweights(ds);
  const auto counts = ds.dominant_counts(Split::Train);
  const double N = static_cast<double>(ds.count(Split::Train));
  std::array<double, 2> n_g{0, 0};
  for (const auto& c : counts) {
    n_g[0] += static_cast<double>(c[0]);
    n_g[1] += static_cast<double>(c[1]);
  }
  std::map<std::pair<std::size_t, int>, double> mass;
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].split != Split::Train) {
      EXPECT_EQ(w[i], 1.0);
      continue;
    }
    EXPECT_GT(w[i], 0.0);
    mass[{ds[i].dominant(), static_cast<int>(*ds[i].gender)}] += w[i];
    total += w[i];
  }
  EXPECT_NEAR(total, N, 1e-9);
  for (const auto& [key, m] : mass) {
    const double n_c = static_cast<double>(counts[key.first][0] + counts[key.first][1]);
    EXPECT_NEAR(m, n_g[static_cast<std::size_t>(key.second)] * n_c / N, 1e-9);
  }
}

TEST(Reweights, BalancedIsAllOnes) {
  const Dataset ds = make_dataset(2, {{0, Gender::F, Split::Train, 5}, {0, Gender::M, Split::Train, 5},
                                      {1, Gender::F, Split::Train, 5}, {1, Gender::M, Split::Train, 5}});
  for (double w : compute_reweights(ds)) EXPECT_NEAR(w, 1.0, 1e-15);
}

TEST(Manifest, RoundTripAndErrors) {
  const Dataset ds = synth_generate(SynthParams{.n = 120, .dims = 8, .layers = 2}, 1);
  const fs::path dir = temp_dir("manifest");
  save_manifest(ds, dir / "m.csv", dir / "f.bin");
  const Dataset back = load_manifest(dir / "m.csv", dir / "f.bin");
  EXPECT_EQ(manifest_csv(back), manifest_csv(ds));
  EXPECT_EQ(feature_bytes(back), feature_bytes(ds));
  EXPECT_EQ(back[0].id, ds[0].id);

  // Label mass 0.98 names the sample.
  std::string csv = manifest_csv(ds);
  const auto line_end = csv.find('\n', csv.find('\n') + 1);
  {
    std::ofstream out(dir / "bad.csv");
    out << csv.substr(0, csv.find('\n') + 1) << ds[0].id << "," << to_string(*ds[0].gender) << ","
        << to_string(ds[0].split);
    for (std::size_t c = 0; c < ds.num_categories(); ++c) out << "," << (c == 0 ? 0.98 : 0.0);
    out << csv.substr(line_end);
  }
  try {
    load_manifest(dir / "bad.csv", dir / "f.bin");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(ds[0].id), std::string::npos);
  }

  // Malformed row names its line.
  {
    std::ofstream out(dir / "short.csv");
    out << csv.substr(0, line_end + 1) << "only,two\n";
  }
  try {
    load_manifest(dir / "short.csv", dir / "f.bin");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }

  // Feature file with one row fewer than the manifest.
  const Dataset fewer = ds.with_samples({ds.samples().begin(), ds.samples().end() - 1});
  save_manifest(fewer, dir / "m4.csv", dir / "f4.bin");
  EXPECT_THROW(load_manifest(dir / "m.csv", dir / "f4.bin"), ShapeError);
}

TEST(Manifest, EmptyGenderIsUnknown) {
  const Dataset ds = synth_generate(SynthParams{.n = 60}, 2);
  const Dataset blind = ds.without_gender(Split::Train);
  EXPECT_FALSE(blind.has_gender(Split::Train));
  EXPECT_TRUE(blind.has_gender(Split::Test));
  const fs::path dir = temp_dir("unknown");
  save_manifest(blind, dir / "m.csv", dir / "f.bin");
  const Dataset back = load_manifest(dir / "m.csv", dir / "f.bin");
  EXPECT_FALSE(back[back.indices(Split::Train)[0]].gender.has_value());
}

// Logistic-regression gender probe trained on train features, scored on test.
double gender_probe_accuracy(const Dataset& ds) {
  const std::size_t F = ds.layers() * ds.dims();
  std::vector<double> w(F + 1, 0.0);
  const auto train = ds.indices(Split::Train);
  for (int epoch = 0; epoch < 200; ++epoch) {
    std::vector<double> g(F + 1, 0.0);
    for (std::size_t i : train) {
      double z = w[F];
      for (std::size_t k = 0; k < F; ++k) z += w[k] * ds[i].features[k];
      const double err = 1.0 / (1.0 + std::exp(-z)) - (*ds[i].gender == Gender::F ? 1.0 : 0.0);
      for (std::size_t k = 0; k < F; ++k) g[k] += err * ds[i].features[k];
      g[F] += err;
    }
    for (std::size_t k = 0; k <= F; ++k) w[k] -= 0.5 * g[k] / static_cast<double>(train.size());
  }
  std::size_t correct = 0;
  const auto test = ds.indices(Split::Test);
  for (std::size_t i : test) {
    double z = w[F];
    for (std::size_t k = 0; k < F; ++k) z += w[k] * ds[i].features[k];
    correct += (z > 0) == (*ds[i].gender == Gender::F);
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

TEST(Synth, DeterministicAndWellFormed) {
  SynthParams p;
  p.n = 500;
  p.label_noise = 0.2;
  const Dataset a = synth_generate(p, 17), b = synth_generate(p, 17);
  EXPECT_EQ(manifest_csv(a), manifest_csv(b));
  EXPECT_EQ(feature_bytes(a), feature_bytes(b));
  EXPECT_NE(feature_bytes(a), feature_bytes(synth_generate(p, 18)));
  EXPECT_EQ(a.count(Split::Train), 350u);
  EXPECT_EQ(a.count(Split::Dev), 50u);
  EXPECT_EQ(a.count(Split::Test), 100u);
  for (const auto& s : a.samples()) EXPECT_GE(s.dominant_mass(), 0.6);
  EXPECT_EQ(dominant_filter(a).size(), a.size());
}

TEST(Synth, RealizedRatioWithinOneSample) {
  SynthParams p;
  p.spec = alternating_directions(20, p.classes);
  const Dataset ds = synth_generate(p, 3);
  const auto counts = ds.dominant_counts(Split::Train);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const auto maj = static_cast<std::size_t>(p.spec.majority[c]);
    const double major = static_cast<double>(counts[c][maj]);
    const double minor = static_cast<double>(counts[c][1 - maj]);
    EXPECT_LE(std::abs(major - 20.0 * minor), 20.0) << "category " << c;
    EXPECT_LE(std::abs(major / 20.0 - minor), 1.0) << "category " << c;
  }
}

TEST(Synth, BiasStrengthControlsGenderSignal) {
  SynthParams p;
  p.n = 2000;
  p.bias_strength = 0.0;
  EXPECT_LE(gender_probe_accuracy(synth_generate(p, 6)), 0.55);
  p.bias_strength = 0.8;
  EXPECT_GE(gender_probe_accuracy(synth_generate(p, 6)), 0.75);
}

TEST(Synth, ConfigErrors) {
  EXPECT_THROW(synth_generate(SynthParams{.n = 10}, 0), ConfigError);
  EXPECT_THROW(synth_generate(SynthParams{.classes = 6, .dims = 4}, 0), ConfigError);
  EXPECT_THROW(synth_generate(SynthParams{.bias_strength = 1.5}, 0), ConfigError);
  EXPECT_THROW(synth_generate(SynthParams{.label_noise = -1.0}, 0), ConfigError);
}

}  // namespace
}  // namespace debias
