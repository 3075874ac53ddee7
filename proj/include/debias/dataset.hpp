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

// Multi-label emotion datasets with a binary gender attribute: ingestion,
// dominant-category filtering, bias amplification, balancing, reweighing and
// a synthetic generator standing in for frozen SSL features.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace debias {

enum class Gender : std::uint8_t { F = 0, M = 1 };
enum class Split : std::uint8_t { Train = 0, Dev = 1, Test = 2 };

inline constexpr std::array<Gender, 2> kGenders = {Gender::F, Gender::M};
inline constexpr std::array<Split, 3> kSplits = {Split::Train, Split::Dev, Split::Test};

std::string_view to_string(Gender g);
std::string_view to_string(Split s);
Gender parse_gender(std::string_view s);  // "F" / "M"
Split parse_split(std::string_view s);    // "train" / "dev" / "test"
inline Gender other(Gender g) { return g == Gender::F ? Gender::M : Gender::F; }

struct Sample {
  std::string id;
  // L x D block, layer-major.
  std::vector<float> features;
  // Distributional label over the dataset's categories.
  std::vector<double> label;
  // Absent when the protected attribute is unknown.
  std::optional<Gender> gender;
  Split split = Split::Train;

  // Index of the largest label entry (first one on ties).
  std::size_t dominant() const;
  double dominant_mass() const;
};

// Effective counts: label mass per (category, gender, split). Samples without
// a gender tag are accumulated in the `unknown` slot.
class EffectiveCounts {
 public:
  EffectiveCounts() = default;
  explicit EffectiveCounts(std::size_t categories) : cells_(categories * 9, 0.0) {}

  double at(std::size_t category, std::optional<Gender> g, Split s) const {
    return cells_[index(category, g, s)];
  }
  double& at(std::size_t category, std::optional<Gender> g, Split s) {
    return cells_[index(category, g, s)];
  }
  // Label mass of one category in one split, over all genders.
  double category_total(std::size_t category, Split s) const;
  std::size_t categories() const { return cells_.size() / 9; }

  friend bool operator==(const EffectiveCounts&, const EffectiveCounts&) = default;

 private:
  static std::size_t index(std::size_t category, std::optional<Gender> g, Split s) {
    const std::size_t gi = g ? static_cast<std::size_t>(*g) : 2;
    return category * 9 + gi * 3 + static_cast<std::size_t>(s);
  }
  std::vector<double> cells_;
};

// Immutable, validated collection of samples.
class Dataset {
 public:
  Dataset() = default;
  // Throws ValidationError / ShapeError when an invariant is violated.
  Dataset(std::vector<std::string> categories, std::size_t layers, std::size_t dims,
          std::vector<Sample> samples);

  const std::vector<std::string>& categories() const { return categories_; }
  std::size_t num_categories() const { return categories_.size(); }
  std::size_t layers() const { return layers_; }
  std::size_t dims() const { return dims_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }

  std::vector<std::size_t> indices(Split s) const;
  std::size_t count(Split s) const;
  // True when every sample of split `s` carries a gender tag.
  bool has_gender(Split s) const;
  const EffectiveCounts& counts() const { return counts_; }
  // Hard counts of samples per (dominant category, gender) in one split.
  std::vector<std::array<std::size_t, 2>> dominant_counts(Split s) const;

  // New dataset over the same vocabulary and shape.
  Dataset with_samples(std::vector<Sample> samples) const;
  // Copy with the gender tag removed from every sample of split `s`.
  Dataset without_gender(Split s) const;

 private:
  std::vector<std::string> categories_;
  std::size_t layers_ = 0;
  std::size_t dims_ = 0;
  std::vector<Sample> samples_;
  EffectiveCounts counts_;
};

EffectiveCounts compute_counts(const Dataset& ds);

// Minority:majority = 1:ratio per dominant category; `majority` names the
// majority gender of each category.
struct RatioSpec {
  int ratio = 1;
  std::vector<Gender> majority;
};

// Majority genders of the eight MSP-PODCAST categories in canonical order
// angry, sad, happy, surprise, fear, disgust, contempt, neutral.
RatioSpec msp_podcast_directions(int ratio);
// Alternating M/F directions for synthetic data with `categories` classes.
RatioSpec alternating_directions(int ratio, std::size_t categories);

// ---- file formats --------------------------------------------------------

// Manifest CSV header: id,gender,split,label_<cat1>,...,label_<catC>.
// Feature file: "EMOD", u32 version=1, u32 N, u32 L, u32 D, N*L*D float32 LE.
Dataset load_manifest(const std::filesystem::path& manifest,
                      const std::filesystem::path& features);
void save_manifest(const Dataset& ds, const std::filesystem::path& manifest,
                   const std::filesystem::path& features);
std::string manifest_csv(const Dataset& ds);
std::vector<std::uint8_t> feature_bytes(const Dataset& ds);

// ---- transforms ----------------------------------------------------------

// Keeps samples whose largest label entry strictly exceeds 0.5.
Dataset dominant_filter(const Dataset& ds);

// Subsamples train and dev splits so that every dominant category has
// majority:minority as close to ratio:1 as possible; test is copied verbatim.
Dataset amplify_bias(const Dataset& ds, const RatioSpec& spec, std::uint64_t seed);

// Subsamples the larger gender of each train category to the smaller one.
Dataset downsample_balance(const Dataset& ds, std::uint64_t seed);

enum class ReweightMode {
  // w(g, c) = N_g N_c / (N N_{g,c}) over dominant categories.
  GenderCategory,
  // w(g) = N / (2 N_g).
  GenderOnly,
};

// One weight per sample of `ds`; dev and test samples get 1.
std::vector<double> compute_reweights(const Dataset& ds,
                                      ReweightMode mode = ReweightMode::GenderCategory);

// ---- synthetic data ------------------------------------------------------

struct SynthParams {
  std::size_t n = 4000;
  std::size_t classes = 6;
  std::size_t dims = 32;
  std::size_t layers = 3;
  RatioSpec spec{1, {}};  // empty majority -> alternating_directions
  // 0: features carry no gender information; the gender offset grows
  // linearly up to `gender_scale` at 1.
  double bias_strength = 0.8;
  // Std-dev of the jitter applied to the label mixture that drives the
  // emotion part of the features.
  double label_noise = 0.0;
  // Distance between class means relative to unit feature noise.
  double emotion_scale = 1.6;
  // Gender offset at bias_strength = 1.
  double gender_scale = 1.0;
  // Class prior. When empty, categories with a male majority get weight
  // `male_majority_weight` and the others weight 1, so the gender groups
  // differ in size as in large speech corpora.
  std::vector<double> class_prior;
  double male_majority_weight = 3.0;
};

Dataset synth_generate(const SynthParams& params, std::uint64_t seed);

}  // namespace debias
