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

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "debias/error.hpp"
#include "debias/log.hpp"

namespace debias {

namespace {

constexpr double kLabelSumTolerance = 1e-6;
constexpr std::uint32_t kFeatureVersion = 1;
constexpr char kFeatureMagic[4] = {'E', 'M', 'O', 'D'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void validate_label(const Sample& s, std::size_t categories) {
  if (s.label.size() != categories) {
    throw ShapeError("sample " + s.id + ": label has " + std::to_string(s.label.size()) +
                     " entries, expected " + std::to_string(categories));
  }
  double total = 0.0;
  for (double v : s.label) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("sample " + s.id + ": label entries must be finite and >= 0");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > kLabelSumTolerance) {
    std::ostringstream msg;
    msg << "sample " << s.id << ": label sums to " << total << ", expected 1";
    throw ValidationError(msg.str());
  }
}

// Picks `keep` of `pool` uniformly without replacement; result keeps the
// original relative order.
std::vector<std::size_t> subsample(std::vector<std::size_t> pool, std::size_t keep,
                                   std::mt19937_64& rng) {
  if (keep >= pool.size()) return pool;
  std::vector<std::size_t> shuffled = pool;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  shuffled.resize(keep);
  std::sort(shuffled.begin(), shuffled.end());
  return shuffled;
}

// Groups sample indices of one split by (dominant category, gender).
std::vector<std::array<std::vector<std::size_t>, 2>> group_indices(const Dataset& ds, Split s) {
  std::vector<std::array<std::vector<std::size_t>, 2>> groups(ds.num_categories());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample& smp = ds[i];
    if (smp.split != s) continue;
    if (!smp.gender) {
      throw ConfigError("sample " + smp.id + " has no gender tag; resampling needs one");
    }
    groups[smp.dominant()][static_cast<std::size_t>(*smp.gender)].push_back(i);
  }
  return groups;
}

Dataset select(const Dataset& ds, std::vector<std::size_t> keep) {
  std::sort(keep.begin(), keep.end());
  std::vector<Sample> out;
  out.reserve(keep.size());
  for (auto i : keep) out.push_back(ds[i]);
  return ds.with_samples(std::move(out));
}

// Largest-remainder apportionment of `total` over `weights`.
std::vector<std::size_t> apportion(std::span<const double> weights, std::size_t total) {
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = total * weights[i] / wsum;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[i];
    rem.emplace_back(exact - out[i], i);
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) out[rem[k % rem.size()].second]++;
  return out;
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::F ? "F" : "M"; }

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

Gender parse_gender(std::string_view s) {
  if (s == "F") return Gender::F;
  if (s == "M") return Gender::M;
  throw ValidationError("gender must be F or M, got '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  throw ValidationError("split must be train, dev or test, got '" + std::string(s) + "'");
}

std::size_t Sample::dominant() const {
  return static_cast<std::size_t>(std::max_element(label.begin(), label.end()) - label.begin());
}

double Sample::dominant_mass() const { return *std::max_element(label.begin(), label.end()); }

double EffectiveCounts::category_total(std::size_t category, Split s) const {
  return at(category, Gender::F, s) + at(category, Gender::M, s) + at(category, std::nullopt, s);
}

Dataset::Dataset(std::vector<std::string> categories, std::size_t layers, std::size_t dims,
                 std::vector<Sample> samples)
    : categories_(std::move(categories)), layers_(layers), dims_(dims),
      samples_(std::move(samples)) {
  if (categories_.size() < 2) throw ValidationError("need at least 2 emotion categories");
  if (layers_ < 1 || dims_ < 1) throw ShapeError("feature blocks need L >= 1 and D >= 1");
  std::unordered_set<std::string> ids;
  for (const auto& s : samples_) {
    if (!ids.insert(s.id).second) throw ValidationError("duplicate sample id " + s.id);
    if (s.features.size() != layers_ * dims_) {
      throw ShapeError("sample " + s.id + ": feature block has " +
                       std::to_string(s.features.size()) + " values, expected " +
                       std::to_string(layers_ * dims_));
    }
    for (float v : s.features) {
      if (!std::isfinite(v)) throw ValidationError("sample " + s.id + ": non-finite feature");
    }
    validate_label(s, categories_.size());
  }
  counts_ = compute_counts(*this);
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples_.size(); ++i)
    if (samples_[i].split == s) out.push_back(i);
  return out;
}

std::size_t Dataset::count(Split s) const {
  return static_cast<std::size_t>(std::count_if(
      samples_.begin(), samples_.end(), [s](const Sample& x) { return x.split == s; }));
}

bool Dataset::has_gender(Split s) const {
  return std::all_of(samples_.begin(), samples_.end(),
                     [s](const Sample& x) { return x.split != s || x.gender.has_value(); });
}

std::vector<std::array<std::size_t, 2>> Dataset::dominant_counts(Split s) const {
  std::vector<std::array<std::size_t, 2>> out(categories_.size(), {0, 0});
  for (const auto& x : samples_) {
    if (x.split != s || !x.gender) continue;
    out[x.dominant()][static_cast<std::size_t>(*x.gender)]++;
  }
  return out;
}

Dataset Dataset::with_samples(std::vector<Sample> samples) const {
  return Dataset(categories_, layers_, dims_, std::move(samples));
}

Dataset Dataset::without_gender(Split s) const {
  std::vector<Sample> out = samples_;
  for (auto& x : out)
    if (x.split == s) x.gender.reset();
  return with_samples(std::move(out));
}

EffectiveCounts compute_counts(const Dataset& ds) {
  EffectiveCounts c(ds.num_categories());
  for (const auto& s : ds.samples())
    for (std::size_t j = 0; j < s.label.size(); ++j) c.at(j, s.gender, s.split) += s.label[j];
  return c;
}

RatioSpec msp_podcast_directions(int ratio) {
  using enum Gender;
  // angry, sad, happy, surprise, fear, disgust, contempt, neutral
  return RatioSpec{ratio, {M, F, M, F, F, M, F, M}};
}

RatioSpec alternating_directions(int ratio, std::size_t categories) {
  RatioSpec spec{ratio, {}};
  for (std::size_t c = 0; c < categories; ++c) spec.majority.push_back(c % 2 == 0 ? Gender::M : Gender::F);
  return spec;
}

// ---- file formats --------------------------------------------------------

Dataset load_manifest(const std::filesystem::path& manifest,
                      const std::filesystem::path& features) {
  std::ifstream in(manifest);
  if (!in) throw ValidationError("cannot open manifest " + manifest.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty manifest", 1);
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = split_csv(trim(line));
  if (header.size() < 5 || trim(header[0]) != "id" || trim(header[1]) != "gender" ||
      trim(header[2]) != "split") {
    throw ParseError("header must be id,gender,split,label_<cat>,...", 1);
  }
  std::vector<std::string> categories;
  for (std::size_t k = 3; k < header.size(); ++k) {
    const auto col = trim(header[k]);
    if (!col.starts_with("label_") || col.size() == 6) {
      throw ParseError("label column '" + std::string(col) + "' must be label_<category>", 1);
    }
    categories.emplace_back(col.substr(6));
  }
  const std::size_t C = categories.size();

  std::vector<Sample> samples;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto fields = split_csv(row);
    if (fields.size() != C + 3) {
      throw ParseError("expected " + std::to_string(C + 3) + " fields, got " +
                       std::to_string(fields.size()),
                       lineno);
    }
    Sample s;
    s.id = std::string(trim(fields[0]));
    if (s.id.empty()) throw ParseError("empty id", lineno);
    try {
      const auto g = trim(fields[1]);
      if (!g.empty()) s.gender = parse_gender(g);
      s.split = parse_split(trim(fields[2]));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
    s.label.resize(C);
    for (std::size_t j = 0; j < C; ++j) {
      const auto f = trim(fields[3 + j]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError("bad label value '" + std::string(f) + "'", lineno);
      }
      s.label[j] = v;
    }
    validate_label(s, C);
    samples.push_back(std::move(s));
  }

  const auto bytes = read_file(features);
  if (bytes.size() < 20 || !std::equal(kFeatureMagic, kFeatureMagic + 4, bytes.begin())) {
    throw ValidationError("feature file " + features.string() + ": bad magic");
  }
  const std::uint32_t version = get_u32(&bytes[4]);
  if (version != kFeatureVersion) {
    throw ValidationError("feature file: unsupported version " + std::to_string(version));
  }
  const std::uint32_t N = get_u32(&bytes[8]);
  const std::uint32_t L = get_u32(&bytes[12]);
  const std::uint32_t D = get_u32(&bytes[16]);
  if (N != samples.size()) {
    throw ShapeError("manifest has " + std::to_string(samples.size()) +
                     " rows but feature file has N=" + std::to_string(N));
  }
  const std::size_t block = static_cast<std::size_t>(L) * D;
  if (bytes.size() != 20 + static_cast<std::size_t>(N) * block * 4) {
    throw ShapeError("feature file size does not match N*L*D");
  }
  const std::uint8_t* p = bytes.data() + 20;
  for (auto& s : samples) {
    s.features.resize(block);
    for (auto& v : s.features) {
      v = std::bit_cast<float>(get_u32(p));
      p += 4;
    }
  }
  return Dataset(std::move(categories), L, D, std::move(samples));
}

std::string manifest_csv(const Dataset& ds) {
  std::ostringstream out;
  out << "id,gender,split";
  for (const auto& c : ds.categories()) out << ",label_" << c;
  out << '\n';
  out << std::setprecision(17);
  for (const auto& s : ds.samples()) {
    out << s.id << ',' << (s.gender ? to_string(*s.gender) : "") << ',' << to_string(s.split);
    for (double v : s.label) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

std::vector<std::uint8_t> feature_bytes(const Dataset& ds) {
  std::vector<std::uint8_t> out(kFeatureMagic, kFeatureMagic + 4);
  put_u32(out, kFeatureVersion);
  put_u32(out, static_cast<std::uint32_t>(ds.size()));
  put_u32(out, static_cast<std::uint32_t>(ds.layers()));
  put_u32(out, static_cast<std::uint32_t>(ds.dims()));
  out.reserve(out.size() + ds.size() * ds.layers() * ds.dims() * 4);
  for (const auto& s : ds.samples())
    for (float v : s.features) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

void save_manifest(const Dataset& ds, const std::filesystem::path& manifest,
                   const std::filesystem::path& features) {
  {
    std::ofstream out(manifest, std::ios::binary);
    if (!out) throw Error("cannot write " + manifest.string());
    out << manifest_csv(ds);
  }
  const auto bytes = feature_bytes(ds);
  std::ofstream out(features, std::ios::binary);
  if (!out) throw Error("cannot write " + features.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// ---- transforms ----------------------------------------------------------

Dataset dominant_filter(const Dataset& ds) {
  std::vector<Sample> out;
  for (const auto& s : ds.samples())
    if (s.dominant_mass() > 0.5) out.push_back(s);
  return ds.with_samples(std::move(out));
}

Dataset amplify_bias(const Dataset& ds, const RatioSpec& spec, std::uint64_t seed) {
  if (spec.ratio < 1) throw ConfigError("ratio must be a positive integer");
  if (spec.majority.size() != ds.num_categories()) {
    throw ConfigError("ratio spec names " + std::to_string(spec.majority.size()) +
                      " directions for " + std::to_string(ds.num_categories()) + " categories");
  }
  std::mt19937_64 rng(seed);
  const auto r = static_cast<std::size_t>(spec.ratio);
  std::vector<std::size_t> keep = ds.indices(Split::Test);
  for (Split split : {Split::Train, Split::Dev}) {
    const auto groups = group_indices(ds, split);
    for (std::size_t c = 0; c < groups.size(); ++c) {
      const auto maj = static_cast<std::size_t>(spec.majority[c]);
      const auto& major = groups[c][maj];
      const auto& minor = groups[c][1 - maj];
      if (major.empty() && minor.empty()) continue;
      if (major.empty()) {
        throw ConfigError("category '" + ds.categories()[c] + "' has no " +
                          std::string(to_string(spec.majority[c])) + " samples in " +
                          std::string(to_string(split)));
      }
      std::size_t n_major = major.size();
      std::size_t n_minor = std::max<std::size_t>(1, n_major / r);
      if (minor.empty()) {
        log_warning("amplify_bias: category '" + ds.categories()[c] + "' has no minority samples in " +
                    std::string(to_string(split)) + "; majority kept as is");
        n_minor = 0;
      } else if (minor.size() < n_minor) {
        n_minor = minor.size();
        n_major = std::min(major.size(), n_minor * r);
      }
      for (auto i : subsample(major, n_major, rng)) keep.push_back(i);
      for (auto i : subsample(minor, n_minor, rng)) keep.push_back(i);
    }
  }
  // Samples of train/dev without a gender cannot be placed; group_indices
  // already rejected them.
  return select(ds, std::move(keep));
}

Dataset downsample_balance(const Dataset& ds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep = ds.indices(Split::Dev);
  const auto test = ds.indices(Split::Test);
  keep.insert(keep.end(), test.begin(), test.end());
  const auto groups = group_indices(ds, Split::Train);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& f = groups[c][0];
    const auto& m = groups[c][1];
    if (f.empty() && m.empty()) continue;
    if (f.empty() || m.empty()) {
      throw ConfigError("category '" + ds.categories()[c] + "' has no " +
                        std::string(f.empty() ? "F" : "M") + " train samples to balance against");
    }
    const std::size_t n = std::min(f.size(), m.size());
    for (auto i : subsample(f, n, rng)) keep.push_back(i);
    for (auto i : subsample(m, n, rng)) keep.push_back(i);
  }
  return select(ds, std::move(keep));
}

std::vector<double> compute_reweights(const Dataset& ds, ReweightMode mode) {
  const auto counts = ds.dominant_counts(Split::Train);
  double n = 0.0;
  std::array<double, 2> n_g{0.0, 0.0};
  std::vector<double> n_c(ds.num_categories(), 0.0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t g = 0; g < 2; ++g) {
      n += static_cast<double>(counts[c][g]);
      n_g[g] += static_cast<double>(counts[c][g]);
      n_c[c] += static_cast<double>(counts[c][g]);
    }
  }
  if (n == 0.0) throw ConfigError("compute_reweights: train split is empty");
  if (!ds.has_gender(Split::Train)) {
    throw ConfigError("compute_reweights: train samples need gender tags");
  }

  std::vector<double> w(ds.size(), 1.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample& s = ds[i];
    if (s.split != Split::Train) continue;
    const auto g = static_cast<std::size_t>(*s.gender);
    if (mode == ReweightMode::GenderOnly) {
      w[i] = n / (2.0 * n_g[g]);
      continue;
    }
    const auto c = s.dominant();
    const double n_gc = static_cast<double>(counts[c][g]);
    if (n_gc == 0.0) throw Error("compute_reweights: internal error, empty occurring group");
    w[i] = (n_g[g] * n_c[c]) / (n * n_gc);
  }
  return w;
}

// ---- synthetic data ------------------------------------------------------

Dataset synth_generate(const SynthParams& p, std::uint64_t seed) {
  const std::size_t C = p.classes;
  if (C < 2) throw ConfigError("synth: need at least 2 classes");
  if (p.n < 10 * C) throw ConfigError("synth: n must be at least 10 * classes");
  if (p.dims < C) throw ConfigError("synth: dims must be at least classes");
  if (p.layers < 1) throw ConfigError("synth: layers must be >= 1");
  if (!(p.bias_strength >= 0.0 && p.bias_strength <= 1.0)) {
    throw ConfigError("synth: bias_strength must lie in [0, 1]");
  }
  if (!(p.label_noise >= 0.0)) throw ConfigError("synth: label_noise must be >= 0");
  if (p.spec.ratio < 1) throw ConfigError("synth: ratio must be a positive integer");
  RatioSpec spec = p.spec.majority.empty() ? alternating_directions(p.spec.ratio, C) : p.spec;
  if (spec.majority.size() != C) throw ConfigError("synth: ratio spec must cover every class");
  if (!(p.male_majority_weight > 0.0)) throw ConfigError("synth: male_majority_weight must be > 0");
  std::vector<double> prior = p.class_prior;
  if (prior.empty()) {
    for (std::size_t c = 0; c < C; ++c)
      prior.push_back(spec.majority[c] == Gender::M ? p.male_majority_weight : 1.0);
  }
  if (prior.size() != C || std::any_of(prior.begin(), prior.end(), [](double v) { return !(v > 0); })) {
    throw ConfigError("synth: class_prior must hold one positive weight per class");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t D = p.dims;

  // Orthonormal emotion directions plus a gender direction (orthogonal to
  // them when D > C).
  std::vector<std::vector<double>> dirs;
  for (std::size_t k = 0; k <= C; ++k) {
    std::vector<double> v(D);
    for (auto& x : v) x = normal(rng);
    for (std::size_t q = 0; q < dirs.size() && q < D; ++q) {
      if (dirs.size() >= D) break;
      const double dot = std::inner_product(v.begin(), v.end(), dirs[q].begin(), 0.0);
      for (std::size_t d = 0; d < D; ++d) v[d] -= dot * dirs[q][d];
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (auto& x : v) x /= norm;
    dirs.push_back(std::move(v));
  }
  const auto& gender_dir = dirs[C];

  const std::size_t n_train = p.n * 7 / 10;
  const std::size_t n_dev = p.n / 10;
  const std::array<std::size_t, 3> split_sizes = {n_train, n_dev, p.n - n_train - n_dev};

  struct Slot {
    Split split;
    std::size_t category;
    Gender gender;
  };
  std::vector<Slot> slots;
  for (Split split : kSplits) {
    std::vector<Slot> part;
    const auto per_class = apportion(prior, split_sizes[static_cast<std::size_t>(split)]);
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t nc = per_class[c];
      std::size_t n_major = nc - nc / 2;
      if (split != Split::Test) {
        const double r = spec.ratio;
        n_major = static_cast<std::size_t>(std::llround(nc * r / (r + 1.0)));
      }
      for (std::size_t k = 0; k < nc; ++k) {
        const Gender g = k < n_major ? spec.majority[c] : other(spec.majority[c]);
        part.push_back({split, c, g});
      }
    }
    std::shuffle(part.begin(), part.end(), rng);
    slots.insert(slots.end(), part.begin(), part.end());
  }

  const std::size_t L = p.layers;
  std::vector<double> emo_gain(L, 1.0), gender_gain(L, 1.0);
  for (std::size_t l = 0; L > 1 && l < L; ++l) {
    // Early layers carry more speaker information, late layers more emotion.
    const double t = static_cast<double>(l) / static_cast<double>(L - 1);
    emo_gain[l] = 0.7 + 0.6 * t;
    gender_gain[l] = 1.3 - 0.6 * t;
  }

  std::vector<Sample> samples;
  samples.reserve(slots.size());
  std::vector<double> mix(C), emotion(D);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot& slot = slots[i];
    Sample s;
    {
      std::ostringstream id;
      id << "syn" << std::setw(6) << std::setfill('0') << i;
      s.id = id.str();
    }
    s.split = slot.split;
    s.gender = slot.gender;

    s.label.assign(C, 0.0);
    const double dom = 0.6 + 0.3 * unif(rng);
    double rest = 0.0;
    for (std::size_t j = 0; j < C; ++j) {
      if (j == slot.category) continue;
      s.label[j] = unif(rng);
      rest += s.label[j];
    }
    for (std::size_t j = 0; j < C; ++j) {
      s.label[j] = j == slot.category ? dom : (1.0 - dom) * s.label[j] / rest;
    }

    for (std::size_t j = 0; j < C; ++j) mix[j] = s.label[j] + p.label_noise * normal(rng);
    std::fill(emotion.begin(), emotion.end(), 0.0);
    for (std::size_t j = 0; j < C; ++j)
      for (std::size_t d = 0; d < D; ++d) emotion[d] += p.emotion_scale * mix[j] * dirs[j][d];
    const double gsign = slot.gender == Gender::F ? 1.0 : -1.0;
    const double goff = gsign * p.bias_strength * p.gender_scale;

    s.features.resize(L * D);
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t d = 0; d < D; ++d) {
        const double v =
            emo_gain[l] * emotion[d] + gender_gain[l] * goff * gender_dir[d] + normal(rng);
        s.features[l * D + d] = static_cast<float>(v);
      }
    }
    samples.push_back(std::move(s));
  }

  std::vector<std::string> names;
  for (std::size_t c = 0; c < C; ++c) names.push_back("emo" + std::to_string(c));
  return Dataset(std::move(names), L, D, std::move(samples));
}

}  // namespace debias
