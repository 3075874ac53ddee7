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

#include "debias/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "debias/error.hpp"

namespace debias {

Tensor feature_batch(const Dataset& ds, std::span<const std::size_t> rows) {
  const std::size_t width = ds.layers() * ds.dims();
  Tensor out(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = ds[rows[i]].features;
    for (std::size_t k = 0; k < width; ++k) out(i, k) = f[k];
  }
  return out;
}

Tensor label_batch(const Dataset& ds, std::span<const std::size_t> rows) {
  const std::size_t C = ds.num_categories();
  Tensor out(rows.size(), C);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < C; ++j) out(i, j) = ds[rows[i]].label[j];
  return out;
}

Linear Linear::init(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor w(in, out), b(1, out);
  for (auto& v : w.values()) v = u(rng);
  for (auto& v : b.values()) v = u(rng);
  return Linear{Value::parameter(std::move(w)), Value::parameter(std::move(b))};
}

EmotionHead EmotionHead::init(const ModelDims& d, std::mt19937_64& rng) {
  EmotionHead h;
  h.layer_logits = Value::parameter(Tensor(1, d.layers, 0.0));
  h.hidden = Linear::init(d.dims, d.hidden, rng);
  h.output = Linear::init(d.hidden, d.classes, rng);
  return h;
}

Value EmotionHead::aggregate(const Value& features) const {
  const std::size_t L = layers();
  const std::size_t D = dims();
  if (features.cols() != L * D) {
    throw ShapeError("feature batch has " + std::to_string(features.cols()) +
                     " columns, head expects L*D = " + std::to_string(L * D));
  }
  if (L == 1) return features;
  const Value w = ad::softmax_rows(layer_logits);
  Value acc;
  for (std::size_t l = 0; l < L; ++l) {
    Value term = ad::mul(ad::slice_cols(features, l * D, (l + 1) * D), ad::slice_cols(w, l, l + 1));
    acc = l == 0 ? term : ad::add(acc, term);
  }
  return acc;
}

EmotionHead::Output EmotionHead::forward(const Value& features) const {
  Output o;
  o.aggregated = aggregate(features);
  o.embedding = ad::relu(hidden(o.aggregated));
  o.logits = output(o.embedding);
  o.probs = ad::softmax_rows(o.logits);
  return o;
}

std::vector<Value> EmotionHead::parameters() const {
  return {layer_logits, hidden.weight, hidden.bias, output.weight, output.bias};
}

AdversaryStack AdversaryStack::init(std::size_t k, std::size_t in, std::size_t hidden,
                                    std::mt19937_64& rng, AdversaryInput input) {
  AdversaryStack s;
  s.input = input;
  for (std::size_t i = 0; i < k; ++i) {
    s.encoders.push_back(Linear::init(in, hidden, rng));
    s.heads.push_back(Linear::init(hidden, 1, rng));
  }
  return s;
}

AdversaryStack::Output AdversaryStack::forward(const Value& representation,
                                               double lambda_adv) const {
  const Value reversed = ad::grad_reverse(representation, lambda_adv);
  Output o;
  for (std::size_t i = 0; i < size(); ++i) {
    Value h = ad::relu(encoders[i](reversed));
    o.logits.push_back(heads[i](h));
    o.hiddens.push_back(std::move(h));
  }
  return o;
}

std::vector<Value> AdversaryStack::hiddens_detached(const Value& representation) const {
  const Value input = ad::detach(representation);
  std::vector<Value> out;
  for (const auto& e : encoders) out.push_back(ad::relu(e(input)));
  return out;
}

std::vector<Value> AdversaryStack::parameters() const {
  std::vector<Value> out;
  for (std::size_t i = 0; i < size(); ++i) {
    out.insert(out.end(), {encoders[i].weight, encoders[i].bias, heads[i].weight, heads[i].bias});
  }
  return out;
}

DetectorHead DetectorHead::init(std::size_t in, DetectorTarget target, std::mt19937_64& rng) {
  return DetectorHead{Linear::init(in, 1, rng), target};
}

Value DetectorHead::forward(const Value& aggregated) const {
  return linear(ad::detach(aggregated));
}

std::vector<Value> DetectorHead::parameters() const { return {linear.weight, linear.bias}; }

DualEncoder DualEncoder::init(const ModelDims& d, std::mt19937_64& rng) {
  DualEncoder e;
  e.intrinsic = Linear::init(d.dims, d.intrinsic, rng);
  e.bias = Linear::init(d.dims, d.bias, rng);
  e.debiased_head = Linear::init(d.intrinsic + d.bias, d.classes, rng);
  e.biased_head = Linear::init(d.intrinsic + d.bias, d.classes, rng);
  return e;
}

DualEncoder::Features DualEncoder::encode(const Value& aggregated) const {
  return Features{ad::relu(intrinsic(aggregated)), ad::relu(bias(aggregated))};
}

DualEncoder::Output DualEncoder::heads(const Features& f,
                                       std::span<const std::size_t> permutation) const {
  const Value b = permutation.empty() ? f.bias : ad::gather_rows(f.bias, permutation);
  Output o;
  o.debiased_probs = ad::softmax_rows(debiased_head(ad::concat_cols(f.intrinsic, ad::detach(b))));
  o.biased_probs = ad::softmax_rows(biased_head(ad::concat_cols(ad::detach(f.intrinsic), b)));
  return o;
}

std::vector<Value> DualEncoder::parameters() const {
  return {intrinsic.weight,     intrinsic.bias,     bias.weight,       bias.bias,
          debiased_head.weight, debiased_head.bias, biased_head.weight, biased_head.bias};
}

std::vector<Value> ModelBundle::parameters() const {
  std::vector<Value> out = head.parameters();
  auto append = [&out](const std::vector<Value>& v) { out.insert(out.end(), v.begin(), v.end()); };
  if (biased) append(biased->parameters());
  if (adversary) append(adversary->parameters());
  if (detector) append(detector->parameters());
  if (dual) append(dual->parameters());
  return out;
}

Value ModelBundle::predict(const Value& features) const {
  if (dual) return dual->heads(dual->encode(head.aggregate(features))).debiased_probs;
  return head.forward(features).probs;
}

Tensor ModelBundle::predict(const Dataset& ds, std::span<const std::size_t> rows) const {
  constexpr std::size_t kChunk = 256;
  Tensor out(rows.size(), dims.classes);
  for (std::size_t start = 0; start < rows.size(); start += kChunk) {
    const auto part = rows.subspan(start, std::min(kChunk, rows.size() - start));
    const Tensor probs = predict(Value::constant(feature_batch(ds, part))).data();
    for (std::size_t i = 0; i < part.size(); ++i)
      for (std::size_t j = 0; j < dims.classes; ++j) out(start + i, j) = probs(i, j);
  }
  return out;
}

namespace {

Value fresh(const Value& v) { return Value::parameter(v.data()); }
Linear fresh(const Linear& l) { return Linear{fresh(l.weight), fresh(l.bias)}; }
EmotionHead fresh(const EmotionHead& h) {
  return EmotionHead{fresh(h.layer_logits), fresh(h.hidden), fresh(h.output)};
}

}  // namespace

ModelBundle ModelBundle::clone() const {
  ModelBundle m;
  m.categories = categories;
  m.dims = dims;
  m.head = fresh(head);
  if (biased) m.biased = fresh(*biased);
  if (adversary) {
    AdversaryStack s;
    s.input = adversary->input;
    for (const auto& e : adversary->encoders) s.encoders.push_back(fresh(e));
    for (const auto& h : adversary->heads) s.heads.push_back(fresh(h));
    m.adversary = std::move(s);
  }
  if (detector) m.detector = DetectorHead{fresh(detector->linear), detector->target};
  if (dual) {
    m.dual = DualEncoder{fresh(dual->intrinsic), fresh(dual->bias), fresh(dual->debiased_head),
                         fresh(dual->biased_head)};
  }
  m.centers = centers;
  return m;
}

// ---- checkpoints -----------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'E', 'M', 'O', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

enum Flags : std::uint32_t {
  kHasBiased = 1,
  kHasAdversary = 2,
  kHasDetector = 4,
  kHasDual = 8,
  kHasCenters = 16,
  kDetectorHamming = 32,
  kAdversaryOnEmbedding = 64,
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
  for (double v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  std::uint32_t u32() {
    need(4);
    const auto* p = bytes_.data() + pos_;
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void tensor(Tensor& t) {
    for (auto& v : t.values()) v = static_cast<double>(std::bit_cast<float>(u32()));
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ValidationError("checkpoint truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> checkpoint_bytes(const ModelBundle& m) {
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(m.categories.size()));
  for (const auto& c : m.categories) {
    put_u32(out, static_cast<std::uint32_t>(c.size()));
    out.insert(out.end(), c.begin(), c.end());
  }
  std::uint32_t flags = 0;
  if (m.biased) flags |= kHasBiased;
  if (m.adversary) flags |= kHasAdversary;
  if (m.detector) flags |= kHasDetector;
  if (m.detector && m.detector->target == DetectorTarget::HammingAcc) flags |= kDetectorHamming;
  if (m.adversary && m.adversary->input == AdversaryInput::Embedding) flags |= kAdversaryOnEmbedding;
  if (m.dual) flags |= kHasDual;
  if (m.centers) flags |= kHasCenters;
  const auto& d = m.dims;
  for (std::size_t v : {d.layers, d.dims, d.classes, d.hidden, d.adv_hidden,
                        m.adversary ? m.adversary->size() : std::size_t{0}, d.intrinsic, d.bias}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_u32(out, flags);
  for (const auto& p : m.parameters()) put_tensor(out, p.data());
  if (m.centers) {
    out.resize(out.size() + 8);
    const auto bits = std::bit_cast<std::uint64_t>(m.centers->omega);
    for (int i = 0; i < 8; ++i) out[out.size() - 8 + i] = static_cast<std::uint8_t>(bits >> (8 * i));
    put_tensor(out, m.centers->centers);
  }
  return out;
}

ModelBundle load_checkpoint_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(kCheckpointMagic, kCheckpointMagic + 4, bytes.begin())) {
    throw ValidationError("checkpoint: bad magic");
  }
  Reader r(bytes.subspan(4));
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw ValidationError("checkpoint: unsupported version " + std::to_string(v));
  }
  ModelBundle m;
  const auto ncat = r.u32();
  for (std::uint32_t i = 0; i < ncat; ++i) m.categories.push_back(r.str(r.u32()));
  auto& d = m.dims;
  d.layers = r.u32();
  d.dims = r.u32();
  d.classes = r.u32();
  d.hidden = r.u32();
  d.adv_hidden = r.u32();
  d.adv_count = r.u32();
  d.intrinsic = r.u32();
  d.bias = r.u32();
  const auto flags = r.u32();

  std::mt19937_64 rng(0);
  m.head = EmotionHead::init(d, rng);
  if (flags & kHasBiased) m.biased = EmotionHead::init(d, rng);
  if (flags & kHasAdversary) {
    const bool on_embedding = (flags & kAdversaryOnEmbedding) != 0;
    m.adversary = AdversaryStack::init(d.adv_count, on_embedding ? d.hidden : d.dims, d.adv_hidden, rng,
                                       on_embedding ? AdversaryInput::Embedding : AdversaryInput::Aggregated);
  }
  if (flags & kHasDetector) {
    m.detector = DetectorHead::init(
        d.dims, (flags & kDetectorHamming) ? DetectorTarget::HammingAcc : DetectorTarget::Gender, rng);
  }
  if (flags & kHasDual) m.dual = DualEncoder::init(d, rng);
  for (auto& p : m.parameters()) r.tensor(p.mutable_data());
  if (flags & kHasCenters) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(r.str(1)[0])) << (8 * i);
    ClassCenters c{Tensor(d.classes, d.hidden), std::bit_cast<double>(bits)};
    r.tensor(c.centers);
    m.centers = std::move(c);
  }
  if (!r.done()) throw ValidationError("checkpoint: trailing bytes");
  return m;
}

void save_checkpoint(const ModelBundle& m, const std::filesystem::path& path) {
  const auto bytes = checkpoint_bytes(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
  return load_checkpoint_bytes(bytes);
}

}  // namespace debias
