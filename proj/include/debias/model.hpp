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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "debias/autograd.hpp"
#include "debias/dataset.hpp"

namespace debias {

using ad::Tensor;
using ad::Value;

// Stacks the feature blocks of `rows` into a B x (L*D) tensor.
Tensor feature_batch(const Dataset& ds, std::span<const std::size_t> rows);
// B x C tensor of distributional labels.
Tensor label_batch(const Dataset& ds, std::span<const std::size_t> rows);

struct Linear {
  Value weight;  // in x out
  Value bias;    // 1 x out

  static Linear init(std::size_t in, std::size_t out, std::mt19937_64& rng);
  Value operator()(const Value& x) const { return ad::affine(x, weight, bias); }
  std::size_t in() const { return weight.rows(); }
  std::size_t out() const { return weight.cols(); }
};

struct ModelDims {
  std::size_t layers = 1;
  std::size_t dims = 1;
  std::size_t classes = 2;
  std::size_t hidden = 256;
  std::size_t adv_hidden = 256;
  std::size_t adv_count = 0;  // 0: no adversary stack
  std::size_t intrinsic = 128;
  std::size_t bias = 128;
};

// Softmax-weighted sum of layers, then a two-layer head.
struct EmotionHead {
  Value layer_logits;  // 1 x L
  Linear hidden;       // D -> H
  Linear output;       // H -> C

  struct Output {
    Value aggregated;  // B x D
    Value embedding;   // B x H, relu(hidden(aggregated))
    Value logits;      // B x C
    Value probs;       // B x C
  };

  static EmotionHead init(const ModelDims& d, std::mt19937_64& rng);
  std::size_t layers() const { return layer_logits.cols(); }
  std::size_t dims() const { return hidden.in(); }

  // `features` is B x (L*D), layer-major.
  Value aggregate(const Value& features) const;
  Output forward(const Value& features) const;
  std::vector<Value> parameters() const;
};

// What the adversaries read: the layer-aggregated features (D wide) or the
// emotion head's hidden embedding (H wide).
enum class AdversaryInput { Aggregated, Embedding };

// k gender adversaries reading one representation through a shared
// gradient-reversal node.
struct AdversaryStack {
  std::vector<Linear> encoders;  // in -> H_adv, followed by relu
  std::vector<Linear> heads;     // H_adv -> 1
  AdversaryInput input = AdversaryInput::Aggregated;

  struct Output {
    std::vector<Value> logits;   // k of B x 1
    std::vector<Value> hiddens;  // k of B x H_adv
  };

  static AdversaryStack init(std::size_t k, std::size_t in, std::size_t hidden,
                             std::mt19937_64& rng,
                             AdversaryInput input = AdversaryInput::Aggregated);
  std::size_t size() const { return encoders.size(); }
  Output forward(const Value& representation, double lambda_adv) const;
  // Encoder outputs on a detached copy of the input: gradients reach only
  // the encoder parameters.
  std::vector<Value> hiddens_detached(const Value& representation) const;
  std::vector<Value> parameters() const;
};

enum class DetectorTarget { Gender, HammingAcc };

struct DetectorHead {
  Linear linear;  // D -> 1
  DetectorTarget target = DetectorTarget::Gender;

  static DetectorHead init(std::size_t in, DetectorTarget target, std::mt19937_64& rng);
  // Logits for a batch of aggregated features; the input is detached.
  Value forward(const Value& aggregated) const;
  std::vector<Value> parameters() const;
};

struct DualEncoder {
  Linear intrinsic;      // D -> H_i
  Linear bias;           // D -> H_b
  Linear debiased_head;  // H_i + H_b -> C
  Linear biased_head;    // H_i + H_b -> C

  struct Features {
    Value intrinsic;  // B x H_i
    Value bias;       // B x H_b
  };
  struct Output {
    Value debiased_probs;
    Value biased_probs;
  };

  static DualEncoder init(const ModelDims& d, std::mt19937_64& rng);
  Features encode(const Value& aggregated) const;
  // Debiased head sees [intrinsic, detach(bias)], biased head sees
  // [detach(intrinsic), bias]. With `permutation`, bias features are
  // gathered from those rows before concatenation.
  Output heads(const Features& f, std::span<const std::size_t> permutation = {}) const;
  std::vector<Value> parameters() const;
};

struct ClassCenters {
  Tensor centers;  // C x H
  double omega = 0.3;
};

// Everything one training run owns.
struct ModelBundle {
  std::vector<std::string> categories;
  ModelDims dims;
  EmotionHead head;
  std::optional<EmotionHead> biased;
  std::optional<AdversaryStack> adversary;
  std::optional<DetectorHead> detector;
  std::optional<DualEncoder> dual;
  std::optional<ClassCenters> centers;

  std::vector<Value> parameters() const;
  // Probabilities of the model that is evaluated: the dual encoder's
  // debiased head when present, the emotion head otherwise.
  Value predict(const Value& features) const;
  Tensor predict(const Dataset& ds, std::span<const std::size_t> rows) const;
  // Deep copy with fresh parameter leaves.
  ModelBundle clone() const;
};

// ---- checkpoints -----------------------------------------------------------

// "EMOC", u32 version, category list, shape header, float32 parameters in
// declaration order, then class centers if present.
std::vector<std::uint8_t> checkpoint_bytes(const ModelBundle& m);
ModelBundle load_checkpoint_bytes(std::span<const std::uint8_t> bytes);
void save_checkpoint(const ModelBundle& m, const std::filesystem::path& path);
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace debias
