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

// Training loops for ERM and the debiasing strategies.

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "debias/dataset.hpp"
#include "debias/losses.hpp"
#include "debias/metrics.hpp"
#include "debias/model.hpp"

namespace debias {

enum class MethodKind {
  ERM,
  ADV,
  MADV,
  GR,
  DS,
  RW,
  BLIND_PLUS_D,
  GDRO,
  GADRO,
  BLIND_MINUS_D,
  LFF,
  LVR,
  SIH,
  DISENT,
};

// Report order.
inline constexpr std::array<MethodKind, 14> kAllMethods = {
    MethodKind::ERM,   MethodKind::ADV,          MethodKind::MADV, MethodKind::GR,
    MethodKind::DS,    MethodKind::RW,           MethodKind::BLIND_PLUS_D, MethodKind::GDRO,
    MethodKind::GADRO, MethodKind::BLIND_MINUS_D, MethodKind::LFF, MethodKind::LVR,
    MethodKind::SIH,   MethodKind::DISENT,
};

// "ERM", "ADV", ..., "BLIND+d", "BLIND-d", "LfF", "SiH", "DisEnt".
std::string_view method_name(MethodKind k);
// Case-insensitive; accepts the display names and the enum spellings.
MethodKind parse_method(std::string_view s);
// Methods that read the gender of training samples.
bool uses_bias_supervision(MethodKind k);

struct Hyperparams {
  double lambda_adv = 3.2;
  AdversaryInput adversary_input = AdversaryInput::Embedding;
  double lambda_diff = 0.2;
  std::size_t k = 3;  // adversaries for MADV
  double lambda_gr = 4.0;
  double tau = 0.05;
  double gamma = 0.7;
  double lambda_b = 1.0;
  double lambda_gd = 4.0;
  double q = 0.7;
  double alpha = 0.7;  // EMA factor
  double r = 0.7;
  double lambda_lvr = 0.1;
  double omega = 0.3;
  bool center_loss = true;  // LVR auxiliary classification term
  double beta = 0.999;      // class balance
  // LfF and DisEnt: weight the debiased loss by relative difficulty.
  bool difficulty_weights = true;
  // DisEnt: feature swapping, enabled after this fraction of all steps.
  bool swap = true;
  double swap_start = 0.1;
  ReweightMode reweight = ReweightMode::GenderCategory;
};

struct MethodSpec {
  MethodKind kind = MethodKind::ERM;
  Hyperparams hp;
};

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-2;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  std::size_t hidden = 256;
  std::size_t adv_hidden = 256;
  std::size_t intrinsic = 128;
  std::size_t bias = 128;
};

// Every read of a training-sample gender goes through this guard. When armed
// any read raises AccessError.
class GenderGuard {
 public:
  explicit GenderGuard(bool armed = false) : armed_(armed) {}
  GenderGuard(const GenderGuard& o) : armed_(o.armed_), reads_(o.reads_.load()) {}

  Gender read(const Sample& s) const;
  bool armed() const { return armed_; }
  std::size_t reads() const { return reads_.load(); }

 private:
  bool armed_;
  mutable std::atomic<std::size_t> reads_{0};
};

class AdamW {
 public:
  AdamW(std::vector<Value> params, double lr, double weight_decay, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8);
  void zero_grad();
  void step();
  std::size_t steps() const { return t_; }

 private:
  std::vector<Value> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  double lr_, wd_, b1_, b2_, eps_;
  std::size_t t_ = 0;
};

struct Batch {
  std::vector<std::size_t> rows;  // dataset indices
  Tensor features;                // B x (L*D)
  Tensor labels;                  // B x C
  std::vector<Gender> genders;    // empty unless the method is bias-supervised
  Tensor sample_weights;          // B x 1, empty for all-ones
  std::vector<std::size_t> permutation;  // DisEnt feature swap
};

// Named parts of one composite objective. `total` is what is
// back-propagated; the other entries are 1x1 terms or left invalid.
struct LossTerms {
  Value total;
  Value task;       // main classification loss
  Value auxiliary;  // adversary / detector / biased branch / regularizer
  Value diff;
};

// One method's model, optimizer and per-run state over a training set that
// has already been balanced or reweighted as the method requires.
class Trainer {
 public:
  Trainer(MethodSpec method, TrainConfig config, const Dataset& ds,
          std::vector<double> sample_weights, const GenderGuard& guard);

  const MethodSpec& method() const { return method_; }
  ModelBundle& model() { return model_; }
  const ModelBundle& model() const { return model_; }
  const ClassBalanceWeights& class_weights() const { return class_weights_; }

  Batch make_batch(std::span<const std::size_t> rows);
  // Builds the composite loss. Per-run state (EMA losses, class centers) is
  // advanced only when `commit` is set.
  LossTerms losses(const Batch& b, bool commit);
  // Zero grads, backward, optimizer step; returns the total loss.
  double step(const Batch& b);
  // Checks the gradients `step` would apply against central differences.
  double gradient_check(const Batch& b, double eps = 1e-5);

  // Total number of optimizer steps the run is planned for.
  void set_planned_steps(std::size_t n) { planned_steps_ = n; }
  std::size_t steps_taken() const { return optimizer_.steps(); }

 private:
  LossTerms erm_losses(const Batch& b);
  LossTerms adversarial_losses(const Batch& b);
  LossTerms gr_losses(const Batch& b);
  LossTerms blind_losses(const Batch& b);
  LossTerms dro_losses(const Batch& b);
  LossTerms biased_pair_losses(const Batch& b, bool commit);
  LossTerms disent_losses(const Batch& b, bool commit);
  LossTerms lvr_losses(const Batch& b, bool commit);
  Tensor difficulty_weights(const Batch& b, const Value& ce_biased, const Value& ce_debiased,
                            bool commit);
  bool swapping() const;

  MethodSpec method_;
  TrainConfig config_;
  const Dataset& ds_;
  std::vector<double> sample_weights_;
  const GenderGuard& guard_;
  ClassBalanceWeights class_weights_;
  ModelBundle model_;
  AdamW optimizer_;
  std::mt19937_64 rng_;
  std::optional<EmaLossTracker> ema_;
  std::array<double, 2> group_sizes_{0.0, 0.0};
  std::size_t planned_steps_ = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;
  double dev_acc = 0.0;
  // NaN when the dev split lacks gender tags for either gender.
  double dev_tpr_gap = 0.0;
  double dev_fpr_gap = 0.0;
  double dev_f1_gap = 0.0;
  double dev_dp_gap = 0.0;
};

struct TrainResult {
  ModelBundle model;  // snapshot with the best dev macro-F1
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  std::size_t gender_reads = 0;
};

// Balances (DS) or reweights (RW) as the method requires, trains with early
// stopping on dev macro-F1 and returns the best snapshot. Without an explicit
// guard one is armed for every method that is not bias-supervised.
TrainResult train(const MethodSpec& method, const TrainConfig& config, const Dataset& ds,
                  const GenderGuard* guard = nullptr);

std::string training_log_csv(std::span<const EpochLog> log);

// Genders of the rows, for evaluation splits.
std::vector<Gender> split_genders(const Dataset& ds, std::span<const std::size_t> rows);
// Metrics of `model` on split `s`.
MetricReport evaluate_split(const ModelBundle& model, const Dataset& ds, Split s);

}  // namespace debias
