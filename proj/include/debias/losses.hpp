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

// Training objectives over distributional labels. Batched losses take the
// labels as a B x C tensor and predictions as a B x C Value and return
// per-sample losses (B x 1) unless stated otherwise.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "debias/autograd.hpp"
#include "debias/dataset.hpp"
#include "debias/model.hpp"

namespace debias {

// Probabilities are clamped into [kProbFloor, 1] before log or pow.
inline constexpr double kProbFloor = 1e-12;

// Per-category weights (1 - beta) / (1 - beta^n_c), renormalized to mean 1.
struct ClassBalanceWeights {
  std::vector<double> weights;
  double beta = 0.0;
  std::vector<double> effective_counts;

  static ClassBalanceWeights compute(std::span<const double> effective_counts, double beta);
  static ClassBalanceWeights uniform(std::size_t classes);
  // Train-split label mass per category.
  static ClassBalanceWeights from_dataset(const Dataset& ds, double beta);
  Tensor row() const;
};

// Per-sample exponential moving averages of the biased and debiased losses.
class EmaLossTracker {
 public:
  EmaLossTracker(std::size_t samples, double alpha)
      : alpha_(alpha), biased_(samples, 0.0), debiased_(samples, 0.0), seen_(samples, false) {}

  // First observation initializes the average.
  void update(std::size_t sample, double ce_biased, double ce_debiased);
  double biased(std::size_t sample) const { return biased_[sample]; }
  double debiased(std::size_t sample) const { return debiased_[sample]; }
  double alpha() const { return alpha_; }

 private:
  double alpha_;
  std::vector<double> biased_;
  std::vector<double> debiased_;
  std::vector<bool> seen_;
};

// sample_weight * sum_j w_j y_j (-log yhat_j). `sample_weights` is B x 1 or
// empty for all-ones.
Value ce_soft(const Tensor& y, const Value& probs, const ClassBalanceWeights& w,
              const Tensor& sample_weights = {});

// sum_j y_j (1 - yhat_j^q) / q, q in (0, 1].
Value gce_multilabel(const Tensor& y, const Value& probs, double q);

// lambda * sum over ordered pairs i != j of ||H_i^T H_j||_F^2; 1x1.
Value diff_loss(std::span<const Value> hiddens, double lambda_diff);

// ce_b / (ce_b + ce_d).
double lff_weight(double ce_biased_ema, double ce_debiased_ema);

// sum_j (1 - yhat_B_j)^r y_j (-log yhat_D_j); the biased probabilities are
// read as constants. r = 0 gives the plain unweighted cross-entropy.
Value sih_debiased_ce(const Tensor& y, const Value& probs_debiased, const Value& probs_biased,
                      double r);

// Relaxed per-gender true/false positive rates, each 1 x C. A class is valid
// for a rate when both genders have a non-empty denominator.
struct SoftRates {
  std::array<Value, 2> tpr;  // indexed by Gender
  std::array<Value, 2> fpr;
  std::vector<bool> tpr_valid;
  std::vector<bool> fpr_valid;
};
SoftRates soft_rates(const Value& probs, const Tensor& y, std::span<const Gender> genders,
                     double tau);
// sqrt(mean over valid classes of (a_j - b_j)^2); exact zero when all gaps
// vanish.
Value rms_gap(const Value& a, const Value& b, const std::vector<bool>& valid);
// lambda * (RMS TPR gap + RMS FPR gap) of the relaxed rates; 1x1. Returns 0
// with a warning when the batch misses a gender.
Value gr_penalty(const Value& probs, const Tensor& y, std::span<const Gender> genders, double tau,
                 double lambda_gr);

// c_i <- (1 - omega) (1/B) sum_l y_li h_l + omega c_i.
ClassCenters lvr_center_update(const ClassCenters& centers, const Tensor& embeddings,
                               const Tensor& y);
// B x C matrix of ||h_l - c_i||^2 with the centers held constant.
Value center_sq_distances(const ClassCenters& centers, const Value& embeddings);
// lambda * sum_i sum_l y_li ||h_l - c_i||^2; 1x1.
Value lvr_reg(const ClassCenters& centers, const Value& embeddings, const Tensor& y,
              double lambda_lvr);
// Auxiliary classification through softmax(-distance) logits; per sample.
Value lvr_center_ce(const ClassCenters& centers, const Value& embeddings, const Tensor& y,
                    const ClassBalanceWeights& w);

struct DroResult {
  Value loss;
  Gender group;
};
// Worst-group objective over per-gender mean losses (1x1 each). Adjusted adds
// lambda / sqrt(n_g). A missing group falls back to the other one.
DroResult dro_objective(const std::array<std::optional<Value>, 2>& group_losses,
                        const std::array<double, 2>& group_sizes, double lambda_gd,
                        bool adjusted);

enum class BlindVariant { WithDemographics, WithoutDemographics };

struct BlindTerms {
  Value main;      // 1x1, mean of (1 - p_true)^gamma * CE
  Value detector;  // 1x1, lambda_B * mean BCE(logit, target)
  Tensor weights;  // B x 1, the detached down-weighting factors
};
// gamma = 0 turns the weighting off.
// `detector_logits` B x 1; `targets` B x 1: gender indicator (F = 1) for the
// demographic detector, per-sample Hamming accuracy for the success detector.
BlindTerms blind_weighted_ce(const Tensor& y, const Value& probs, const Value& detector_logits,
                             const Tensor& targets, BlindVariant variant, double gamma,
                             double lambda_b, const ClassBalanceWeights& w);

}  // namespace debias
