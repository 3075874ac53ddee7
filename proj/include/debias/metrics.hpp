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

// Multi-label accuracy and gender-fairness metrics on 1/C-binarized
// predictions.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "debias/autograd.hpp"
#include "debias/dataset.hpp"

namespace debias {

class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint8_t operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c]; }
  std::uint8_t& operator()(std::size_t r, std::size_t c) { return bits_[r * cols_ + c]; }

  friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Entry j is 1 iff p_j > 1/C.
std::vector<std::uint8_t> binarize(std::span<const double> probs);
BinaryMatrix binarize(const ad::Tensor& probs);

double hamming_acc(const BinaryMatrix& pred, const BinaryMatrix& truth);
// Per-class F1, 0 for a class with neither true nor predicted positives.
std::vector<double> per_class_f1(const BinaryMatrix& pred, const BinaryMatrix& truth);
double macro_f1(const BinaryMatrix& pred, const BinaryMatrix& truth);

struct EoGaps {
  double tpr_gap = 0.0;
  double fpr_gap = 0.0;
  double f1_gap = 0.0;
  // |rate_F - rate_M| per class; NaN where the class was excluded.
  std::vector<double> tpr_per_class;
  std::vector<double> fpr_per_class;
  std::vector<double> f1_per_class;
};

// RMS over classes of the between-gender TPR, FPR and F1 differences. A class
// whose rate has an empty denominator for either gender is left out.
EoGaps eo_gaps(const BinaryMatrix& pred, const BinaryMatrix& truth,
               std::span<const Gender> genders);

struct DpGap {
  double gap = 0.0;
  // max over genders of |P(pred=1 | g) - P(pred=1)| per class.
  std::vector<double> per_class;
};
DpGap dp_gap_detail(const BinaryMatrix& pred, std::span<const Gender> genders);
double dp_gap(const BinaryMatrix& pred, std::span<const Gender> genders);

struct MetricReport {
  double f1 = 0.0;
  double acc = 0.0;
  double tpr_gap = 0.0;
  double fpr_gap = 0.0;
  double f1_gap = 0.0;
  double dp_gap = 0.0;
  std::vector<double> f1_per_class;
  std::vector<double> tpr_gap_per_class;
  std::vector<double> fpr_gap_per_class;
  std::vector<double> f1_gap_per_class;
  std::vector<double> dp_gap_per_class;
};

// `probs` and `labels` are N x C; genders one per row.
MetricReport evaluate(const ad::Tensor& probs, const ad::Tensor& labels,
                      std::span<const Gender> genders);

}  // namespace debias
