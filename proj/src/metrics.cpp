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

#include "debias/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "debias/error.hpp"

namespace debias {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same_shape(const BinaryMatrix& a, const BinaryMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("prediction and truth matrices differ in shape");
  }
}

void require_both_genders(std::span<const Gender> genders, std::size_t rows) {
  if (genders.size() != rows) throw ShapeError("need one gender per sample");
  bool f = false, m = false;
  for (Gender g : genders) (g == Gender::F ? f : m) = true;
  if (!f || !m) throw ValidationError("fairness metrics need both genders in the split");
}

struct Confusion {
  double tp = 0, fp = 0, fn = 0, tn = 0;
};

double f1_of(const Confusion& c) {
  const double denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2 * c.tp / denom;
}

double rms(const std::vector<double>& gaps) {
  double acc = 0.0;
  std::size_t n = 0;
  for (double g : gaps) {
    if (std::isnan(g)) continue;
    acc += g * g;
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(n));
}

}  // namespace

std::vector<std::uint8_t> binarize(std::span<const double> probs) {
  const double threshold = 1.0 / static_cast<double>(probs.size());
  std::vector<std::uint8_t> out(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) out[j] = probs[j] > threshold ? 1 : 0;
  return out;
}

BinaryMatrix binarize(const ad::Tensor& probs) {
  BinaryMatrix out(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto bits = binarize(probs.row_span(r));
    for (std::size_t c = 0; c < bits.size(); ++c) out(r, c) = bits[c];
  }
  return out;
}

double hamming_acc(const BinaryMatrix& pred, const BinaryMatrix& truth) {
  require_same_shape(pred, truth);
  if (pred.rows() == 0 || pred.cols() == 0) throw ValidationError("hamming_acc of empty input");
  std::size_t agree = 0;
  for (std::size_t r = 0; r < pred.rows(); ++r)
    for (std::size_t c = 0; c < pred.cols(); ++c) agree += pred(r, c) == truth(r, c);
  return static_cast<double>(agree) / static_cast<double>(pred.rows() * pred.cols());
}

std::vector<double> per_class_f1(const BinaryMatrix& pred, const BinaryMatrix& truth) {
  require_same_shape(pred, truth);
  std::vector<double> out(pred.cols());
  for (std::size_t c = 0; c < pred.cols(); ++c) {
    Confusion k;
    for (std::size_t r = 0; r < pred.rows(); ++r) {
      const bool p = pred(r, c), t = truth(r, c);
      k.tp += p && t;
      k.fp += p && !t;
      k.fn += !p && t;
    }
    out[c] = f1_of(k);
  }
  return out;
}

double macro_f1(const BinaryMatrix& pred, const BinaryMatrix& truth) {
  const auto f1 = per_class_f1(pred, truth);
  if (f1.empty()) return 0.0;
  double acc = 0.0;
  for (double v : f1) acc += v;
  return acc / static_cast<double>(f1.size());
}

EoGaps eo_gaps(const BinaryMatrix& pred, const BinaryMatrix& truth,
               std::span<const Gender> genders) {
  require_same_shape(pred, truth);
  require_both_genders(genders, pred.rows());
  const std::size_t C = pred.cols();
  EoGaps out;
  out.tpr_per_class.assign(C, kNaN);
  out.fpr_per_class.assign(C, kNaN);
  out.f1_per_class.assign(C, kNaN);
  for (std::size_t c = 0; c < C; ++c) {
    std::array<Confusion, 2> k{};
    for (std::size_t r = 0; r < pred.rows(); ++r) {
      auto& x = k[static_cast<std::size_t>(genders[r])];
      const bool p = pred(r, c), t = truth(r, c);
      x.tp += p && t;
      x.fp += p && !t;
      x.fn += !p && t;
      x.tn += !p && !t;
    }
    const auto& f = k[0];
    const auto& m = k[1];
    if (f.tp + f.fn > 0 && m.tp + m.fn > 0) {
      out.tpr_per_class[c] = std::abs(f.tp / (f.tp + f.fn) - m.tp / (m.tp + m.fn));
    }
    if (f.fp + f.tn > 0 && m.fp + m.tn > 0) {
      out.fpr_per_class[c] = std::abs(f.fp / (f.fp + f.tn) - m.fp / (m.fp + m.tn));
    }
    if (2 * f.tp + f.fp + f.fn > 0 && 2 * m.tp + m.fp + m.fn > 0) {
      out.f1_per_class[c] = std::abs(f1_of(f) - f1_of(m));
    }
  }
  out.tpr_gap = rms(out.tpr_per_class);
  out.fpr_gap = rms(out.fpr_per_class);
  out.f1_gap = rms(out.f1_per_class);
  return out;
}

DpGap dp_gap_detail(const BinaryMatrix& pred, std::span<const Gender> genders) {
  require_both_genders(genders, pred.rows());
  const std::size_t C = pred.cols();
  std::array<double, 2> n{0, 0};
  for (Gender g : genders) n[static_cast<std::size_t>(g)] += 1;
  const double total = n[0] + n[1];
  DpGap out;
  out.per_class.assign(C, 0.0);
  double acc = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    std::array<double, 2> pos{0, 0};
    for (std::size_t r = 0; r < pred.rows(); ++r) pos[static_cast<std::size_t>(genders[r])] += pred(r, c);
    const double overall = (pos[0] + pos[1]) / total;
    double worst = 0.0;
    for (std::size_t g = 0; g < 2; ++g) {
      const double dp = pos[g] / n[g] - overall;
      worst = std::max(worst, dp * dp);
    }
    out.per_class[c] = std::sqrt(worst);
    acc += worst;
  }
  out.gap = std::sqrt(acc);
  return out;
}

double dp_gap(const BinaryMatrix& pred, std::span<const Gender> genders) {
  return dp_gap_detail(pred, genders).gap;
}

MetricReport evaluate(const ad::Tensor& probs, const ad::Tensor& labels,
                      std::span<const Gender> genders) {
  if (!probs.same_shape(labels)) throw ShapeError("evaluate: predictions and labels differ in shape");
  const BinaryMatrix pred = binarize(probs);
  const BinaryMatrix truth = binarize(labels);
  MetricReport r;
  r.acc = hamming_acc(pred, truth);
  r.f1_per_class = per_class_f1(pred, truth);
  r.f1 = macro_f1(pred, truth);
  const EoGaps eo = eo_gaps(pred, truth, genders);
  r.tpr_gap = eo.tpr_gap;
  r.fpr_gap = eo.fpr_gap;
  r.f1_gap = eo.f1_gap;
  r.tpr_gap_per_class = eo.tpr_per_class;
  r.fpr_gap_per_class = eo.fpr_per_class;
  r.f1_gap_per_class = eo.f1_per_class;
  const DpGap dp = dp_gap_detail(pred, genders);
  r.dp_gap = dp.gap;
  r.dp_gap_per_class = dp.per_class;
  return r;
}

}  // namespace debias
