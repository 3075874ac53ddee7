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

#include "debias/losses.hpp"

#include <algorithm>
#include <cmath>

#include "debias/error.hpp"
#include "debias/log.hpp"

namespace debias {

namespace {

void require_label_shape(const Tensor& y, const Value& p, const char* what) {
  if (!y.same_shape(p.data())) {
    throw ShapeError(std::string(what) + ": labels " + y.shape_str() + " vs predictions " +
                     p.data().shape_str());
  }
}

Value safe_log(const Value& p) { return ad::log(ad::clamp(p, kProbFloor, 1.0)); }

Value zero_scalar() { return Value::constant(Tensor::scalar(0.0)); }

}  // namespace

ClassBalanceWeights ClassBalanceWeights::compute(std::span<const double> n, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("class-balance beta must lie in [0, 1)");
  ClassBalanceWeights w;
  w.beta = beta;
  w.effective_counts.assign(n.begin(), n.end());
  w.weights.resize(n.size());
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n.size(); ++c) {
    if (n[c] > 0.0) {
      w.weights[c] = (1.0 - beta) / (1.0 - std::pow(beta, n[c]));
      total += w.weights[c];
      ++present;
    }
  }
  if (present == 0) return uniform(n.size());
  const double mean_w = total / static_cast<double>(present);
  // Categories without label mass never contribute; give them the mean.
  for (std::size_t c = 0; c < n.size(); ++c) w.weights[c] = n[c] > 0.0 ? w.weights[c] / mean_w : 1.0;
  return w;
}

ClassBalanceWeights ClassBalanceWeights::uniform(std::size_t classes) {
  ClassBalanceWeights w;
  w.weights.assign(classes, 1.0);
  w.effective_counts.assign(classes, 0.0);
  return w;
}

ClassBalanceWeights ClassBalanceWeights::from_dataset(const Dataset& ds, double beta) {
  std::vector<double> n(ds.num_categories());
  for (std::size_t c = 0; c < n.size(); ++c) n[c] = ds.counts().category_total(c, Split::Train);
  return compute(n, beta);
}

Tensor ClassBalanceWeights::row() const { return Tensor::row(weights); }

void EmaLossTracker::update(std::size_t i, double ce_b, double ce_d) {
  if (!seen_[i]) {
    biased_[i] = ce_b;
    debiased_[i] = ce_d;
    seen_[i] = true;
    return;
  }
  biased_[i] = alpha_ * biased_[i] + (1.0 - alpha_) * ce_b;
  debiased_[i] = alpha_ * debiased_[i] + (1.0 - alpha_) * ce_d;
}

Value ce_soft(const Tensor& y, const Value& probs, const ClassBalanceWeights& w,
              const Tensor& sample_weights) {
  require_label_shape(y, probs, "ce_soft");
  if (w.weights.size() != y.cols()) throw ShapeError("ce_soft: class weights do not match C");
  Tensor target = y;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) target(r, c) *= -w.weights[c];
  Value per_sample = ad::row_sum(ad::mul(safe_log(probs), Value::constant(std::move(target))));
  if (sample_weights.empty()) return per_sample;
  if (sample_weights.rows() != y.rows() || sample_weights.cols() != 1) {
    throw ShapeError("ce_soft: sample weights must be B x 1");
  }
  return ad::mul(per_sample, Value::constant(sample_weights));
}

Value gce_multilabel(const Tensor& y, const Value& probs, double q) {
  if (!(q > 0.0) || q > 1.0) throw ConfigError("gce_multilabel: q must lie in (0, 1]");
  require_label_shape(y, probs, "gce_multilabel");
  Tensor mass(y.rows(), 1);
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (double v : y.row_span(r)) mass(r, 0) += v;
  const Value powered = ad::pow(ad::clamp(probs, kProbFloor, 1.0), q);
  const Value weighted = ad::row_sum(ad::mul(powered, Value::constant(y)));
  return ad::scale(ad::sub(Value::constant(std::move(mass)), weighted), 1.0 / q);
}

Value diff_loss(std::span<const Value> hiddens, double lambda_diff) {
  if (hiddens.size() < 2) {
    log_warning("diff_loss: fewer than two hidden representations; returning 0");
    return zero_scalar();
  }
  Value acc;
  for (std::size_t i = 0; i < hiddens.size(); ++i) {
    for (std::size_t j = i + 1; j < hiddens.size(); ++j) {
      // ||H_i^T H_j|| = ||H_j^T H_i||, so each unordered pair counts twice.
      Value term = ad::squared_l2(ad::matmul(ad::transpose(hiddens[i]), hiddens[j]));
      acc = acc.valid() ? ad::add(acc, term) : term;
    }
  }
  return ad::scale(acc, 2.0 * lambda_diff);
}

double lff_weight(double ce_b, double ce_d) { return ce_b / (ce_b + ce_d + 1e-12); }

Value sih_debiased_ce(const Tensor& y, const Value& probs_d, const Value& probs_b, double r) {
  if (!(r >= 0.0) || r > 1.0) throw ConfigError("sih_debiased_ce: r must lie in [0, 1]");
  require_label_shape(y, probs_d, "sih_debiased_ce");
  require_label_shape(y, probs_b, "sih_debiased_ce");
  const Tensor pb = ad::detach(probs_b).data();
  Tensor target(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double rest = std::clamp(1.0 - pb[i], 0.0, 1.0);
    target[i] = -std::pow(rest, r) * y[i];
  }
  return ad::row_sum(ad::mul(safe_log(probs_d), Value::constant(std::move(target))));
}

SoftRates soft_rates(const Value& probs, const Tensor& y, std::span<const Gender> genders,
                     double tau) {
  if (!(tau > 0.0)) throw ConfigError("gr_penalty: tau must be > 0");
  require_label_shape(y, probs, "gr_penalty");
  if (genders.size() != y.rows()) throw ShapeError("gr_penalty: one gender per sample required");
  const std::size_t B = y.rows();
  const std::size_t C = y.cols();
  const double threshold = 1.0 / static_cast<double>(C);

  // counts[pos][g][c]
  std::array<std::array<std::vector<double>, 2>, 2> counts;
  for (auto& a : counts)
    for (auto& v : a) v.assign(C, 0.0);
  for (std::size_t i = 0; i < B; ++i) {
    const auto g = static_cast<std::size_t>(genders[i]);
    for (std::size_t c = 0; c < C; ++c) counts[y(i, c) > threshold ? 1 : 0][g][c] += 1.0;
  }

  const Value soft = ad::sigmoid(ad::scale(ad::add_scalar(probs, -threshold), 1.0 / tau));
  const Value ones = Value::constant(Tensor(1, B, 1.0));
  SoftRates out;
  for (int pos = 1; pos >= 0; --pos) {
    auto& rates = pos == 1 ? out.tpr : out.fpr;
    auto& valid = pos == 1 ? out.tpr_valid : out.fpr_valid;
    valid.assign(C, false);
    for (std::size_t c = 0; c < C; ++c) valid[c] = counts[pos][0][c] > 0 && counts[pos][1][c] > 0;
    for (std::size_t g = 0; g < 2; ++g) {
      Tensor mask(B, C);
      for (std::size_t i = 0; i < B; ++i) {
        if (static_cast<std::size_t>(genders[i]) != g) continue;
        for (std::size_t c = 0; c < C; ++c) {
          const bool is_pos = y(i, c) > threshold;
          if (is_pos == (pos == 1) && counts[pos][g][c] > 0) mask(i, c) = 1.0 / counts[pos][g][c];
        }
      }
      rates[g] = ad::matmul(ones, ad::mul(soft, Value::constant(std::move(mask))));
    }
  }
  return out;
}

Value rms_gap(const Value& a, const Value& b, const std::vector<bool>& valid) {
  const auto n_valid = static_cast<double>(std::count(valid.begin(), valid.end(), true));
  if (n_valid == 0) return zero_scalar();
  Tensor mask(1, valid.size());
  for (std::size_t c = 0; c < valid.size(); ++c) mask(0, c) = valid[c] ? 1.0 / n_valid : 0.0;
  const Value d = ad::sub(a, b);
  const Value ms = ad::sum(ad::mul(ad::mul(d, d), Value::constant(std::move(mask))));
  // sqrt has no derivative at 0; an exactly vanishing gap contributes nothing.
  if (ms.item() == 0.0) return zero_scalar();
  return ad::pow(ms, 0.5);
}

Value gr_penalty(const Value& probs, const Tensor& y, std::span<const Gender> genders, double tau,
                 double lambda_gr) {
  const bool has_f = std::find(genders.begin(), genders.end(), Gender::F) != genders.end();
  const bool has_m = std::find(genders.begin(), genders.end(), Gender::M) != genders.end();
  if (!has_f || !has_m) {
    log_warning("gr_penalty: batch lacks one gender; penalty is 0");
    return zero_scalar();
  }
  const SoftRates r = soft_rates(probs, y, genders, tau);
  const Value tpr = rms_gap(r.tpr[0], r.tpr[1], r.tpr_valid);
  const Value fpr = rms_gap(r.fpr[0], r.fpr[1], r.fpr_valid);
  return ad::scale(ad::add(tpr, fpr), lambda_gr);
}

ClassCenters lvr_center_update(const ClassCenters& centers, const Tensor& h, const Tensor& y) {
  const std::size_t B = h.rows();
  if (B == 0) throw ShapeError("lvr_center_update: empty batch");
  if (y.rows() != B || y.cols() != centers.centers.rows() || h.cols() != centers.centers.cols()) {
    throw ShapeError("lvr_center_update: shape mismatch");
  }
  ClassCenters out = centers;
  const double w = 1.0 - centers.omega;
  for (std::size_t i = 0; i < y.cols(); ++i) {
    for (std::size_t d = 0; d < h.cols(); ++d) {
      double acc = 0.0;
      for (std::size_t l = 0; l < B; ++l) acc += y(l, i) * h(l, d);
      out.centers(i, d) = w * acc / static_cast<double>(B) + centers.omega * centers.centers(i, d);
    }
  }
  return out;
}

Value center_sq_distances(const ClassCenters& centers, const Value& h) {
  const Tensor& c = centers.centers;
  if (h.cols() != c.cols()) throw ShapeError("center distances: embedding width mismatch");
  Tensor ct(c.cols(), c.rows());
  Tensor cn(1, c.rows());
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t d = 0; d < c.cols(); ++d) {
      ct(d, i) = c(i, d);
      cn(0, i) += c(i, d) * c(i, d);
    }
  }
  const Value hn = ad::row_sum(ad::mul(h, h));
  const Value cross = ad::scale(ad::matmul(h, Value::constant(std::move(ct))), -2.0);
  return ad::add(ad::add(cross, hn), Value::constant(std::move(cn)));
}

Value lvr_reg(const ClassCenters& centers, const Value& h, const Tensor& y, double lambda_lvr) {
  const Value d2 = center_sq_distances(centers, h);
  if (!y.same_shape(d2.data())) throw ShapeError("lvr_reg: labels do not match centers");
  return ad::scale(ad::sum(ad::mul(d2, Value::constant(y))), lambda_lvr);
}

Value lvr_center_ce(const ClassCenters& centers, const Value& h, const Tensor& y,
                    const ClassBalanceWeights& w) {
  const Value probs = ad::softmax_rows(ad::scale(center_sq_distances(centers, h), -1.0));
  return ce_soft(y, probs, w);
}

DroResult dro_objective(const std::array<std::optional<Value>, 2>& losses,
                        const std::array<double, 2>& sizes, double lambda_gd, bool adjusted) {
  if (lambda_gd < 0.0) throw ConfigError("dro_objective: lambda_GD must be >= 0");
  if (!losses[0] && !losses[1]) throw ShapeError("dro_objective: no group present in batch");
  auto objective = [&](std::size_t g) {
    double v = losses[g]->item();
    if (adjusted) v += lambda_gd / std::sqrt(sizes[g]);
    return v;
  };
  std::size_t pick = 0;
  if (!losses[0] || !losses[1]) {
    log_warning("dro_objective: batch lacks one gender group; using the other");
    pick = losses[0] ? 0 : 1;
  } else {
    pick = objective(1) > objective(0) ? 1 : 0;
  }
  Value loss = *losses[pick];
  if (adjusted && lambda_gd != 0.0) loss = ad::add_scalar(loss, lambda_gd / std::sqrt(sizes[pick]));
  return DroResult{loss, static_cast<Gender>(pick)};
}

BlindTerms blind_weighted_ce(const Tensor& y, const Value& probs, const Value& logits,
                             const Tensor& targets, BlindVariant variant, double gamma,
                             double lambda_b, const ClassBalanceWeights& w) {
  if (!(gamma >= 0.0)) throw ConfigError("blind_weighted_ce: gamma must be >= 0");
  const std::size_t B = y.rows();
  if (logits.rows() != B || logits.cols() != 1 || targets.rows() != B || targets.cols() != 1) {
    throw ShapeError("blind_weighted_ce: detector logits and targets must be B x 1");
  }
  BlindTerms out;
  out.weights = Tensor(B, 1);
  const Tensor z_all = ad::detach(logits).data();
  for (std::size_t i = 0; i < B; ++i) {
    const double z = z_all(i, 0);
    const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    double p_true = p;
    if (variant == BlindVariant::WithDemographics && targets(i, 0) < 0.5) p_true = 1.0 - p;
    out.weights(i, 0) = std::pow(std::clamp(1.0 - p_true, 0.0, 1.0), gamma);
  }
  out.main = ad::mean(ce_soft(y, probs, w, out.weights));
  out.detector = ad::scale(ad::mean(ad::bce_with_logits(logits, targets)), lambda_b);
  return out;
}

}  // namespace debias
