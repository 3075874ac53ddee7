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

#include "debias/trainers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "debias/error.hpp"
#include "debias/log.hpp"

namespace debias {

namespace {

struct MethodInfo {
  MethodKind kind;
  std::string_view name;
  std::string_view enum_name;
  bool bias_supervised;
};

constexpr std::array<MethodInfo, 14> kMethodInfo = {{
    {MethodKind::ERM, "ERM", "erm", false},
    {MethodKind::ADV, "ADV", "adv", true},
    {MethodKind::MADV, "MADV", "madv", true},
    {MethodKind::GR, "GR", "gr", true},
    {MethodKind::DS, "DS", "ds", true},
    {MethodKind::RW, "RW", "rw", true},
    {MethodKind::BLIND_PLUS_D, "BLIND+d", "blind_plus_d", true},
    {MethodKind::GDRO, "GDRO", "gdro", true},
    {MethodKind::GADRO, "GADRO", "gadro", true},
    {MethodKind::BLIND_MINUS_D, "BLIND-d", "blind_minus_d", false},
    {MethodKind::LFF, "LfF", "lff", false},
    {MethodKind::LVR, "LVR", "lvr", false},
    {MethodKind::SIH, "SiH", "sih", false},
    {MethodKind::DISENT, "DisEnt", "disent", false},
}};

const MethodInfo& info(MethodKind k) {
  for (const auto& i : kMethodInfo)
    if (i.kind == k) return i;
  throw ConfigError("unknown method kind");
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

Value mean_weighted(const Value& per_sample, const Tensor& w) {
  return ad::mean(ad::mul(per_sample, Value::constant(w)));
}

Value add_valid(const Value& a, const Value& b) {
  if (!a.valid()) return b;
  if (!b.valid()) return a;
  return ad::add(a, b);
}

bool both_genders(std::span<const Gender> g) {
  return std::find(g.begin(), g.end(), Gender::F) != g.end() &&
         std::find(g.begin(), g.end(), Gender::M) != g.end();
}

Tensor gender_targets(std::span<const Gender> g) {
  Tensor t(g.size(), 1);
  for (std::size_t i = 0; i < g.size(); ++i) t(i, 0) = g[i] == Gender::F ? 1.0 : 0.0;
  return t;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void validate(const TrainConfig& c) {
  if (!(c.lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (!(c.weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (c.batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (c.max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
  if (c.hidden == 0 || c.adv_hidden == 0 || c.intrinsic == 0 || c.bias == 0) {
    throw ConfigError("layer widths must be >= 1");
  }
}

void validate(const MethodSpec& m) {
  const auto& hp = m.hp;
  if (m.kind == MethodKind::MADV && hp.k == 0) throw ConfigError("MADV needs k >= 1");
  if (!(hp.alpha >= 0.0 && hp.alpha < 1.0)) throw ConfigError("EMA alpha must lie in [0, 1)");
  if (!(hp.omega >= 0.0 && hp.omega < 1.0)) throw ConfigError("center momentum must lie in [0, 1)");
  if (!(hp.swap_start >= 0.0 && hp.swap_start <= 1.0)) throw ConfigError("swap_start must lie in [0, 1]");
}

}  // namespace

std::string_view method_name(MethodKind k) { return info(k).name; }

MethodKind parse_method(std::string_view s) {
  const std::string l = lower(s);
  for (const auto& i : kMethodInfo) {
    if (l == lower(i.name) || l == i.enum_name) return i.kind;
  }
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

bool uses_bias_supervision(MethodKind k) { return info(k).bias_supervised; }

// ---- GenderGuard -----------------------------------------------------------

Gender GenderGuard::read(const Sample& s) const {
  if (armed_) throw AccessError("gender of training sample " + s.id + " read by a method without bias supervision");
  if (!s.gender) throw ConfigError("sample " + s.id + " has no gender tag");
  reads_.fetch_add(1);
  return *s.gender;
}

// ---- AdamW -----------------------------------------------------------------

AdamW::AdamW(std::vector<Value> params, double lr, double weight_decay, double beta1, double beta2,
             double eps)
    : params_(std::move(params)), lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void AdamW::zero_grad() {
  for (const auto& p : params_) p.zero_grad();
}

void AdamW::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Tensor g = params_[k].grad();
    Tensor& w = params_[k].mutable_data();
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1_ * m[i] + (1.0 - b1_) * g[i];
      v[i] = b2_ * v[i] + (1.0 - b2_) * g[i] * g[i];
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      w[i] -= lr_ * (update + wd_ * w[i]);
    }
  }
}

// ---- Trainer ---------------------------------------------------------------

Trainer::Trainer(MethodSpec method, TrainConfig config, const Dataset& ds,
                 std::vector<double> sample_weights, const GenderGuard& guard)
    : method_(std::move(method)),
      config_(config),
      ds_(ds),
      sample_weights_(std::move(sample_weights)),
      guard_(guard),
      class_weights_(ClassBalanceWeights::from_dataset(ds, method_.hp.beta)),
      model_(),
      optimizer_({}, 0.0, 0.0),
      rng_(config.seed) {
  validate(config_);
  validate(method_);
  if (!sample_weights_.empty() && sample_weights_.size() != ds.size()) {
    throw ShapeError("one sample weight per dataset row required");
  }
  const MethodKind kind = method_.kind;
  ModelDims d;
  d.layers = ds.layers();
  d.dims = ds.dims();
  d.classes = ds.num_categories();
  d.hidden = config_.hidden;
  d.adv_hidden = config_.adv_hidden;
  d.intrinsic = config_.intrinsic;
  d.bias = config_.bias;
  if (kind == MethodKind::ADV) d.adv_count = 1;
  if (kind == MethodKind::MADV) d.adv_count = method_.hp.k;

  model_.categories = ds.categories();
  model_.dims = d;
  model_.head = EmotionHead::init(d, rng_);
  switch (kind) {
    case MethodKind::ADV:
    case MethodKind::MADV:
      model_.adversary = AdversaryStack::init(
          d.adv_count, method_.hp.adversary_input == AdversaryInput::Embedding ? d.hidden : d.dims,
          d.adv_hidden, rng_, method_.hp.adversary_input);
      break;
    case MethodKind::BLIND_PLUS_D:
      model_.detector = DetectorHead::init(d.dims, DetectorTarget::Gender, rng_);
      break;
    case MethodKind::BLIND_MINUS_D:
      model_.detector = DetectorHead::init(d.dims, DetectorTarget::HammingAcc, rng_);
      break;
    case MethodKind::LFF:
    case MethodKind::SIH:
      model_.biased = EmotionHead::init(d, rng_);
      break;
    case MethodKind::DISENT:
      model_.dual = DualEncoder::init(d, rng_);
      break;
    case MethodKind::LVR:
      model_.centers = ClassCenters{Tensor(d.classes, d.hidden), method_.hp.omega};
      break;
    default:
      break;
  }
  optimizer_ = AdamW(model_.parameters(), config_.lr, config_.weight_decay);

  if (kind == MethodKind::LFF || kind == MethodKind::DISENT) ema_.emplace(ds.size(), method_.hp.alpha);
  if (kind == MethodKind::GDRO || kind == MethodKind::GADRO) {
    for (std::size_t r : ds.indices(Split::Train)) {
      group_sizes_[static_cast<std::size_t>(guard_.read(ds[r]))] += 1.0;
    }
  }
}

Batch Trainer::make_batch(std::span<const std::size_t> rows) {
  if (rows.empty()) throw ShapeError("empty batch");
  Batch b;
  b.rows.assign(rows.begin(), rows.end());
  b.features = feature_batch(ds_, rows);
  b.labels = label_batch(ds_, rows);
  if (uses_bias_supervision(method_.kind)) {
    b.genders.reserve(rows.size());
    for (std::size_t r : rows) b.genders.push_back(guard_.read(ds_[r]));
  }
  if (!sample_weights_.empty()) {
    b.sample_weights = Tensor(rows.size(), 1);
    for (std::size_t i = 0; i < rows.size(); ++i) b.sample_weights(i, 0) = sample_weights_[rows[i]];
  }
  if (method_.kind == MethodKind::DISENT) {
    b.permutation.resize(rows.size());
    std::iota(b.permutation.begin(), b.permutation.end(), std::size_t{0});
    std::shuffle(b.permutation.begin(), b.permutation.end(), rng_);
  }
  return b;
}

LossTerms Trainer::losses(const Batch& b, bool commit) {
  switch (method_.kind) {
    case MethodKind::ERM:
    case MethodKind::DS:
    case MethodKind::RW:
      return erm_losses(b);
    case MethodKind::ADV:
    case MethodKind::MADV:
      return adversarial_losses(b);
    case MethodKind::GR:
      return gr_losses(b);
    case MethodKind::BLIND_PLUS_D:
    case MethodKind::BLIND_MINUS_D:
      return blind_losses(b);
    case MethodKind::GDRO:
    case MethodKind::GADRO:
      return dro_losses(b);
    case MethodKind::LFF:
    case MethodKind::SIH:
      return biased_pair_losses(b, commit);
    case MethodKind::DISENT:
      return disent_losses(b, commit);
    case MethodKind::LVR:
      return lvr_losses(b, commit);
  }
  throw ConfigError("unknown method kind");
}

LossTerms Trainer::erm_losses(const Batch& b) {
  const auto out = model_.head.forward(Value::constant(b.features));
  LossTerms t;
  t.task = ad::mean(ce_soft(b.labels, out.probs, class_weights_, b.sample_weights));
  t.total = t.task;
  return t;
}

LossTerms Trainer::adversarial_losses(const Batch& b) {
  const auto& hp = method_.hp;
  const auto out = model_.head.forward(Value::constant(b.features));
  LossTerms t;
  t.task = ad::mean(ce_soft(b.labels, out.probs, class_weights_, b.sample_weights));
  t.total = t.task;
  if (!both_genders(b.genders)) {
    log_warning("adversarial step: batch lacks one gender; adversary skipped");
    return t;
  }
  const Tensor targets = gender_targets(b.genders);
  const Value& rep =
      model_.adversary->input == AdversaryInput::Embedding ? out.embedding : out.aggregated;
  const auto adv = model_.adversary->forward(rep, hp.lambda_adv);
  Value acc;
  for (const auto& logit : adv.logits) acc = add_valid(acc, ad::mean(ad::bce_with_logits(logit, targets)));
  t.auxiliary = ad::scale(acc, 1.0 / static_cast<double>(adv.logits.size()));
  t.total = ad::add(t.total, t.auxiliary);
  if (method_.kind == MethodKind::MADV && model_.adversary->size() >= 2) {
    t.diff = diff_loss(model_.adversary->hiddens_detached(rep), hp.lambda_diff);
    t.total = ad::add(t.total, t.diff);
  }
  return t;
}

LossTerms Trainer::gr_losses(const Batch& b) {
  const auto& hp = method_.hp;
  const auto out = model_.head.forward(Value::constant(b.features));
  LossTerms t;
  t.task = ad::mean(ce_soft(b.labels, out.probs, class_weights_, b.sample_weights));
  t.auxiliary = gr_penalty(out.probs, b.labels, b.genders, hp.tau, hp.lambda_gr);
  t.total = ad::add(t.task, t.auxiliary);
  return t;
}

LossTerms Trainer::blind_losses(const Batch& b) {
  const auto& hp = method_.hp;
  const auto out = model_.head.forward(Value::constant(b.features));
  const Value logits = model_.detector->forward(out.aggregated);
  const bool with_d = method_.kind == MethodKind::BLIND_PLUS_D;
  Tensor targets;
  if (with_d) {
    targets = gender_targets(b.genders);
  } else {
    const BinaryMatrix pred = binarize(ad::detach(out.probs).data());
    const BinaryMatrix truth = binarize(b.labels);
    targets = Tensor(b.rows.size(), 1);
    const double C = static_cast<double>(truth.cols());
    for (std::size_t i = 0; i < truth.rows(); ++i) {
      double agree = 0;
      for (std::size_t c = 0; c < truth.cols(); ++c) agree += pred(i, c) == truth(i, c);
      targets(i, 0) = agree / C;
    }
  }
  const auto terms = blind_weighted_ce(
      b.labels, out.probs, logits, targets,
      with_d ? BlindVariant::WithDemographics : BlindVariant::WithoutDemographics, hp.gamma,
      hp.lambda_b, class_weights_);
  LossTerms t;
  t.task = terms.main;
  t.auxiliary = terms.detector;
  t.total = ad::add(t.task, t.auxiliary);
  return t;
}

LossTerms Trainer::dro_losses(const Batch& b) {
  const auto& hp = method_.hp;
  const auto out = model_.head.forward(Value::constant(b.features));
  const Value per_sample = ce_soft(b.labels, out.probs, class_weights_, b.sample_weights);
  std::array<std::optional<Value>, 2> groups;
  for (Gender g : kGenders) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < b.genders.size(); ++i)
      if (b.genders[i] == g) idx.push_back(i);
    if (!idx.empty()) groups[static_cast<std::size_t>(g)] = ad::mean(ad::gather_rows(per_sample, idx));
  }
  const auto r = dro_objective(groups, group_sizes_, hp.lambda_gd, method_.kind == MethodKind::GADRO);
  LossTerms t;
  t.task = r.loss;
  t.total = r.loss;
  return t;
}

Tensor Trainer::difficulty_weights(const Batch& b, const Value& ce_biased,
                                   const Value& ce_debiased, bool commit) {
  const std::size_t B = b.rows.size();
  Tensor w(B, 1, 1.0);
  if (!method_.hp.difficulty_weights) return w;
  const Tensor cb = ad::detach(ce_biased).data();
  const Tensor cd = ad::detach(ce_debiased).data();
  std::optional<EmaLossTracker> scratch;
  EmaLossTracker* tracker = &*ema_;
  if (!commit) tracker = &scratch.emplace(*ema_);
  for (std::size_t i = 0; i < B; ++i) {
    tracker->update(b.rows[i], cb(i, 0), cd(i, 0));
    w(i, 0) = lff_weight(tracker->biased(b.rows[i]), tracker->debiased(b.rows[i]));
  }
  return w;
}

LossTerms Trainer::biased_pair_losses(const Batch& b, bool commit) {
  const auto& hp = method_.hp;
  const Value x = Value::constant(b.features);
  const auto debiased = model_.head.forward(x);
  const auto biased = model_.biased->forward(x);
  LossTerms t;
  t.auxiliary = ad::mean(gce_multilabel(b.labels, biased.probs, hp.q));
  if (method_.kind == MethodKind::LFF) {
    const Value ce_d = ce_soft(b.labels, debiased.probs, class_weights_);
    const Value ce_b = ce_soft(b.labels, biased.probs, class_weights_);
    t.task = mean_weighted(ce_d, difficulty_weights(b, ce_b, ce_d, commit));
  } else {
    t.task = ad::mean(sih_debiased_ce(b.labels, debiased.probs, biased.probs, hp.r));
  }
  t.total = ad::add(t.task, t.auxiliary);
  return t;
}

bool Trainer::swapping() const {
  if (!method_.hp.swap) return false;
  const double start = method_.hp.swap_start * static_cast<double>(planned_steps_);
  return static_cast<double>(optimizer_.steps()) >= start;
}

LossTerms Trainer::disent_losses(const Batch& b, bool commit) {
  const auto& hp = method_.hp;
  const auto& dual = *model_.dual;
  const auto f = dual.encode(model_.head.aggregate(Value::constant(b.features)));
  const auto o = dual.heads(f);
  const Value ce_d = ce_soft(b.labels, o.debiased_probs, class_weights_);
  const Value ce_b = ce_soft(b.labels, o.biased_probs, class_weights_);
  const Tensor w = difficulty_weights(b, ce_b, ce_d, commit);
  LossTerms t;
  t.task = mean_weighted(ce_d, w);
  t.auxiliary = ad::mean(gce_multilabel(b.labels, o.biased_probs, hp.q));
  if (swapping()) {
    const auto s = dual.heads(f, b.permutation);
    Tensor swapped(b.labels.rows(), b.labels.cols());
    for (std::size_t i = 0; i < b.permutation.size(); ++i)
      for (std::size_t c = 0; c < b.labels.cols(); ++c) swapped(i, c) = b.labels(b.permutation[i], c);
    t.task = ad::add(t.task, mean_weighted(ce_soft(b.labels, s.debiased_probs, class_weights_), w));
    t.auxiliary = ad::add(t.auxiliary, ad::mean(gce_multilabel(swapped, s.biased_probs, hp.q)));
  }
  t.total = ad::add(t.task, t.auxiliary);
  return t;
}

LossTerms Trainer::lvr_losses(const Batch& b, bool commit) {
  const auto& hp = method_.hp;
  const auto out = model_.head.forward(Value::constant(b.features));
  LossTerms t;
  t.task = ad::mean(ce_soft(b.labels, out.probs, class_weights_, b.sample_weights));
  const ClassCenters updated =
      lvr_center_update(*model_.centers, ad::detach(out.embedding).data(), b.labels);
  if (commit) *model_.centers = updated;
  t.auxiliary = lvr_reg(updated, out.embedding, b.labels, hp.lambda_lvr);
  if (hp.center_loss) {
    t.auxiliary = ad::add(t.auxiliary,
                          ad::mean(lvr_center_ce(updated, out.embedding, b.labels, class_weights_)));
  }
  t.total = ad::add(t.task, t.auxiliary);
  return t;
}

double Trainer::step(const Batch& b) {
  const std::size_t n = optimizer_.steps() + 1;
  try {
    optimizer_.zero_grad();
    const LossTerms t = losses(b, true);
    const double v = t.total.item();
    if (!std::isfinite(v)) throw NumericError("non-finite loss");
    t.total.backward();
    for (const auto& p : model_.parameters()) {
      if (!p.grad().all_finite()) throw NumericError("non-finite gradient");
    }
    optimizer_.step();
    return v;
  } catch (const NumericError& e) {
    throw NumericError(std::string(method_name(method_.kind)) + " step " + std::to_string(n) +
                       ": " + e.what());
  }
}

double Trainer::gradient_check(const Batch& b, double eps) {
  auto graph = [&] { return losses(b, false).total; };
  const auto params = model_.parameters();
  if (!model_.adversary) return ad::grad_check(graph, params, eps);

  // Gradient reversal: the shared model descends task - lambda * adversary,
  // the adversaries descend their own losses.
  const double lambda = method_.hp.lambda_adv;
  auto term = [](const Value& v) { return v.valid() ? v.item() : 0.0; };
  const auto up = model_.head.parameters();
  const auto adv = model_.adversary->parameters();
  const double e_up = ad::grad_check(
      graph,
      [&] {
        const auto t = losses(b, false);
        return term(t.task) - lambda * term(t.auxiliary);
      },
      up, eps);
  const double e_adv = ad::grad_check(
      graph,
      [&] {
        const auto t = losses(b, false);
        return term(t.auxiliary) + term(t.diff);
      },
      adv, eps);
  return std::max(e_up, e_adv);
}

// ---- training loop ---------------------------------------------------------

std::vector<Gender> split_genders(const Dataset& ds, std::span<const std::size_t> rows) {
  std::vector<Gender> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    if (!ds[r].gender) throw ValidationError("sample " + ds[r].id + " has no gender tag");
    out.push_back(*ds[r].gender);
  }
  return out;
}

MetricReport evaluate_split(const ModelBundle& model, const Dataset& ds, Split s) {
  const auto rows = ds.indices(s);
  if (rows.empty()) throw ValidationError(std::string("split ") + std::string(to_string(s)) + " is empty");
  const Tensor probs = model.predict(ds, rows);
  return evaluate(probs, label_batch(ds, rows), split_genders(ds, rows));
}

namespace {

EpochLog dev_metrics(const ModelBundle& model, const Dataset& ds) {
  const auto rows = ds.indices(Split::Dev);
  const Tensor probs = model.predict(ds, rows);
  const Tensor labels = label_batch(ds, rows);
  EpochLog e;
  bool gendered = ds.has_gender(Split::Dev);
  std::vector<Gender> g;
  if (gendered) {
    g = split_genders(ds, rows);
    gendered = both_genders(g);
  }
  if (gendered) {
    const MetricReport r = evaluate(probs, labels, g);
    e.dev_f1 = r.f1;
    e.dev_acc = r.acc;
    e.dev_tpr_gap = r.tpr_gap;
    e.dev_fpr_gap = r.fpr_gap;
    e.dev_f1_gap = r.f1_gap;
    e.dev_dp_gap = r.dp_gap;
  } else {
    const BinaryMatrix pred = binarize(probs);
    const BinaryMatrix truth = binarize(labels);
    e.dev_f1 = macro_f1(pred, truth);
    e.dev_acc = hamming_acc(pred, truth);
    e.dev_tpr_gap = e.dev_fpr_gap = e.dev_f1_gap = e.dev_dp_gap =
        std::numeric_limits<double>::quiet_NaN();
  }
  return e;
}

}  // namespace

TrainResult train(const MethodSpec& method, const TrainConfig& config, const Dataset& ds,
                  const GenderGuard* guard) {
  validate(config);
  validate(method);
  if (ds.count(Split::Train) == 0) throw ConfigError("training split is empty");
  if (ds.count(Split::Dev) == 0) throw ConfigError("dev split is empty");
  const bool supervised = uses_bias_supervision(method.kind);
  const std::string name(method_name(method.kind));
  if (supervised && !ds.has_gender(Split::Train)) {
    throw ConfigError(name + " needs gender tags on every training sample");
  }
  const GenderGuard own(!supervised);
  const GenderGuard& g = guard != nullptr ? *guard : own;

  Dataset work = ds;
  std::vector<double> weights;
  if (supervised) {
    // Every bias-supervised method touches the training genders through the
    // guard before any transform reads them.
    for (std::size_t r : ds.indices(Split::Train)) g.read(ds[r]);
    if (method.kind == MethodKind::DS) work = downsample_balance(ds, config.seed ^ 0x5eedba1aULL);
    if (method.kind == MethodKind::RW) weights = compute_reweights(ds, method.hp.reweight);
  }

  Trainer trainer(method, config, work, std::move(weights), g);
  std::vector<std::size_t> order = work.indices(Split::Train);
  const std::size_t per_epoch = (order.size() + config.batch_size - 1) / config.batch_size;
  trainer.set_planned_steps(per_epoch * config.max_epochs);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainResult result;
  double best = -1.0;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      const Batch b = trainer.make_batch(std::span(order).subspan(start, n));
      loss_sum += trainer.step(b);
    }
    EpochLog e = dev_metrics(trainer.model(), work);
    e.epoch = epoch;
    e.train_loss = loss_sum / static_cast<double>(per_epoch);
    result.log.push_back(e);
    log_info(name + " epoch " + std::to_string(epoch) + " loss " + format_double(e.train_loss) +
             " dev_f1 " + format_double(e.dev_f1));
    if (e.dev_f1 > best) {
      best = e.dev_f1;
      result.model = trainer.model().clone();
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  result.gender_reads = g.reads();
  return result;
}

std::string training_log_csv(std::span<const EpochLog> log) {
  std::string out = "epoch,train_loss,dev_f1,dev_acc,dev_tpr_gap,dev_fpr_gap,dev_f1_gap,dev_dp_gap\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch);
    for (double v : {e.train_loss, e.dev_f1, e.dev_acc, e.dev_tpr_gap, e.dev_fpr_gap, e.dev_f1_gap,
                     e.dev_dp_gap}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace debias
