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

#include "debias/gradcheck.hpp"

#include <random>

#include "debias/losses.hpp"
#include "debias/trainers.hpp"

namespace debias {

namespace {

constexpr std::size_t kB = 8;
constexpr std::size_t kC = 4;
constexpr std::size_t kD = 5;

Tensor normal(std::size_t r, std::size_t c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Tensor t(r, c);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

Tensor soft_labels(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Tensor y(kB, kC);
  for (std::size_t i = 0; i < kB; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < kC; ++c) s += y(i, c) = u(rng) * (c == i % kC ? 4.0 : 1.0);
    for (std::size_t c = 0; c < kC; ++c) y(i, c) /= s;
  }
  return y;
}

std::vector<Value> concat(std::initializer_list<std::vector<Value>> parts) {
  std::vector<Value> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<Value> params_of(const Linear& l) { return {l.weight, l.bias}; }

}  // namespace

std::vector<GradCheckResult> check_loss_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Value x = Value::constant(normal(kB, kD, rng));
  const Tensor y = soft_labels(rng);
  std::vector<Gender> genders;
  for (std::size_t i = 0; i < kB; ++i) genders.push_back(i % 2 == 0 ? Gender::F : Gender::M);

  const Linear main = Linear::init(kD, kC, rng);
  const Linear other = Linear::init(kD, kC, rng);
  const Linear embed = Linear::init(kD, 3, rng);
  const Linear detector = Linear::init(kD, 1, rng);
  std::vector<Linear> adversaries;
  for (int i = 0; i < 3; ++i) adversaries.push_back(Linear::init(kD, 3, rng));

  ClassBalanceWeights cw = ClassBalanceWeights::compute(std::vector<double>{30, 5, 12, 60}, 0.9);
  Tensor sw(kB, 1);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (auto& v : sw.values()) v = u(rng);
  ClassCenters centers{normal(kC, 3, rng, 0.5), 0.3};
  Tensor gender_target(kB, 1);
  Tensor acc_target(kB, 1);
  for (std::size_t i = 0; i < kB; ++i) {
    gender_target(i, 0) = genders[i] == Gender::F ? 1.0 : 0.0;
    acc_target(i, 0) = u(rng) / 2.0;
  }

  auto probs = [&](const Linear& l) { return ad::softmax_rows(l(x)); };
  auto h = [&] { return ad::relu(embed(x)); };

  std::vector<GradCheckResult> out;
  auto run = [&](std::string name, const std::function<Value()>& loss, std::vector<Value> params) {
    out.push_back({std::move(name), ad::grad_check(loss, params)});
  };

  run("ce_soft", [&] { return ad::mean(ce_soft(y, probs(main), cw, sw)); }, params_of(main));
  run("gce_multilabel", [&] { return ad::mean(gce_multilabel(y, probs(main), 0.7)); },
      params_of(main));
  run("bce_with_logits", [&] { return ad::mean(ad::bce_with_logits(detector(x), gender_target)); },
      params_of(detector));
  run("diff_loss",
      [&] {
        std::vector<Value> hs;
        for (const auto& a : adversaries) hs.push_back(ad::relu(a(x)));
        return diff_loss(hs, 0.2);
      },
      concat({params_of(adversaries[0]), params_of(adversaries[1]), params_of(adversaries[2])}));
  run("sih_debiased_ce",
      [&] { return ad::mean(sih_debiased_ce(y, probs(main), probs(other), 0.7)); },
      concat({params_of(main), params_of(other)}));
  run("gr_penalty", [&] { return gr_penalty(probs(main), y, genders, 0.05, 4.0); },
      params_of(main));
  run("lvr_reg", [&] { return lvr_reg(centers, h(), y, 0.1); }, params_of(embed));
  run("lvr_center_ce", [&] { return ad::mean(lvr_center_ce(centers, h(), y, cw)); },
      params_of(embed));
  run("dro_objective",
      [&] {
        const Value ps = ce_soft(y, probs(main), cw);
        std::array<std::optional<Value>, 2> groups;
        for (Gender g : kGenders) {
          std::vector<std::size_t> idx;
          for (std::size_t i = 0; i < kB; ++i)
            if (genders[i] == g) idx.push_back(i);
          groups[static_cast<std::size_t>(g)] = ad::mean(ad::gather_rows(ps, idx));
        }
        return dro_objective(groups, {300.0, 40.0}, 4.0, true).loss;
      },
      params_of(main));
  for (auto variant : {BlindVariant::WithDemographics, BlindVariant::WithoutDemographics}) {
    const bool with_d = variant == BlindVariant::WithDemographics;
    run(with_d ? "blind_weighted_ce(+d)" : "blind_weighted_ce(-d)",
        [&] {
          const auto t = blind_weighted_ce(y, probs(main), detector(x),
                                           with_d ? gender_target : acc_target, variant, 0.7, 1.0, cw);
          return ad::add(t.main, t.detector);
        },
        concat({params_of(main), params_of(detector)}));
  }
  return out;
}

std::vector<GradCheckResult> check_step_gradients(std::uint64_t seed) {
  SynthParams sp;
  sp.n = 160;
  sp.classes = kC;
  sp.dims = 6;
  sp.layers = 2;
  sp.label_noise = 0.3;
  const Dataset ds = synth_generate(sp, seed);

  // Four samples of each gender.
  std::vector<std::size_t> rows;
  std::array<std::size_t, 2> taken{0, 0};
  for (std::size_t r : ds.indices(Split::Train)) {
    auto& n = taken[static_cast<std::size_t>(*ds[r].gender)];
    if (n < kB / 2) {
      rows.push_back(r);
      ++n;
    }
  }

  TrainConfig cfg;
  cfg.seed = seed;
  cfg.lr = 1e-2;
  cfg.hidden = 5;
  cfg.adv_hidden = 4;
  cfg.intrinsic = 3;
  cfg.bias = 3;

  std::vector<GradCheckResult> out;
  auto check = [&](const MethodSpec& spec, std::string name) {
    const GenderGuard guard(!uses_bias_supervision(spec.kind));
    std::vector<double> weights;
    if (spec.kind == MethodKind::RW) weights = compute_reweights(ds);
    Trainer t(spec, cfg, ds, weights, guard);
    t.set_planned_steps(0);  // DisEnt swaps from the first step
    // A few updates so that EMA losses and class centers carry state.
    for (int i = 0; i < 3; ++i) t.step(t.make_batch(rows));
    out.push_back({std::move(name), t.gradient_check(t.make_batch(rows))});
  };
  for (MethodKind kind : kAllMethods) check({kind, {}}, "step:" + std::string(method_name(kind)));
  for (MethodKind kind : {MethodKind::ADV, MethodKind::MADV}) {
    MethodSpec spec{kind, {}};
    spec.hp.adversary_input = AdversaryInput::Aggregated;
    check(spec, "step:" + std::string(method_name(kind)) + "(aggregated)");
  }
  return out;
}

}  // namespace debias
