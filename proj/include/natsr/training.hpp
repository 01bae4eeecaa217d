#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "natsr/adam.hpp"
#include "natsr/autodiff.hpp"
#include "natsr/error.hpp"
#include "natsr/gradcheck.hpp"
#include "natsr/networks.hpp"
#include "natsr/nmd.hpp"
#include "natsr/resample.hpp"

// Loss suite and the two SR training regimes: FRSR (reconstruction only) and
// NatSR (reconstruction + naturalness + relativistic adversarial).
namespace natsr {

// ---- losses ----

struct LossWeights {
  double recon = 1.0;        // λ1
  double natural = 0.0;      // λ2
  double adversarial = 0.0;  // λ3

  static LossWeights frsr() { return {1.0, 0.0, 0.0}; }
  static LossWeights natsr() { return {1.0, 1e-3, 1e-3}; }
};

void validate(const LossWeights& w);

// Mean absolute error. Throws ShapeError on mismatched shapes.
Var recon_loss(Graph& g, Var sr, Var hr);

// -mean log clamp(D_NM(sr)). The NMD enters as constants, so only `sr`
// receives gradient.
Var natural_loss(Graph& g, Nmd& nmd, Var sr);

inline constexpr double kRaganClamp = 1e-7;

// Relativistic average losses from per-image logits, as written:
//   D̃(x_r) = σ(C(x_r) - mean C(x_f)),  D̃(x_f) = σ(C(x_f) - mean C(x_r))
//   L_G = -E log D̃(x_r) - E log(1 - D̃(x_f))
//   L_D = -E log D̃(x_f) - E log(1 - D̃(x_r))
// Sigmoid outputs are clamped to [1e-7, 1 - 1e-7].
struct RaganLosses {
  Var generator;
  Var discriminator;
};
RaganLosses ragan_losses(Graph& g, Var c_real, Var c_fake);

struct RaganValues {
  double generator = 0.0;
  double discriminator = 0.0;
};
RaganValues ragan_values(const std::vector<double>& c_real, const std::vector<double>& c_fake);

// λ1·recon + λ2·natural + λ3·adv. Terms with zero weight are skipped, so the
// FRSR preset returns `recon` itself.
Var total_loss(Graph& g, Var recon, std::optional<Var> natural, std::optional<Var> adversarial, const LossWeights& w);
double total_loss_value(double recon, double natural, double adversarial, const LossWeights& w);

// Finite-difference checks of the composite losses (grad-check CLI).
std::vector<OpCheck> loss_checks();

// ---- training ----

struct TrainConfig {
  int lr_patch = 8;  // LR patch extent, a multiple of 8; HR patches are lr_patch · scale
  int scale = 4;
  KernelKind kernel = KernelKind::kBicubic;
  int batch_size = 8;
  int steps = 1000;
  double lr = 2e-4;
  double halve_at = 0.5;  // fraction of steps after which lr is halved once
  int eval_every = 100;
  int val_patches = 16;
  // LR extent of validation tiles, a multiple of 8. Larger than lr_patch so
  // that zero-padding borders do not dominate the score; shrinks in steps of 8
  // when no held-out image is large enough.
  int val_lr_patch = 32;
  std::uint64_t seed = 1;
  // Collapse detector: |mean C(real) - mean C(fake)| above `collapse_gap`
  // for `collapse_patience` consecutive discriminator steps.
  double collapse_gap = 8.0;
  int collapse_patience = 100;
};

void validate(const TrainConfig& c);

ResamplerSpec resampler(const TrainConfig& c);

// Learning rate at 0-based `step`: two plateaus, lr then lr / 2.
double learning_rate(const TrainConfig& c, int step);

struct SrDataset {
  std::vector<Tensor> train;  // HR images, batch 1
  std::vector<Tensor> val;
};

struct SrTraceRow {
  int step = 0;  // optimiser steps completed
  double lr = 0.0;
  double loss = 0.0;  // total loss of the latest step (NaN at step 0)
  double recon = 0.0;
  double natural = 0.0;
  double adv_g = 0.0;
  double adv_d = 0.0;
  double val_psnr = 0.0;
  double bicubic_psnr = 0.0;  // interpolate(lr) baseline on the same patches
  double nmd_score = 0.0;     // mean over validation outputs; NaN without an NMD
  double plausibility = 0.0;  // mean over validation outputs
  bool collapse_warning = false;
};

struct SrTrainResult {
  Generator generator;
  AdamState adam;
  std::optional<GanDiscriminator> discriminator;
  AdamState disc_adam;
  std::vector<SrTraceRow> trace;
  int steps = 0;
  bool collapse_warned = false;
};

// Raised on a non-finite loss; carries the generator parameters from before
// the failing step.
class TrainingDiverged : public DivergenceError {
 public:
  TrainingDiverged(const std::string& what, int step, ParameterSet last_good)
      : DivergenceError(what), step_(step), last_good_(std::move(last_good)) {}
  int step() const { return step_; }
  const ParameterSet& last_good() const { return last_good_; }

 private:
  int step_;
  ParameterSet last_good_;
};

// Fixed validation pairs: HR tiles of extent val_lr_patch · scale from
// `images` and their degraded LR.
struct SrPairs {
  Tensor hr;
  Tensor lr;
};
SrPairs validation_pairs(const std::vector<Tensor>& images, const TrainConfig& c);

// Evaluates `gen` on `pairs`; fields of the returned row other than the
// metrics stay zero.
SrTraceRow evaluate_generator(const Generator& gen, const SrPairs& pairs, const ResamplerSpec& spec,
                              const Nmd* nmd);

// λ-weighted generator training. With λ2 = λ3 = 0 no discriminator is built
// and no NMD term is evaluated in the loss, so the run equals FRSR bitwise.
// `init` warm-starts the generator (its config must match `gen_config`).
SrTrainResult train_sr(const SrDataset& data, const GeneratorConfig& gen_config, const TrainConfig& config,
                       const LossWeights& weights, Nmd* nmd = nullptr, const Generator* init = nullptr,
                       const GanDiscConfig& disc_config = {});

SrTrainResult train_frsr(const SrDataset& data, const GeneratorConfig& gen_config, const TrainConfig& config);

// NatSR regime: 1:1 alternating discriminator/generator updates with the NMD
// frozen throughout.
SrTrainResult train_natsr(const SrDataset& data, Nmd& nmd, const GeneratorConfig& gen_config,
                          const TrainConfig& config, const Generator* init = nullptr,
                          const LossWeights& weights = LossWeights::natsr(), const GanDiscConfig& disc_config = {});

// CSV with a header row.
std::string trace_csv(const std::vector<SrTraceRow>& trace);
std::string trace_csv(const std::vector<NmdTraceRow>& trace);

}  // namespace natsr
