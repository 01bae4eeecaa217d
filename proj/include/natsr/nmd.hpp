#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "natsr/adam.hpp"
#include "natsr/autodiff.hpp"
#include "natsr/patches.hpp"
#include "natsr/resample.hpp"

// Natural-manifold discriminator: a VGG-style classifier separating natural
// HR patches from blurry and noisy ones, trained with a curriculum that
// hardens the negatives.
namespace natsr {

struct NmdConfig {
  std::vector<int> widths = {32, 64, 64, 128, 128};  // 3×3 conv + ReLU stages
  bool max_pool = true;                              // 2× max-pool between stages
  int channels = 3;
  int patch_size = 32;  // training/scoring tile size
};

// Throws ValueError when the config collapses the spatial extent to zero
// before the head, or has non-positive widths.
void validate(const NmdConfig& config);

class Nmd {
 public:
  Nmd() = default;
  Nmd(NmdConfig config, std::uint64_t seed);
  Nmd(NmdConfig config, ParameterSet params);

  // Probability of "natural", shape (batch, 1, 1, 1).
  Var forward(Graph& g, Var images, bool trainable = true);
  // Pre-sigmoid head output.
  Var logits(Graph& g, Var images, bool trainable = true);

  // Frozen forward pass, one score per batch item.
  std::vector<double> predict(const Tensor& images) const;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const NmdConfig& config() const { return config_; }

  // Sum over stages of 9·cin·cout + cout, plus the head's cin + 1.
  static std::size_t expected_param_count(const NmdConfig& config);

 private:
  NmdConfig config_;
  ParameterSet params_;
};

inline constexpr double kProbClamp = 1e-7;

// 0.5 · (-mean_natural log p - mean_unnatural log(1 - p)). An empty side
// contributes zero. Throws ValueError for targets other than 0 or 1.
Var nmd_bce_loss(Graph& g, Var preds, const std::vector<double>& targets);
double nmd_bce_value(const std::vector<double>& preds, const std::vector<double>& targets);

// ---- curriculum ----

struct CurriculumConfig {
  double alpha_init = 0.5;
  double alpha_step = 0.1;
  double alpha_max = 0.8;
  double sigma_init = 0.1;
  double sigma_decay = 0.8;
  double sigma_final = 0.0044;  // terminal once sigma <= this
  int window = 10;
  double threshold = 0.95;
  int validate_every = 50;
};

struct CurriculumState {
  int alpha_steps = 0;  // alpha = min(alpha_init + alpha_steps · step, max)
  double sigma = 0.1;
  std::deque<double> blurry_window;  // validation accuracy, blurry negatives
  std::deque<double> noisy_window;   // validation accuracy, noisy negatives
  int alpha_updates = 0;
  int sigma_updates = 0;

  double alpha(const CurriculumConfig& c) const;
  bool alpha_terminal(const CurriculumConfig& c) const;
  bool sigma_terminal(const CurriculumConfig& c) const { return sigma <= c.sigma_final; }
  bool terminal(const CurriculumConfig& c) const { return alpha_terminal(c) && sigma_terminal(c); }
};

CurriculumState initial_curriculum(const CurriculumConfig& config);

// Appends one measurement to each window, dropping the oldest beyond the
// window length.
void record_validation(CurriculumState& state, const CurriculumConfig& config, double blurry_acc, double noisy_acc);

struct CurriculumEvents {
  bool alpha_changed = false;
  bool sigma_changed = false;
  std::string notice;  // set when no window was full
};

// Each full window whose mean reaches the threshold advances its parameter
// and is cleared. Terminal parameters no longer move.
CurriculumEvents curriculum_update(CurriculumState& state, const CurriculumConfig& config);

// ---- training ----

struct NmdTrainConfig {
  NmdConfig net;
  CurriculumConfig curriculum;
  int batch_size = 16;
  int max_steps = 2000;
  double lr = 1e-3;
  // Cosine annealing from lr to lr * lr_final_fraction over max_steps; 1 keeps lr constant.
  double lr_final_fraction = 1.0;
  int val_batch_size = 32;  // per negative type
  std::uint64_t seed = 1;
};

struct NmdTraceRow {
  int step = 0;
  double alpha = 0.0;
  double sigma = 0.0;
  double loss = 0.0;
  double acc_blurry = 0.0;
  double acc_noisy = 0.0;
  bool alpha_changed = false;
  bool sigma_changed = false;
};

struct NmdTrainResult {
  Nmd nmd;
  AdamState adam;
  CurriculumState curriculum;
  std::vector<NmdTraceRow> trace;  // one row per validation
  double final_loss = 0.0;
  int steps = 0;
  bool reached_terminal = false;
};

// Learning rate used at 1-based `step`.
double annealed_lr(const NmdTrainConfig& config, int step);

// ADAM on nmd_bce_loss over make_nmd_batch batches from `train_pool`;
// validation on `val_pool` every `validate_every` steps with fresh negatives
// at the current alpha and sigma. Stops at the terminal curriculum state or
// after max_steps. A non-finite loss raises DivergenceError.
NmdTrainResult train_nmd(const std::vector<Tensor>& train_pool, const std::vector<Tensor>& val_pool,
                         const NmdTrainConfig& config, const ResamplerSpec& spec);

// Accuracy (threshold 0.5) of `nmd` on a batch.
double nmd_accuracy(const Nmd& nmd, const NmdBatch& batch);

// Mean score over non-overlapping patch_size tiles (partial tiles at the
// right/bottom border are dropped). Images smaller than a tile are scored
// whole.
double nmd_score(const Nmd& nmd, const Tensor& image);

}  // namespace natsr
