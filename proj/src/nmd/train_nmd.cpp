#include <cmath>

#include <spdlog/spdlog.h>

#include "natsr/error.hpp"
#include "natsr/nmd.hpp"

namespace natsr {

double annealed_lr(const NmdTrainConfig& config, int step) {
  if (config.lr_final_fraction == 1.0 || config.max_steps <= 1) return config.lr;
  const double t = static_cast<double>(step - 1) / (config.max_steps - 1);
  const double f = config.lr_final_fraction + (1.0 - config.lr_final_fraction) * 0.5 * (1.0 + std::cos(M_PI * t));
  return config.lr * f;
}

NmdTrainResult train_nmd(const std::vector<Tensor>& train_pool, const std::vector<Tensor>& val_pool,
                         const NmdTrainConfig& config, const ResamplerSpec& spec) {
  if (train_pool.empty()) throw ValueError("train_nmd: empty training pool");
  if (val_pool.empty()) throw ValueError("train_nmd: empty validation pool");
  if (config.max_steps < 0 || config.batch_size <= 0 || config.val_batch_size <= 0) {
    throw ValueError("train_nmd: steps and batch sizes must be positive");
  }
  const CurriculumConfig& cc = config.curriculum;
  if (!(config.lr_final_fraction > 0.0 && config.lr_final_fraction <= 1.0)) {
    throw ValueError("train_nmd: lr_final_fraction must lie in (0, 1]");
  }
  if (cc.validate_every <= 0) throw ValueError("train_nmd: validate_every must be positive");

  NmdTrainResult r;
  r.nmd = Nmd(config.net, config.seed);
  r.adam = make_adam_state(r.nmd.params());
  r.curriculum = initial_curriculum(cc);
  // Separate streams keep validation draws from perturbing the training
  // batches.
  std::mt19937_64 batch_rng(config.seed * 2 + 1);
  std::mt19937_64 val_rng(config.seed * 2 + 2);

  for (int step = 1; step <= config.max_steps; ++step) {
    const double alpha = r.curriculum.alpha(cc), sigma = r.curriculum.sigma;
    NmdBatch batch = make_nmd_batch(train_pool, {config.batch_size, alpha, sigma, NegativeMix::kBalanced}, spec,
                                    batch_rng);
    Graph g;
    Var preds = r.nmd.forward(g, g.constant(std::move(batch.images)));
    Var loss = nmd_bce_loss(g, preds, batch.targets);
    const double value = g.value(loss).item();
    if (!std::isfinite(value)) {
      throw DivergenceError("train_nmd: loss is " + std::to_string(value) + " at step " + std::to_string(step) +
                            " (alpha " + std::to_string(alpha) + ", sigma " + std::to_string(sigma) + ")");
    }
    r.nmd.params().zero_grad();
    g.backward(loss);
    adam_step(r.nmd.params(), r.adam, annealed_lr(config, step));
    r.final_loss = value;
    r.steps = step;

    if (step % cc.validate_every != 0) continue;
    const int vb = 2 * config.val_batch_size;
    NmdBatch blurry = make_nmd_batch(val_pool, {vb, alpha, sigma, NegativeMix::kBlurryOnly}, spec, val_rng);
    NmdBatch noisy = make_nmd_batch(val_pool, {vb, alpha, sigma, NegativeMix::kNoisyOnly}, spec, val_rng);
    NmdTraceRow row{step, alpha, sigma, value, nmd_accuracy(r.nmd, blurry), nmd_accuracy(r.nmd, noisy)};
    record_validation(r.curriculum, cc, row.acc_blurry, row.acc_noisy);
    CurriculumEvents ev = curriculum_update(r.curriculum, cc);
    row.alpha_changed = ev.alpha_changed;
    row.sigma_changed = ev.sigma_changed;
    r.trace.push_back(row);
    spdlog::info("nmd step {:5d}  loss {:.4f}  acc blurry {:.3f} noisy {:.3f}  alpha {:.1f} sigma {:.5f}", step, value,
                 row.acc_blurry, row.acc_noisy, r.curriculum.alpha(cc), r.curriculum.sigma);
    if (r.curriculum.terminal(cc)) {
      r.reached_terminal = true;
      break;
    }
  }
  if (!r.reached_terminal) {
    spdlog::info("train_nmd: step cap {} reached at alpha {:.1f}, sigma {:.5f}", config.max_steps,
                 r.curriculum.alpha(cc), r.curriculum.sigma);
  }
  return r;
}

}  // namespace natsr
