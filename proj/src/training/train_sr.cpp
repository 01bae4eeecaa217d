#include <cmath>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "natsr/error.hpp"
#include "natsr/image.hpp"
#include "natsr/manifold.hpp"
#include "natsr/metrics.hpp"
#include "natsr/ops.hpp"
#include "natsr/patches.hpp"
#include "natsr/training.hpp"

namespace natsr {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kEvalChunk = 8;

void check_finite(double v, const char* what, int step, const ParameterSet& last_good) {
  if (std::isfinite(v)) return;
  throw TrainingDiverged(std::string("train_sr: ") + what + " is " + std::to_string(v) + " at step " +
                             std::to_string(step + 1),
                         step, last_good);
}

double batch_mean(const Var& v, const Graph& g) {
  const Tensor& t = g.value(v);
  double s = 0.0;
  for (double x : t.data()) s += x;
  return s / static_cast<double>(t.size());
}

bool same_layout(const ParameterSet& a, const ParameterSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].name != b[i].name || a[i].value.shape() != b[i].value.shape()) return false;
  return true;
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.scale != 2 && c.scale != 4) throw ValueError("scale must be 2 or 4");
  if (c.lr_patch <= 0 || c.lr_patch % 8 != 0) {
    throw ValueError("lr_patch must be a positive multiple of 8, got " + std::to_string(c.lr_patch));
  }
  if (c.batch_size <= 0) throw ValueError("batch_size must be positive");
  if (c.steps < 0) throw ValueError("steps must be non-negative");
  if (!(c.lr > 0.0)) throw ValueError("lr must be positive");
  if (!(c.halve_at > 0.0 && c.halve_at <= 1.0)) throw ValueError("halve_at must lie in (0, 1]");
  if (c.eval_every <= 0) throw ValueError("eval_every must be positive");
  if (c.val_patches <= 0) throw ValueError("val_patches must be positive");
  if (c.val_lr_patch <= 0 || c.val_lr_patch % 8 != 0) {
    throw ValueError("val_lr_patch must be a positive multiple of 8, got " + std::to_string(c.val_lr_patch));
  }
  if (!(c.collapse_gap > 0.0) || c.collapse_patience <= 0) throw ValueError("collapse detector settings must be positive");
}

ResamplerSpec resampler(const TrainConfig& c) { return {c.scale, c.kernel}; }

double learning_rate(const TrainConfig& c, int step) {
  const int halve_step = static_cast<int>(std::lround(c.halve_at * c.steps));
  return step < halve_step ? c.lr : 0.5 * c.lr;
}

SrPairs validation_pairs(const std::vector<Tensor>& images, const TrainConfig& c) {
  if (images.empty()) throw ValueError("validation_pairs: no validation images");
  std::mt19937_64 unused(0);
  std::vector<Tensor> tiles;
  for (int lr_extent = c.val_lr_patch; lr_extent >= 8 && tiles.empty(); lr_extent -= 8) {
    const int size = lr_extent * c.scale;
    for (const Tensor& img : images) {
      if (image_height(img) < size || image_width(img) < size) continue;
      for (Tensor& t : extract_patches(img, {.size = size, .stride = size}, unused)) tiles.push_back(std::move(t));
    }
  }
  if (tiles.empty()) {
    throw ValueError("validation_pairs: every validation image is smaller than " + std::to_string(8 * c.scale));
  }
  // Evenly spaced subset so every image contributes.
  std::vector<Tensor> chosen;
  const std::size_t n = std::min<std::size_t>(tiles.size(), c.val_patches);
  for (std::size_t i = 0; i < n; ++i) chosen.push_back(tiles[i * tiles.size() / n]);
  SrPairs p;
  p.hr = stack_batch(chosen);
  p.lr = degrade(p.hr, resampler(c));
  return p;
}

SrTraceRow evaluate_generator(const Generator& gen, const SrPairs& pairs, const ResamplerSpec& spec, const Nmd* nmd) {
  SrTraceRow row;
  const int n = pairs.hr.dim(0);
  double psnr_sum = 0.0, bic_sum = 0.0, plaus_sum = 0.0, nmd_sum = 0.0;
  for (int begin = 0; begin < n; begin += kEvalChunk) {
    std::vector<Tensor> lr_items;
    for (int i = begin; i < std::min(n, begin + kEvalChunk); ++i) lr_items.push_back(batch_item(pairs.lr, i));
    const Tensor sr = gen.forward_sr(stack_batch(lr_items));
    for (int j = 0; j < static_cast<int>(lr_items.size()); ++j) {
      const Tensor hr = batch_item(pairs.hr, begin + j);
      const Tensor out = batch_item(sr, j);
      Tensor bicubic = interpolate(lr_items[j], spec);
      clip_unit(bicubic);
      psnr_sum += psnr(out, hr);
      bic_sum += psnr(bicubic, hr);
      plaus_sum += verify_membership(out, lr_items[j], spec);
      if (nmd) nmd_sum += nmd_score(*nmd, out);
    }
  }
  row.val_psnr = psnr_sum / n;
  row.bicubic_psnr = bic_sum / n;
  row.plausibility = plaus_sum / n;
  row.nmd_score = nmd ? nmd_sum / n : kNaN;
  return row;
}

SrTrainResult train_sr(const SrDataset& data, const GeneratorConfig& gen_config, const TrainConfig& config,
                       const LossWeights& weights, Nmd* nmd, const Generator* init, const GanDiscConfig& disc_config) {
  validate(config);
  validate(weights);
  validate(gen_config);
  if (gen_config.scale != config.scale) throw ValueError("train_sr: generator scale differs from training scale");
  if (weights.natural > 0.0 && !nmd) throw ValueError("train_sr: natural-loss weight is non-zero but no NMD was given");
  if (data.train.empty()) throw ValueError("train_sr: empty training set");
  const ResamplerSpec spec = resampler(config);
  const int hr_size = config.lr_patch * config.scale;
  const int bsz = config.batch_size;

  SrTrainResult r;
  r.generator = Generator(gen_config, config.seed);
  if (init) {
    if (!same_layout(init->params(), r.generator.params())) {
      throw ValueError("train_sr: warm-start generator does not match the generator config");
    }
    r.generator = Generator(gen_config, init->params());
  }
  r.adam = make_adam_state(r.generator.params());
  const bool adversarial = weights.adversarial > 0.0;
  if (adversarial) {
    // Independent stream; the data stream below is shared with FRSR runs.
    r.discriminator.emplace(disc_config, config.seed * 3 + 7);
    r.disc_adam = make_adam_state(r.discriminator->params());
  }
  std::mt19937_64 data_rng(config.seed * 2 + 1);
  std::uniform_int_distribution<std::size_t> pick(0, data.train.size() - 1);
  const SrPairs val = validation_pairs(data.val.empty() ? data.train : data.val, config);

  SrTraceRow row0 = evaluate_generator(r.generator, val, spec, nmd);
  row0.lr = learning_rate(config, 0);
  row0.loss = row0.recon = row0.natural = row0.adv_g = row0.adv_d = kNaN;
  r.trace.push_back(row0);

  int gap_streak = 0;
  bool warned_since_eval = false;
  double recon_v = 0, natural_v = 0, adv_g_v = 0, adv_d_v = 0, total_v = 0;
  for (int step = 0; step < config.steps; ++step) {
    std::vector<Tensor> patches;
    for (int b = 0; b < bsz; ++b) {
      const Tensor& img = data.train[pick(data_rng)];
      patches.push_back(extract_patches(img, {.size = hr_size, .count = 1, .align = config.scale}, data_rng)[0]);
    }
    const Tensor hr = stack_batch(patches);
    const Tensor lr = degrade(hr, spec);
    const double lr_now = learning_rate(config, step);

    Graph g;
    Var sr = r.generator.forward(g, g.constant(lr));
    Var hr_v = g.constant(hr);

    if (adversarial) {
      GanDiscriminator& d = *r.discriminator;
      Graph gd;
      Var both = ops::concat_batch(gd, {gd.constant(hr), gd.constant(g.value(sr))});
      Var c = d.forward(gd, both, true, true);
      Var c_real = ops::slice_batch(gd, c, 0, bsz), c_fake = ops::slice_batch(gd, c, bsz, 2 * bsz);
      Var loss_d = ragan_losses(gd, c_real, c_fake).discriminator;
      adv_d_v = gd.value(loss_d).item();
      check_finite(adv_d_v, "discriminator loss", step, r.generator.params());
      d.params().zero_grad();
      gd.backward(loss_d);
      adam_step(d.params(), r.disc_adam, lr_now);

      const double gap = batch_mean(c_real, gd) - batch_mean(c_fake, gd);
      gap_streak = std::abs(gap) > config.collapse_gap ? gap_streak + 1 : 0;
      if (gap_streak == config.collapse_patience) {
        spdlog::warn("train_sr: discriminator logit gap {:.2f} above {:.2f} for {} steps (step {})", gap,
                     config.collapse_gap, config.collapse_patience, step + 1);
        r.collapse_warned = warned_since_eval = true;
      }
    }

    Var recon = recon_loss(g, sr, hr_v);
    std::optional<Var> natural, adv;
    if (weights.natural > 0.0) natural = natural_loss(g, *nmd, sr);
    if (adversarial) {
      Var c = r.discriminator->forward(g, ops::concat_batch(g, {hr_v, sr}), false, false);
      adv = ragan_losses(g, ops::slice_batch(g, c, 0, bsz), ops::slice_batch(g, c, bsz, 2 * bsz)).generator;
    }
    Var total = total_loss(g, recon, natural, adv, weights);
    total_v = g.value(total).item();
    check_finite(total_v, "generator loss", step, r.generator.params());
    recon_v = g.value(recon).item();
    natural_v = natural ? g.value(*natural).item() : kNaN;
    adv_g_v = adv ? g.value(*adv).item() : kNaN;
    if (!adversarial) adv_d_v = kNaN;
    r.generator.params().zero_grad();
    g.backward(total);
    adam_step(r.generator.params(), r.adam, lr_now);
    r.steps = step + 1;

    if (r.steps % config.eval_every == 0 || r.steps == config.steps) {
      SrTraceRow row = evaluate_generator(r.generator, val, spec, nmd);
      row.step = r.steps;
      row.lr = lr_now;
      row.loss = total_v;
      row.recon = recon_v;
      row.natural = natural_v;
      row.adv_g = adv_g_v;
      row.adv_d = adv_d_v;
      row.collapse_warning = warned_since_eval;
      warned_since_eval = false;
      r.trace.push_back(row);
      spdlog::info("sr step {:5d}  loss {:.5f}  val psnr {:.3f} (bicubic {:.3f})  plausibility {:.2f}  nmd {:.4f}",
                   row.step, row.loss, row.val_psnr, row.bicubic_psnr, row.plausibility, row.nmd_score);
    }
  }
  return r;
}

SrTrainResult train_frsr(const SrDataset& data, const GeneratorConfig& gen_config, const TrainConfig& config) {
  return train_sr(data, gen_config, config, LossWeights::frsr());
}

SrTrainResult train_natsr(const SrDataset& data, Nmd& nmd, const GeneratorConfig& gen_config,
                          const TrainConfig& config, const Generator* init, const LossWeights& weights,
                          const GanDiscConfig& disc_config) {
  return train_sr(data, gen_config, config, weights, &nmd, init, disc_config);
}

std::string trace_csv(const std::vector<SrTraceRow>& trace) {
  std::ostringstream os;
  os.precision(10);
  os << "step,lr,loss,recon,natural,adv_g,adv_d,val_psnr,bicubic_psnr,nmd_score,plausibility,collapse_warning\n";
  for (const SrTraceRow& r : trace) {
    os << r.step << ',' << r.lr << ',' << r.loss << ',' << r.recon << ',' << r.natural << ',' << r.adv_g << ','
       << r.adv_d << ',' << r.val_psnr << ',' << r.bicubic_psnr << ',' << r.nmd_score << ',' << r.plausibility << ','
       << (r.collapse_warning ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string trace_csv(const std::vector<NmdTraceRow>& trace) {
  std::ostringstream os;
  os.precision(10);
  os << "step,alpha,sigma,loss,acc_blurry,acc_noisy,alpha_changed,sigma_changed\n";
  for (const NmdTraceRow& r : trace) {
    os << r.step << ',' << r.alpha << ',' << r.sigma << ',' << r.loss << ',' << r.acc_blurry << ',' << r.acc_noisy
       << ',' << (r.alpha_changed ? 1 : 0) << ',' << (r.sigma_changed ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace natsr
