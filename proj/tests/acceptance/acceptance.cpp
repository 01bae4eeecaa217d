// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// when any criterion fails. `--only 3,7` restricts the run; criteria that
// need trained networks train their prerequisites first.
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>

#include "CLI11.hpp"
#include "natsr/checkpoint.hpp"
#include "natsr/config.hpp"
#include "natsr/dataset.hpp"
#include "natsr/dct.hpp"
#include "natsr/evaluation.hpp"
#include "natsr/gradcheck.hpp"
#include "natsr/image.hpp"
#include "natsr/manifold.hpp"
#include "natsr/metrics.hpp"
#include "natsr/nmd.hpp"
#include "natsr/patches.hpp"
#include "natsr/pipeline.hpp"
#include "natsr/png_io.hpp"
#include "natsr/runtime.hpp"
#include "natsr/resample.hpp"
#include "natsr/training.hpp"

using namespace natsr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Tensor random_image(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t = make_image(h, w, 3);
  for (double& v : t.data()) v = u(rng);
  return t;
}

// Run configurations for the trained criteria, one RunConfig document each.
struct Plan {
  RunConfig nmd, frsr, natsr;
};

Plan load_plan() {
  std::ifstream in(std::string(NATSR_SOURCE_DIR) + "/configs/acceptance.json");
  if (!in) throw IoError("acceptance: configs/acceptance.json not found");
  const nlohmann::json doc = nlohmann::json::parse(in);
  return {parse_config(doc.at("nmd")), parse_config(doc.at("frsr")), parse_config(doc.at("natsr"))};
}

// 64×64 crops of the bundled photographs with visible texture.
std::vector<Tensor> natural_patches(int count, int align) {
  const auto images = load_image_dir(std::string(NATSR_SOURCE_DIR) + "/data/natural");
  std::mt19937_64 rng(11);
  PatchOptions opt;
  opt.size = 64;
  opt.count = (count + static_cast<int>(images.size()) - 1) / static_cast<int>(images.size());
  opt.align = align;
  opt.min_gradient = 0.02;
  std::vector<Tensor> out;
  for (const NamedImage& img : images)
    for (Tensor& p : extract_patches(img.image, opt, rng)) out.push_back(std::move(p));
  return out;
}

// ---- analytic criteria ----

Outcome ac1() {
  Stopwatch clock;
  double worst = 0.0;
  int cases = 0;
  std::mt19937_64 rng(1);
  for (int scale : {2, 4}) {
    const ResamplerSpec spec{scale, KernelKind::kIdeal};
    for (int trial = 0; trial < 4; ++trial) {
      const Tensor hr = random_image(64, 64, rng);
      for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const BlurrySample s = synth_blurry(hr, spec, alpha);
        const Tensor back = degrade(s.image, spec);
        for (std::size_t i = 0; i < back.size(); ++i) worst = std::max(worst, std::abs(back[i] - s.lr[i]));
        ++cases;
      }
    }
  }
  const double t = clock.seconds();
  return {worst < 1e-6 && t < 5.0,
          fmt::format("{} cases (x2, x4): max |degrade(I_A) - I_LR| = {:.3e} (< 1e-6), {:.2f} s (< 5 s)", cases, worst, t)};
}

Outcome ac2() {
  const ResamplerSpec spec{4, KernelKind::kBicubic};
  const std::vector<Tensor> patches = natural_patches(24, 4);
  double worst = std::numeric_limits<double>::infinity();
  double worst_alpha = 0.0;
  std::vector<double> at_zero;
  for (const Tensor& hr : patches) {
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const BlurrySample s = synth_blurry(hr, spec, alpha);
      const double p = verify_membership(s.image, s.lr, spec);
      if (alpha == 0.0) at_zero.push_back(p);
      if (p < worst) {
        worst = p;
        worst_alpha = alpha;
      }
    }
  }
  const Summary z = summarize(at_zero);
  return {worst >= 45.0 && patches.size() >= 20,
          fmt::format("{} natural patches x 5 alphas: min PSNR {:.2f} dB at alpha {:.2f} (>= 45 dB); "
                      "alpha 0 mean {:.2f} dB",
                      patches.size(), worst, worst_alpha, z.mean)};
}

// Set B is defined by the injection alone, so membership is measured on the
// unclipped samples; the clipped variant the NMD trains on is reported too.
Outcome ac3() {
  const std::vector<Tensor> patches = natural_patches(24, 4);
  const DctLayout layout = DctLayout::standard();
  const ResamplerSpec bicubic{4, KernelKind::kBicubic};
  const ResamplerSpec ideal{4, KernelKind::kIdeal};
  const double inf = std::numeric_limits<double>::infinity();
  double worst_bicubic = inf, worst_ideal = inf, worst_clipped = inf;
  NoisyOptions raw;
  raw.clip = false;
  raw.log_clipping = false;
  NoisyOptions stopband = raw;
  stopband.restrict_to_stopband_scale = 4;
  NoisyOptions clipped;
  clipped.log_clipping = false;
  std::uint64_t seed = 100;
  for (const Tensor& hr : patches) {
    const Tensor lr_b = degrade(hr, bicubic);
    worst_bicubic = std::min(worst_bicubic, verify_membership(synth_noisy(hr, 0.1, layout, seed, raw).image, lr_b, bicubic));
    worst_clipped =
        std::min(worst_clipped, verify_membership(synth_noisy(hr, 0.1, layout, seed, clipped).image, lr_b, bicubic));
    const NoisySample i = synth_noisy(hr, 0.1, layout, seed, stopband);
    worst_ideal = std::min(worst_ideal, verify_membership(i.image, degrade(hr, ideal), ideal));
    ++seed;
  }
  return {worst_bicubic >= 40.0 && worst_ideal >= 60.0,
          fmt::format("{} patches, sigma 0.1: bicubic min {:.2f} dB (>= 40), ideal+stopband min {:.2f} dB (>= 60); "
                      "after [0,1] clipping, bicubic min {:.2f} dB",
                      patches.size(), worst_bicubic, worst_ideal, worst_clipped)};
}

Outcome ac4() {
  const DctLayout layout = DctLayout::standard();
  std::mt19937_64 rng(4);
  const Tensor img = random_image(64, 48, rng);
  const Tensor coef = dct2_blockwise(img, layout);
  const Tensor back = idct2_blockwise(coef, layout);
  double round_trip = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) round_trip = std::max(round_trip, std::abs(back[i] - img[i]));

  double parseval = 0.0;
  for (int by = 0; by < 64; by += 8)
    for (int bx = 0; bx < 48; bx += 8)
      for (int c = 0; c < 3; ++c) {
        double e_img = 0.0, e_coef = 0.0;
        for (int y = by; y < by + 8; ++y)
          for (int x = bx; x < bx + 8; ++x) {
            e_img += img.at(0, y, x, c) * img.at(0, y, x, c);
            e_coef += coef.at(0, y, x, c) * coef.at(0, y, x, c);
          }
        parseval = std::max(parseval, std::abs(e_img - e_coef));
      }

  const Tensor flat = make_image(8, 8, 1, 0.3);
  const Tensor fc = dct2_blockwise(flat, layout);
  double leak = 0.0;
  for (std::size_t i = 1; i < fc.size(); ++i) leak = std::max(leak, std::abs(fc[i]));
  const bool dc_ok = std::abs(fc[0] - 8 * 0.3) < 1e-12 && leak < 1e-12;
  return {round_trip < 1e-10 && parseval < 1e-10 && dc_ok,
          fmt::format("round trip {:.2e}, Parseval gap {:.2e}, constant block DC {:.6f} (2.4) with max AC {:.1e}",
                      round_trip, parseval, fc[0], leak)};
}

Outcome ac5() {
  Stopwatch clock;
  std::vector<OpCheck> checks = registered_op_checks();
  for (OpCheck& c : loss_checks()) checks.push_back(std::move(c));
  int failed = 0;
  double worst = 0.0, worst_sn = 0.0;
  std::string names;
  for (const OpCheck& c : checks) {
    const GradCheckRow row = run_op_check(c);
    if (!row.passed()) {
      ++failed;
      names += " " + row.name;
    }
    double& bucket = row.tolerance > 1e-4 ? worst_sn : worst;  // the looser tolerance is the SN composite
    bucket = std::max(bucket, row.max_rel_error);
  }
  const double t = clock.seconds();
  return {failed == 0 && t < 60.0,
          fmt::format("{} ops, {} failed{}; max rel err {:.2e} (< 1e-4), spectral norm {:.2e} (< 1e-3), {:.1f} s (< 60 s)",
                      checks.size(), failed, names, worst, worst_sn, t)};
}

Outcome ac6() {
  Stopwatch clock;
  const CurriculumConfig c;
  CurriculumState s = initial_curriculum(c);
  std::vector<double> alphas = {s.alpha(c)};
  std::vector<double> sigmas = {s.sigma};
  for (int v = 0; v < 10000 && !s.terminal(c); ++v) {
    record_validation(s, c, 0.95, 0.95);
    const CurriculumEvents e = curriculum_update(s, c);
    if (e.alpha_changed) alphas.push_back(s.alpha(c));
    if (e.sigma_changed) sigmas.push_back(s.sigma);
  }
  bool ok = alphas.size() == 4 && s.alpha_updates == 3;
  const double expect_alpha[] = {0.5, 0.6, 0.7, 0.8};
  for (std::size_t i = 0; ok && i < 4; ++i) ok = std::abs(alphas[i] - expect_alpha[i]) < 1e-12;
  double sigma_err = 0.0;
  for (std::size_t k = 0; k < sigmas.size(); ++k)
    sigma_err = std::max(sigma_err, std::abs(sigmas[k] - 0.1 * std::pow(0.8, static_cast<double>(k))));
  const int k = static_cast<int>(sigmas.size()) - 1;
  ok = ok && k == 14 && sigmas.back() <= 0.0044 && sigma_err < 1e-15;
  const double t = clock.seconds();
  std::string path;
  for (double a : alphas) path += fmt::format("{}{:.1f}", path.empty() ? "" : "->", a);
  return {ok && t < 1.0, fmt::format("alpha {} ({} updates); sigma 0.1*0.8^k to k = {}: {:.7f} (<= 0.0044), "
                                     "max deviation {:.1e}, {:.3f} s",
                                     path, s.alpha_updates, k, sigmas.back(), sigma_err, t)};
}

Outcome ac8() {
  const double two_ln2 = 2.0 * std::numbers::ln2;
  double equal_err = 0.0;
  for (double logit : {-3.0, 0.0, 0.7, 5.0}) {
    const RaganValues v = ragan_values(std::vector<double>(6, logit), std::vector<double>(6, logit));
    equal_err = std::max({equal_err, std::abs(v.generator - two_ln2), std::abs(v.discriminator - two_ln2)});
  }
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.5);
  std::vector<double> real(8), fake(8);
  for (double& r : real) r = n(rng);
  for (double& f : fake) f = n(rng);
  const RaganValues base = ragan_values(real, fake);
  double shift_err = 0.0;
  for (double shift : {-2.5, 0.3, 4.0}) {
    std::vector<double> rs = real, fs = fake;
    for (double& r : rs) r += shift;
    for (double& f : fs) f += shift;
    const RaganValues v = ragan_values(rs, fs);
    shift_err = std::max({shift_err, std::abs(v.generator - base.generator), std::abs(v.discriminator - base.discriminator)});
  }
  const RaganValues swapped = ragan_values(fake, real);
  const bool swap_ok = swapped.generator == base.discriminator && swapped.discriminator == base.generator;
  return {equal_err < 1e-9 && shift_err < 1e-10 && swap_ok,
          fmt::format("equal logits |L - 2 ln 2| = {:.1e} (< 1e-9); shift invariance {:.1e} (< 1e-10); swap exact: {}",
                      equal_err, shift_err, swap_ok ? "yes" : "no")};
}

Outcome ac11() {
  std::mt19937_64 rng(11);
  const Tensor a = random_image(48, 40, rng);
  const double self = ssim(a, a);
  Tensor b = a;
  for (double& v : b.data()) v += 0.1;
  const double p = psnr(a, b);

  const ResamplerSpec spec{4, KernelKind::kBicubic};
  std::vector<EvalItem> items;
  for (int i = 0; i < 5; ++i) {
    Tensor hr = random_image(32, 32, rng);
    Tensor sr = interpolate(degrade(hr, spec), spec);
    clip_unit(sr);
    items.push_back({"img" + std::to_string(i), sr, hr, degrade(hr, spec)});
  }
  const EvalReport r = evaluate_set("bicubic", "random", items, spec);
  std::vector<double> ps, ss, pl;
  for (const EvalItem& it : items) {
    ps.push_back(psnr(it.sr, it.hr));
    ss.push_back(ssim(it.sr, it.hr));
    pl.push_back(plausibility(it.sr, *it.lr, spec));
  }
  double agg_err = 0.0;
  for (auto [got, vals] : {std::pair{r.aggregate.psnr_rgb, ps}, std::pair{r.aggregate.ssim, ss},
                           std::pair{r.aggregate.plausibility, pl}}) {
    double mean = 0.0, var = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    for (double v : vals) var += (v - mean) * (v - mean);
    agg_err = std::max({agg_err, std::abs(got.mean - mean), std::abs(got.stddev - std::sqrt(var / vals.size()))});
  }
  return {self == 1.0 && std::abs(p - 20.0) < 1e-6 && agg_err < 1e-9,
          fmt::format("SSIM(a,a) = {:.17g}; PSNR at 0.1 error = {:.9f} dB; aggregate gap {:.1e} (< 1e-9)", self, p,
                      agg_err)};
}

// ---- trained criteria ----

struct Shared {
  Plan plan;
  std::optional<Corpus> nmd_corpus, sr_corpus;
  std::optional<NmdTrainResult> nmd;
  std::optional<NmdPools> pools;
  std::optional<SrTrainResult> frsr;
  double nmd_seconds = 0.0, frsr_seconds = 0.0;

  const Corpus& corpus_for_nmd() {
    if (!nmd_corpus) nmd_corpus = load_run_corpus(plan.nmd);
    return *nmd_corpus;
  }
  const Corpus& corpus_for_sr() {
    if (!sr_corpus) sr_corpus = load_run_corpus(plan.frsr);
    return *sr_corpus;
  }
  NmdTrainResult& trained_nmd() {
    if (!nmd) {
      pools = nmd_pools(corpus_for_nmd(), plan.nmd);
      Stopwatch clock;
      nmd = train_nmd(pools->train, pools->val, plan.nmd.nmd, plan.nmd.resampler);
      nmd_seconds = clock.seconds();
    }
    return *nmd;
  }
  SrTrainResult& trained_frsr() {
    if (!frsr) {
      const Corpus& c = corpus_for_sr();
      Stopwatch clock;
      frsr = train_frsr({c.train, c.val}, plan.frsr.generator, plan.frsr.train);
      frsr_seconds = clock.seconds();
    }
    return *frsr;
  }
};

Outcome ac7(Shared& sh) {
  const NmdTrainResult& r = sh.trained_nmd();
  const NmdSeparation s = nmd_separation(r.nmd, sh.pools->val, sh.plan.nmd.resampler, 0.5, 0.1, 7000);
  return {s.natural > 0.9 && s.blurry < 0.1 && s.noisy < 0.1 && sh.nmd_seconds <= 600.0,
          fmt::format("{} held-out patches: natural {:.4f} (> 0.9), blurry(0.5) {:.4f} (< 0.1), noisy(0.1) {:.4f} "
                      "(< 0.1); {} steps, final alpha {:.2f} sigma {:.4f}, {:.0f} s (<= 600 s)",
                      sh.pools->val.size(), s.natural, s.blurry, s.noisy, r.steps,
                      r.curriculum.alpha(sh.plan.nmd.nmd.curriculum), r.curriculum.sigma, sh.nmd_seconds)};
}

Outcome ac9(Shared& sh) {
  const SrTrainResult& r = sh.trained_frsr();
  const SrTraceRow& last = r.trace.back();
  const double gain = last.val_psnr - last.bicubic_psnr;
  return {r.generator.config().scale == 4 && gain >= 0.3 && sh.frsr_seconds <= 1800.0,
          fmt::format("x4, {} steps: val PSNR {:.3f} dB vs bicubic {:.3f} dB, gain {:+.3f} dB (>= +0.3); {:.0f} s "
                      "(<= 1800 s)",
                      r.steps, last.val_psnr, last.bicubic_psnr, gain, sh.frsr_seconds)};
}

Outcome ac10(Shared& sh) {
  NmdTrainResult& nmd = sh.trained_nmd();
  const SrTrainResult& init = sh.trained_frsr();
  const Corpus& c = sh.corpus_for_sr();
  const RunConfig& cfg = sh.plan.natsr;
  Stopwatch clock;
  const SrTrainResult r = train_natsr({c.train, c.val}, nmd.nmd, cfg.generator, cfg.train, &init.generator, cfg.loss,
                                      cfg.discriminator);
  const SrTraceRow& first = r.trace.front();
  const SrTraceRow& last = r.trace.back();
  return {last.nmd_score > first.nmd_score && last.plausibility >= 35.0,
          fmt::format("{} steps: NMD score {:.4f} -> {:.4f} (strict increase); final plausibility {:.2f} dB (>= 35); "
                      "val PSNR {:.2f} dB; {:.0f} s",
                      r.steps, first.nmd_score, last.nmd_score, last.plausibility, last.val_psnr, clock.seconds())};
}

// Small seeded runs repeated from scratch must agree bit for bit, and every
// checkpoint kind must survive a save/load round trip unchanged.
Outcome ac12(Shared& sh) {
  RunConfig c = sh.plan.nmd;
  c.nmd.max_steps = 60;
  c.nmd.curriculum.validate_every = 20;
  c.data.nmd_patches = 16;
  const Corpus& corpus = sh.corpus_for_nmd();
  const NmdTrainResult n1 = run_train_nmd(c, corpus);
  const NmdTrainResult n2 = run_train_nmd(c, corpus);

  RunConfig g = sh.plan.natsr;
  g.train.steps = 6;
  g.train.eval_every = 3;
  g.train.val_patches = 4;
  const Corpus& src = sh.corpus_for_sr();
  const SrDataset data{src.train, src.val};
  Nmd nmd1 = n1.nmd, nmd2 = n2.nmd;
  const SrTrainResult s1 = train_natsr(data, nmd1, g.generator, g.train, nullptr, g.loss, g.discriminator);
  const SrTrainResult s2 = train_natsr(data, nmd2, g.generator, g.train, nullptr, g.loss, g.discriminator);
  const bool reproducible = n1.nmd.params().identical(n2.nmd.params()) &&
                            s1.generator.params().identical(s2.generator.params()) &&
                            s1.discriminator->params().identical(s2.discriminator->params()) &&
                            trace_csv(s1.trace) == trace_csv(s2.trace) && trace_csv(n1.trace) == trace_csv(n2.trace);

  const std::string dir = std::filesystem::temp_directory_path().string() + "/natsr_acceptance_" +
                          std::to_string(std::random_device{}());
  std::filesystem::create_directories(dir);
  bool round_trip = true;
  std::size_t tensors = 0;
  for (const Checkpoint& ck : {nmd_checkpoint(c, n1), generator_checkpoint(g, s1), discriminator_checkpoint(g, s1)}) {
    const std::string file = dir + "/" + kind_tag(ck.kind) + ".ckpt";
    save_checkpoint(ck, file);
    const Checkpoint back = load_checkpoint(file, ck.kind);
    round_trip = round_trip && back.params.identical(ck.params) && back.config == ck.config;
    if (ck.adam && back.adam) {
      for (std::size_t i = 0; i < ck.adam->m.size(); ++i)
        round_trip = round_trip && back.adam->m[i].identical(ck.adam->m[i]) && back.adam->v[i].identical(ck.adam->v[i]);
    } else {
      round_trip = round_trip && !ck.adam && !back.adam;
    }
    tensors += ck.params.size();
  }
  std::filesystem::remove_all(dir);
  return {reproducible && round_trip,
          fmt::format("repeated seeded NMD + NatSR runs identical: {}; {} tensors over 3 checkpoint kinds round-trip "
                      "bitwise: {}",
                      reproducible ? "yes" : "no", tensors, round_trip ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string log_level = "warn";
  app.add_option("--only", only, "Criterion numbers to run")->delimiter(',')->check(CLI::Range(1, 12));
  app.add_option("--log-level", log_level, "spdlog level for training progress");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  Shared shared;
  try {
    shared.plan = load_plan();
  } catch (const std::exception& e) {
    std::cerr << "cannot load acceptance plan: " << e.what() << "\n";
    return 1;
  }

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, ac1},
      {2, ac2},
      {3, ac3},
      {4, ac4},
      {5, ac5},
      {6, ac6},
      {7, [&] { return ac7(shared); }},
      {8, ac8},
      {9, [&] { return ac9(shared); }},
      {10, [&] { return ac10(shared); }},
      {11, ac11},
      {12, [&] { return ac12(shared); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << fmt::format("AC{:<2} {}  {}", id, o.pass ? "PASS" : "FAIL", o.detail) << std::endl;
  }
  std::cout << fmt::format("{} criteria failed", failures) << std::endl;
  return failures == 0 ? 0 : 1;
}
