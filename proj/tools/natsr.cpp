// natsr: command-line front end for synthesis, training, inference, and
// evaluation. Exit status: 0 success, 1 runtime failure, 2 usage error.
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "natsr/checkpoint.hpp"
#include "natsr/config.hpp"
#include "natsr/dataset.hpp"
#include "natsr/error.hpp"
#include "natsr/evaluation.hpp"
#include "natsr/gradcheck.hpp"
#include "natsr/image.hpp"
#include "natsr/manifold.hpp"
#include "natsr/pipeline.hpp"
#include "natsr/png_io.hpp"
#include "natsr/runtime.hpp"
#include "natsr/training.hpp"

namespace fs = std::filesystem;
using namespace natsr;

namespace {

constexpr int kUsage = 2;

// Flags shared by every subcommand that reads a run config.
struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string data;

  void attach(CLI::App* app, bool with_data) {
    app->add_option("--config", config, "JSON run config (empty or absent: desk preset)")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Override the config seed");
    app->add_option("--threads", threads, "Thread count; 1 forces determinism mode")->check(CLI::PositiveNumber);
    if (with_data) app->add_option("--data", data, "Image directory (default: NATSR_DATA_DIR, then bundled images)");
  }

  // Overrides go through the JSON echo so seed propagation and validation
  // are the same as for a config file.
  RunConfig resolve() const {
    nlohmann::json doc = config_to_json(config.empty() ? desk_preset() : load_config(config));
    if (seed) doc["seed"] = *seed;
    if (threads) doc["threads"] = *threads;
    if (!data.empty()) doc["data"]["dir"] = data;
    RunConfig c = parse_config(doc);
    if (c.threads > 1) spdlog::info("threads={} requested; the engine runs single-threaded", c.threads);
    spdlog::info("config {}", config_to_json(c).dump());
    return c;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

SrDataset sr_dataset(const Corpus& corpus) { return {corpus.train, corpus.val}; }

void report_final(const std::vector<SrTraceRow>& trace) {
  if (trace.empty()) return;
  const SrTraceRow& last = trace.back();
  std::cout << fmt::format("step {}  val PSNR {:.3f} dB  bicubic {:.3f} dB  NMD {:.4f}  plausibility {:.3f} dB\n",
                           last.step, last.val_psnr, last.bicubic_psnr, last.nmd_score, last.plausibility);
}

// Saves the pre-divergence parameters next to the requested output.
int handle_divergence(const TrainingDiverged& e, const RunConfig& config, const std::string& out) {
  Checkpoint ck;
  ck.kind = NetworkKind::kGenerator;
  ck.config = config_to_json(config);
  ck.params = e.last_good();
  const std::string path = out + ".last-good";
  save_checkpoint(ck, path);
  spdlog::error("{} (step {}); last good generator saved to {}", e.what(), e.step(), path);
  return 1;
}

Tensor crop_to_multiple(const Tensor& img, int m) {
  const int h = image_height(img) / m * m, w = image_width(img) / m * m;
  if (h == 0 || w == 0) throw ShapeError("image smaller than one " + std::to_string(m) + "-pixel block");
  if (h == image_height(img) && w == image_width(img)) return img;
  spdlog::info("cropping {}x{} to {}x{}", image_width(img), image_height(img), w, h);
  return crop(img, 0, 0, 0, h, w);
}

std::map<std::string, fs::path> pngs_by_stem(const std::string& dir) {
  std::map<std::string, fs::path> out;
  for (const NamedImage& n : load_image_dir(dir)) out[n.name] = fs::path(dir) / (n.name + ".png");
  return out;
}

// ---- subcommands ----

struct SynthesizeArgs {
  RunFlags run;
  std::string in, out_dir;
  double alpha = 0.5, sigma = 0.1;
  int bits = 16;
  bool stopband = false;
};

int synthesize(const SynthesizeArgs& a) {
  const RunConfig c = a.run.resolve();
  const ResamplerSpec& spec = c.resampler;
  const Tensor hr = crop_to_multiple(load_image(a.in), 8 * spec.scale);
  fs::create_directories(a.out_dir);
  const BlurrySample blurry = synth_blurry(hr, spec, a.alpha);
  NoisyOptions opts;
  if (a.stopband) opts.restrict_to_stopband_scale = spec.scale;
  const NoisySample noisy = synth_noisy(hr, a.sigma, DctLayout::standard(), c.seed, opts);
  const fs::path dir(a.out_dir);
  save_image(hr, (dir / "hr.png").string(), a.bits);
  save_image(blurry.lr, (dir / "lr.png").string(), a.bits);
  save_image(blurry.image, (dir / "blurry.png").string(), a.bits);
  save_image(noisy.image, (dir / "noisy.png").string(), a.bits);
  std::cout << fmt::format("blurry  alpha={:.3f}  membership {:.3f} dB\n", a.alpha,
                           verify_membership(blurry.image, blurry.lr, spec));
  std::cout << fmt::format("noisy   sigma={:.4f}  membership {:.3f} dB  clipped {:.4f}%\n", a.sigma,
                           verify_membership(noisy.image, blurry.lr, spec), 100.0 * noisy.clip_rate);
  return 0;
}

struct TrainNmdArgs {
  RunFlags run;
  std::string out, trace;
};

int train_nmd_cmd(const TrainNmdArgs& a) {
  const RunConfig c = a.run.resolve();
  const Corpus corpus = load_run_corpus(c);
  const NmdPools pools = nmd_pools(corpus, c);
  spdlog::info("NMD pools: {} train, {} held-out patches", pools.train.size(), pools.val.size());
  const NmdTrainResult r = train_nmd(pools.train, pools.val, c.nmd, c.resampler);
  save_checkpoint(nmd_checkpoint(c, r), a.out);
  if (!a.trace.empty()) write_text(a.trace, trace_csv(r.trace));
  const NmdSeparation s = nmd_separation(r.nmd, pools.val, c.resampler, 0.5, 0.1, c.seed + 1000);
  std::cout << fmt::format("steps {}  alpha {:.2f}  sigma {:.5f}  terminal {}\n", r.steps, r.curriculum.alpha(c.nmd.curriculum),
                           r.curriculum.sigma, r.reached_terminal ? "yes" : "no");
  std::cout << fmt::format("held-out mean score: natural {:.4f}  blurry(0.5) {:.4f}  noisy(0.1) {:.4f}\n", s.natural,
                           s.blurry, s.noisy);
  return 0;
}

struct TrainSrArgs {
  RunFlags run;
  std::string out, trace, nmd, init, disc_out;
};

int train_frsr_cmd(const TrainSrArgs& a) {
  const RunConfig c = a.run.resolve();
  const SrDataset data = sr_dataset(load_run_corpus(c));
  try {
    const SrTrainResult r = train_frsr(data, c.generator, c.train);
    save_checkpoint(generator_checkpoint(c, r), a.out);
    if (!a.trace.empty()) write_text(a.trace, trace_csv(r.trace));
    report_final(r.trace);
  } catch (const TrainingDiverged& e) {
    return handle_divergence(e, c, a.out);
  }
  return 0;
}

int train_natsr_cmd(const TrainSrArgs& a) {
  const RunConfig c = a.run.resolve();
  Nmd nmd = load_nmd(a.nmd);
  std::optional<Generator> init;
  if (!a.init.empty() && c.warm_start) init = load_generator(a.init);
  if (!a.init.empty() && !c.warm_start) spdlog::info("warm_start is false; ignoring --init");
  const SrDataset data = sr_dataset(load_run_corpus(c));
  try {
    const SrTrainResult r =
        train_natsr(data, nmd, c.generator, c.train, init ? &*init : nullptr, c.loss, c.discriminator);
    save_checkpoint(generator_checkpoint(c, r), a.out);
    if (!a.disc_out.empty() && r.discriminator) save_checkpoint(discriminator_checkpoint(c, r), a.disc_out);
    if (!a.trace.empty()) write_text(a.trace, trace_csv(r.trace));
    report_final(r.trace);
    if (r.collapse_warned) spdlog::warn("mode-collapse warning was raised during training");
  } catch (const TrainingDiverged& e) {
    return handle_divergence(e, c, a.out);
  }
  return 0;
}

struct SuperResolveArgs {
  std::string ckpt, in, out;
  int bits = 8;
};

int super_resolve(const SuperResolveArgs& a) {
  const Generator gen = load_generator(a.ckpt);
  const Tensor lr = load_image(a.in);
  const Tensor sr = gen.forward_sr(lr);
  save_image(sr, a.out, a.bits);
  std::cout << fmt::format("{}x{} -> {}x{} (x{})\n", image_width(lr), image_height(lr), image_width(sr),
                           image_height(sr), gen.config().scale);
  return 0;
}

struct EvaluateArgs {
  RunFlags run;
  std::string sr, hr, lr, nmd, method = "method", dataset = "dataset", csv;
  int shave = 0;
};

int evaluate_cmd(const EvaluateArgs& a) {
  const RunConfig c = a.run.resolve();
  const auto sr = pngs_by_stem(a.sr);
  const auto hr = pngs_by_stem(a.hr);
  std::map<std::string, fs::path> lr;
  if (!a.lr.empty()) lr = pngs_by_stem(a.lr);
  std::vector<EvalItem> items;
  for (const auto& [name, path] : sr) {
    auto h = hr.find(name);
    if (h == hr.end()) throw IoError("evaluate: no ground truth for '" + name + "' in " + a.hr);
    EvalItem item{name, load_image(path.string()), load_image(h->second.string()), std::nullopt};
    if (!a.lr.empty()) {
      auto l = lr.find(name);
      if (l == lr.end()) throw IoError("evaluate: no LR input for '" + name + "' in " + a.lr);
      item.lr = load_image(l->second.string());
    }
    items.push_back(std::move(item));
  }
  std::optional<Nmd> nmd;
  if (!a.nmd.empty()) nmd = load_nmd(a.nmd);
  EvalOptions opts;
  opts.shave = a.shave;
  const EvalReport report = evaluate_set(a.method, a.dataset, items, c.resampler, nmd ? &*nmd : nullptr, opts);
  std::cout << report.text();
  if (!a.csv.empty()) write_text(a.csv, report.csv());
  return 0;
}

struct ScoreNmdArgs {
  std::string ckpt, csv;
  std::vector<std::string> dirs;
};

int score_nmd(const ScoreNmdArgs& a) {
  const Nmd nmd = load_nmd(a.ckpt);
  std::vector<NamedSet> sets;
  for (const std::string& d : a.dirs) {
    NamedSet s;
    s.method = fs::path(d).lexically_normal().filename().string();
    if (s.method.empty()) s.method = fs::path(d).lexically_normal().parent_path().filename().string();
    for (NamedImage& n : load_image_dir(d)) s.images.push_back(std::move(n.image));
    sets.push_back(std::move(s));
  }
  const NmdReport report = nmd_report(nmd, sets);
  std::cout << report.text();
  if (!a.csv.empty()) write_text(a.csv, report.csv());
  return 0;
}

struct PlausibilityArgs {
  std::string sr, lr, kernel = "bicubic";
};

int check_plausibility(const PlausibilityArgs& a) {
  const Tensor sr = load_image(a.sr);
  const Tensor lr = load_image(a.lr);
  const int s = image_width(sr) / image_width(lr);
  if (s * image_width(lr) != image_width(sr) || s * image_height(lr) != image_height(sr) || (s != 2 && s != 4)) {
    throw ShapeError(fmt::format("check-plausibility: {}x{} is not a x2 or x4 enlargement of {}x{}", image_width(sr),
                                 image_height(sr), image_width(lr), image_height(lr)));
  }
  ResamplerSpec spec;
  spec.scale = s;
  spec.kernel = parse_kernel(a.kernel);
  std::cout << fmt::format("plausibility {:.4f} dB (x{}, {})\n", plausibility(sr, lr, spec), s, a.kernel);
  return 0;
}

struct GradCheckArgs {
  double eps = 1e-6;
  std::uint64_t seed = 7;
};

int grad_check_cmd(const GradCheckArgs& a) {
  GradCheckOptions opts;
  opts.eps = a.eps;
  opts.seed = a.seed;
  std::vector<OpCheck> checks = registered_op_checks();
  for (OpCheck& c : loss_checks()) checks.push_back(std::move(c));
  bool ok = true;
  std::cout << fmt::format("{:<28} {:>14} {:>10}  {}\n", "op", "max rel err", "tolerance", "result");
  for (const OpCheck& c : checks) {
    const GradCheckRow row = run_op_check(c, opts);
    ok = ok && row.passed();
    std::cout << fmt::format("{:<28} {:>14.3e} {:>10.0e}  {}\n", row.name, row.max_rel_error, row.tolerance,
                             row.passed() ? "pass" : "FAIL");
  }
  std::cout << (ok ? "all checks passed\n" : "some checks FAILED\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  spdlog::set_default_logger(spdlog::stderr_color_st("natsr"));
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

  CLI::App app{"Natural-manifold super-resolution toolkit"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  SynthesizeArgs syn;
  auto* s_syn = app.add_subcommand("synthesize", "Write LR, blurry, and noisy versions of an HR image");
  syn.run.attach(s_syn, false);
  s_syn->add_option("--in", syn.in, "HR PNG")->required()->check(CLI::ExistingFile);
  s_syn->add_option("--out-dir", syn.out_dir, "Output directory")->required();
  s_syn->add_option("--alpha", syn.alpha, "Blur mixing weight")->check(CLI::Range(0.0, 1.0));
  s_syn->add_option("--sigma", syn.sigma, "DCT noise std")->check(CLI::PositiveNumber);
  s_syn->add_option("--bits", syn.bits, "PNG bit depth")->check(CLI::IsMember({8, 16}));
  s_syn->add_flag("--stopband", syn.stopband, "Project the noise onto the ideal stopband");

  TrainNmdArgs tn;
  auto* s_tn = app.add_subcommand("train-nmd", "Train the natural manifold discriminator");
  tn.run.attach(s_tn, true);
  s_tn->add_option("--out", tn.out, "Checkpoint path")->required();
  s_tn->add_option("--trace", tn.trace, "Curriculum trace CSV");

  TrainSrArgs tf;
  auto* s_tf = app.add_subcommand("train-frsr", "Train the distortion-oriented generator");
  tf.run.attach(s_tf, true);
  s_tf->add_option("--out", tf.out, "Checkpoint path")->required();
  s_tf->add_option("--trace", tf.trace, "Metric trace CSV");

  TrainSrArgs tso;
  auto* s_ts = app.add_subcommand("train-natsr", "Train the perception-oriented generator");
  tso.run.attach(s_ts, true);
  s_ts->add_option("--nmd", tso.nmd, "Trained NMD checkpoint")->required()->check(CLI::ExistingFile);
  s_ts->add_option("--init", tso.init, "FRSR checkpoint to start from")->check(CLI::ExistingFile);
  s_ts->add_option("--out", tso.out, "Checkpoint path")->required();
  s_ts->add_option("--disc-out", tso.disc_out, "Discriminator checkpoint path");
  s_ts->add_option("--trace", tso.trace, "Metric trace CSV");

  SuperResolveArgs sr;
  auto* s_sr = app.add_subcommand("super-resolve", "Upscale an image with a generator checkpoint");
  s_sr->add_option("--ckpt", sr.ckpt, "Generator checkpoint")->required()->check(CLI::ExistingFile);
  s_sr->add_option("--in", sr.in, "LR PNG")->required()->check(CLI::ExistingFile);
  s_sr->add_option("--out", sr.out, "SR PNG")->required();
  s_sr->add_option("--bits", sr.bits, "PNG bit depth")->check(CLI::IsMember({8, 16}));

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "PSNR/SSIM/plausibility/NMD report for a folder of outputs");
  ev.run.attach(s_ev, false);
  s_ev->add_option("--sr", ev.sr, "Folder of SR outputs")->required()->check(CLI::ExistingDirectory);
  s_ev->add_option("--hr", ev.hr, "Folder of ground truth, same file names")->required()->check(CLI::ExistingDirectory);
  s_ev->add_option("--lr", ev.lr, "Folder of LR inputs (enables plausibility)")->check(CLI::ExistingDirectory);
  s_ev->add_option("--nmd", ev.nmd, "NMD checkpoint (enables NMD score)")->check(CLI::ExistingFile);
  s_ev->add_option("--method", ev.method, "Method label");
  s_ev->add_option("--dataset", ev.dataset, "Dataset label");
  s_ev->add_option("--shave", ev.shave, "Border pixels excluded from PSNR/SSIM")->check(CLI::NonNegativeNumber);
  s_ev->add_option("--csv", ev.csv, "Per-image CSV output");

  ScoreNmdArgs sn;
  auto* s_sn = app.add_subcommand("score-nmd", "Mean ± std NMD score per image folder");
  s_sn->add_option("--ckpt", sn.ckpt, "NMD checkpoint")->required()->check(CLI::ExistingFile);
  s_sn->add_option("--dir", sn.dirs, "Image folder; repeat for several sets")->required()->check(CLI::ExistingDirectory);
  s_sn->add_option("--csv", sn.csv, "CSV output");

  PlausibilityArgs pl;
  auto* s_pl = app.add_subcommand("check-plausibility", "PSNR between degrade(SR) and the LR input");
  s_pl->add_option("--sr", pl.sr, "SR PNG")->required()->check(CLI::ExistingFile);
  s_pl->add_option("--lr", pl.lr, "LR PNG")->required()->check(CLI::ExistingFile);
  s_pl->add_option("--kernel", pl.kernel, "Resampling kernel")->check(CLI::IsMember({"bicubic", "ideal"}));

  GradCheckArgs gc;
  auto* s_gc = app.add_subcommand("grad-check", "Finite-difference check of every differentiable op and loss");
  s_gc->add_option("--eps", gc.eps, "Central-difference step")->check(CLI::PositiveNumber);
  s_gc->add_option("--seed", gc.seed, "Input sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (s_syn->parsed()) return synthesize(syn);
    if (s_tn->parsed()) return train_nmd_cmd(tn);
    if (s_tf->parsed()) return train_frsr_cmd(tf);
    if (s_ts->parsed()) return train_natsr_cmd(tso);
    if (s_sr->parsed()) return super_resolve(sr);
    if (s_ev->parsed()) return evaluate_cmd(ev);
    if (s_sn->parsed()) return score_nmd(sn);
    if (s_pl->parsed()) return check_plausibility(pl);
    if (s_gc->parsed()) return grad_check_cmd(gc);
  } catch (const natsr::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
  return kUsage;
}
