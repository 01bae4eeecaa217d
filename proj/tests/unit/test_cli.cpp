#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>

#include "natsr/checkpoint.hpp"
#include "natsr/config.hpp"
#include "natsr/evaluation.hpp"
#include "natsr/image.hpp"
#include "natsr/networks.hpp"
#include "natsr/png_io.hpp"
#include "natsr/resample.hpp"

using namespace natsr;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int status = -1;
  std::string out;  // stdout
  std::string err;  // stderr
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("natsr_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliResult run(const std::string& args) const {
    const std::string err = path("stderr.txt");
    const std::string cmd = std::string("'") + NATSR_CLI + "' " + args + " 2>'" + err + "'";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = slurp(err);
    return r;
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  fs::path dir_;
};

Tensor smooth_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fx = 0.05 + 0.2 * u(rng), fy = 0.05 + 0.2 * u(rng), ph = 6.0 * u(rng);
  Tensor t = make_image(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        t.at(0, y, x, c) = 0.5 + 0.35 * std::sin(fx * x + fy * y * (c + 1) + ph) + 0.1 * (u(rng) - 0.5);
  clip_unit(t);
  return t;
}

// A tiny generator checkpoint whose config echo carries the architecture.
void write_generator(const std::string& file, int scale) {
  RunConfig c = desk_preset();
  c.resampler.scale = c.generator.scale = c.train.scale = scale;
  c.generator.features = 4;
  c.generator.depth = 0;
  c.generator.block.convs = 1;
  c.generator.block.growth = 2;
  Checkpoint ck;
  ck.kind = NetworkKind::kGenerator;
  ck.config = config_to_json(c);
  ck.params = Generator(c.generator, 3).params();
  save_checkpoint(ck, file);
}

const char* kToyTrain = R"({
  "scale": 2,
  "data": {"nmd_patches": 6},
  "nmd": {"widths": [4, 4], "patch_size": 16, "batch_size": 4, "max_steps": 3, "val_batch_size": 2,
          "curriculum": {"validate_every": 2}},
  "generator": {"features": 4, "depth": 0, "rdb_convs": 1, "growth": 2},
  "discriminator": {"widths": [4, 4]},
  "train": {"lr_patch": 8, "batch_size": 2, "steps": 2, "eval_every": 1, "val_patches": 2}
})";

std::string config_echo(const std::string& err) {
  std::smatch m;
  const std::regex re(R"(config (\{.*\}))");
  return std::regex_search(err, m, re) ? m[1].str() : std::string();
}

}  // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
  CliResult r = run("");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  r = run("frobnicate");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  r = run("grad-check --no-such-flag");
  EXPECT_EQ(r.status, 2);
  r = run("super-resolve --in x.png");
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(run("--help").status, 0);
}

TEST_F(CliTest, GradCheckPrintsTableAndPasses) {
  const CliResult r = run("grad-check");
  EXPECT_EQ(r.status, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("max rel err"), std::string::npos);
  EXPECT_NE(r.out.find("conv2d"), std::string::npos);
  EXPECT_NE(r.out.find("ragan_generator"), std::string::npos);
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, SuperResolveWritesFourTimesLarger) {
  write_generator(path("g.ckpt"), 4);
  save_image(smooth_image(9, 7, 1), path("lr.png"));
  const CliResult r = run("super-resolve --ckpt " + path("g.ckpt") + " --in " + path("lr.png") + " --out " + path("sr.png"));
  ASSERT_EQ(r.status, 0) << r.err;
  const Tensor sr = load_image(path("sr.png"));
  EXPECT_EQ(image_height(sr), 36);
  EXPECT_EQ(image_width(sr), 28);
}

TEST_F(CliTest, PlausibilityMatchesLibrary) {
  const Tensor hr = smooth_image(32, 48, 2);
  ResamplerSpec spec;
  save_image(hr, path("sr.png"), 16);
  save_image(degrade(hr, spec), path("lr.png"), 16);
  const CliResult r = run("check-plausibility --sr " + path("sr.png") + " --lr " + path("lr.png"));
  ASSERT_EQ(r.status, 0) << r.err;
  const double expect = plausibility(load_image(path("sr.png")), load_image(path("lr.png")), spec);
  std::smatch m;
  ASSERT_TRUE(std::regex_search(r.out, m, std::regex(R"(plausibility ([0-9.]+) dB)"))) << r.out;
  EXPECT_NEAR(std::stod(m[1].str()), expect, 1e-4);

  save_image(smooth_image(30, 30, 3), path("odd.png"));
  EXPECT_EQ(run("check-plausibility --sr " + path("odd.png") + " --lr " + path("lr.png")).status, 1);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
  std::ofstream(path("bad.ckpt")) << "NATSRCKP garbage";
  save_image(smooth_image(8, 8, 4), path("lr.png"));
  CliResult r = run("super-resolve --ckpt " + path("bad.ckpt") + " --in " + path("lr.png") + " --out " + path("sr.png"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("corrupt"), std::string::npos) << r.err;

  write("five.json", R"({"scale": 5})");
  r = run("synthesize --config " + path("five.json") + " --in " + path("lr.png") + " --out-dir " + path("o"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("scale must be 2 or 4"), std::string::npos) << r.err;

  // An NMD checkpoint is not a generator.
  Checkpoint ck;
  ck.kind = NetworkKind::kNmd;
  ck.config = config_to_json(desk_preset());
  save_checkpoint(ck, path("nmd.ckpt"));
  r = run("super-resolve --ckpt " + path("nmd.ckpt") + " --in " + path("lr.png") + " --out " + path("sr.png"));
  EXPECT_EQ(r.status, 1);
}

TEST_F(CliTest, SynthesizeWritesMembersOfTheSameLrSet) {
  save_image(smooth_image(40, 40, 5), path("hr.png"), 16);
  write("ideal.json", R"({"kernel": "ideal"})");
  const CliResult r = run("synthesize --config " + path("ideal.json") + " --stopband --in " + path("hr.png") + " --out-dir " +
                    path("syn") + " --seed 3");
  ASSERT_EQ(r.status, 0) << r.err;
  for (const char* f : {"hr.png", "lr.png", "blurry.png", "noisy.png"}) EXPECT_TRUE(fs::exists(path("syn/") + f)) << f;
  EXPECT_EQ(image_width(load_image(path("syn/hr.png"))), 32);  // cropped to a multiple of 8 · scale
  EXPECT_NE(r.out.find("blurry"), std::string::npos);
  EXPECT_NE(r.out.find("noisy"), std::string::npos);
}

TEST_F(CliTest, EvaluateAndScoreReports) {
  fs::create_directories(path("hr"));
  fs::create_directories(path("sr"));
  fs::create_directories(path("lr"));
  ResamplerSpec spec;
  for (int i = 0; i < 2; ++i) {
    const Tensor hr = smooth_image(32, 32, 10 + i);
    const std::string name = "img" + std::to_string(i) + ".png";
    save_image(hr, path("hr/" + name));
    save_image(interpolate(degrade(hr, spec), spec), path("sr/" + name));
    save_image(degrade(hr, spec), path("lr/" + name));
  }
  CliResult r = run("evaluate --sr " + path("sr") + " --hr " + path("hr") + " --lr " + path("lr") + " --method bicubic --csv " +
              path("e.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("bicubic"), std::string::npos);
  EXPECT_NE(slurp(path("e.csv")).find("img1"), std::string::npos);

  RunConfig c = desk_preset();
  c.nmd.net.widths = {4, 4};
  Checkpoint ck;
  ck.kind = NetworkKind::kNmd;
  ck.config = config_to_json(c);
  ck.params = Nmd(c.nmd.net, 1).params();
  save_checkpoint(ck, path("nmd.ckpt"));
  r = run("score-nmd --ckpt " + path("nmd.ckpt") + " --dir " + path("hr") + " --dir " + path("sr"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("hr"), std::string::npos);
  EXPECT_NE(r.out.find("sr"), std::string::npos);
}

TEST_F(CliTest, SeededTrainingIsBitReproducibleEndToEnd) {
  fs::create_directories(path("data"));
  for (int i = 0; i < 2; ++i) save_image(smooth_image(48, 96, 20 + i), path("data/p" + std::to_string(i) + ".png"));
  write("toy.json", kToyTrain);
  const std::string common = " --config " + path("toy.json") + " --data " + path("data") + " --threads 1 --seed 4";

  CliResult a = run("train-nmd" + common + " --out " + path("n1.ckpt") + " --trace " + path("n1.csv"));
  ASSERT_EQ(a.status, 0) << a.err;
  CliResult b = run("train-nmd" + common + " --out " + path("n2.ckpt"));
  ASSERT_EQ(b.status, 0) << b.err;
  EXPECT_EQ(slurp(path("n1.ckpt")), slurp(path("n2.ckpt")));
  EXPECT_NE(a.out.find("held-out mean score"), std::string::npos);

  // The echoed config reloads to itself and records the overrides.
  const std::string echo = config_echo(a.err);
  ASSERT_FALSE(echo.empty()) << a.err;
  const RunConfig reloaded = parse_config_text(echo);
  EXPECT_EQ(reloaded.seed, 4u);
  EXPECT_EQ(config_to_json(reloaded).dump(), echo);

  ASSERT_EQ(run("train-frsr" + common + " --out " + path("f1.ckpt") + " --trace " + path("f1.csv")).status, 0);
  ASSERT_EQ(run("train-frsr" + common + " --out " + path("f2.ckpt")).status, 0);
  EXPECT_EQ(slurp(path("f1.ckpt")), slurp(path("f2.ckpt")));
  EXPECT_NE(slurp(path("f1.csv")).find("val_psnr"), std::string::npos);

  const std::string natsr = "train-natsr" + common + " --nmd " + path("n1.ckpt") + " --init " + path("f1.ckpt");
  a = run(natsr + " --out " + path("s1.ckpt") + " --disc-out " + path("d1.ckpt"));
  ASSERT_EQ(a.status, 0) << a.err;
  ASSERT_EQ(run(natsr + " --out " + path("s2.ckpt")).status, 0);
  EXPECT_EQ(slurp(path("s1.ckpt")), slurp(path("s2.ckpt")));
  EXPECT_EQ(load_checkpoint(path("d1.ckpt")).kind, NetworkKind::kGanDisc);

  // A different seed gives a different network.
  ASSERT_EQ(run("train-frsr --config " + path("toy.json") + " --data " + path("data") + " --seed 5 --out " +
                path("f3.ckpt"))
                .status,
            0);
  EXPECT_NE(slurp(path("f1.ckpt")), slurp(path("f3.ckpt")));
}
