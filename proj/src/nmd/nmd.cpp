#include "natsr/nmd.hpp"

#include <algorithm>
#include <cmath>

#include "natsr/error.hpp"
#include "natsr/image.hpp"
#include "natsr/layers.hpp"

namespace natsr {
namespace {

std::string stage_name(std::size_t i) { return "stage" + std::to_string(i); }

}  // namespace

void validate(const NmdConfig& config) {
  if (config.widths.empty()) throw ValueError("nmd: at least one conv stage is required");
  for (int w : config.widths)
    if (w <= 0) throw ValueError("nmd: stage widths must be positive");
  if (config.channels <= 0) throw ValueError("nmd: channels must be positive");
  int extent = config.patch_size;
  if (config.max_pool)
    for (std::size_t i = 0; i + 1 < config.widths.size(); ++i) extent /= 2;
  if (extent <= 0) {
    throw ValueError("nmd: patch size " + std::to_string(config.patch_size) + " pooled " +
                     std::to_string(config.widths.size() - 1) + " times leaves no spatial extent before the head");
  }
}

Nmd::Nmd(NmdConfig config, std::uint64_t seed) : config_(std::move(config)) {
  validate(config_);
  std::mt19937_64 rng(seed);
  int cin = config_.channels;
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    nn::add_conv(params_, stage_name(i), 3, cin, config_.widths[i], rng);
    cin = config_.widths[i];
  }
  // Unit-gain head so initial logits stay moderate.
  nn::add_conv(params_, "head", 1, cin, 1, rng, true, 1.0);
}

Nmd::Nmd(NmdConfig config, ParameterSet params) : config_(std::move(config)), params_(std::move(params)) {
  validate(config_);
  for (std::size_t i = 0; i < config_.widths.size(); ++i)
    if (!params_.contains(stage_name(i) + ".weight")) throw ValueError("nmd: missing parameter " + stage_name(i));
  if (!params_.contains("head.weight")) throw ValueError("nmd: missing head parameters");
}

Var Nmd::logits(Graph& g, Var images, bool trainable) {
  const Tensor& x = g.value(images);
  require_rank4(x, "nmd");
  if (x.dim(3) != config_.channels) {
    throw ShapeError("nmd: input has " + std::to_string(x.dim(3)) + " channels, expected " +
                     std::to_string(config_.channels));
  }
  Var h = images;
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    h = ops::relu(g, nn::conv(g, params_, stage_name(i), h, 1, ops::PadMode::kZero, trainable));
    if (config_.max_pool && i + 1 < config_.widths.size()) {
      if (g.value(h).dim(1) < 2 || g.value(h).dim(2) < 2) {
        throw ShapeError("nmd: input " + to_string(x.shape()) + " too small to pool after stage " + std::to_string(i));
      }
      h = ops::max_pool2(g, h);
    }
  }
  return ops::global_avg_pool(g, nn::conv(g, params_, "head", h, 1, ops::PadMode::kZero, trainable));
}

Var Nmd::forward(Graph& g, Var images, bool trainable) { return ops::sigmoid(g, logits(g, images, trainable)); }

std::vector<double> Nmd::predict(const Tensor& images) const {
  Graph g;
  // With trainable = false parameters enter the graph as constant copies, so
  // the set is never written through.
  Var p = const_cast<Nmd*>(this)->forward(g, g.constant(images), false);
  const Tensor& v = g.value(p);
  return {v.data().begin(), v.data().end()};
}

std::size_t Nmd::expected_param_count(const NmdConfig& config) {
  std::size_t total = 0;
  int cin = config.channels;
  for (int w : config.widths) {
    total += nn::conv_param_count(3, cin, w);
    cin = w;
  }
  return total + nn::conv_param_count(1, cin, 1);
}

Var nmd_bce_loss(Graph& g, Var preds, const std::vector<double>& targets) {
  const Tensor& p = g.value(preds);
  if (p.size() != targets.size()) {
    throw ShapeError("nmd_bce_loss: " + std::to_string(p.size()) + " predictions, " + std::to_string(targets.size()) +
                     " targets");
  }
  std::vector<int> natural(targets.size()), unnatural(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] != 0.0 && targets[i] != 1.0) {
      throw ValueError("nmd_bce_loss: target " + std::to_string(targets[i]) + " is not 0 or 1");
    }
    natural[i] = targets[i] == 1.0;
    unnatural[i] = !natural[i];
  }
  Var flat = ops::reshape(g, preds, {static_cast<int>(p.size())});
  Var pc = ops::clamp(g, flat, kProbClamp, 1.0 - kProbClamp);
  Var pos = ops::masked_mean(g, ops::log(g, pc), natural);
  Var neg = ops::masked_mean(g, ops::log(g, ops::add_scalar(g, ops::scale(g, pc, -1.0), 1.0)), unnatural);
  return ops::scale(g, ops::add(g, pos, neg), -0.5);
}

double nmd_bce_value(const std::vector<double>& preds, const std::vector<double>& targets) {
  Graph g;
  Var p = g.constant(Tensor({static_cast<int>(preds.size())}, preds));
  return g.value(nmd_bce_loss(g, p, targets)).item();
}

double nmd_accuracy(const Nmd& nmd, const NmdBatch& batch) {
  const std::vector<double> p = nmd.predict(batch.images);
  int correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) correct += (p[i] >= 0.5) == (batch.targets[i] == 1.0);
  return static_cast<double>(correct) / static_cast<double>(p.size());
}

double nmd_score(const Nmd& nmd, const Tensor& image) {
  require_rank4(image, "nmd_score");
  const int t = nmd.config().patch_size;
  const int ny = image.dim(1) / t, nx = image.dim(2) / t;
  double total = 0.0;
  int count = 0;
  for (int n = 0; n < image.dim(0); ++n) {
    if (ny == 0 || nx == 0) {
      total += nmd.predict(batch_item(image, n))[0];
      ++count;
      continue;
    }
    std::vector<Tensor> tiles;
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) tiles.push_back(crop(image, n, y * t, x * t, t, t));
    constexpr std::size_t kChunk = 32;
    for (std::size_t i = 0; i < tiles.size(); i += kChunk) {
      std::vector<Tensor> chunk(tiles.begin() + i, tiles.begin() + std::min(tiles.size(), i + kChunk));
      for (double s : nmd.predict(stack_batch(chunk))) {
        total += s;
        ++count;
      }
    }
  }
  return total / count;
}

}  // namespace natsr
