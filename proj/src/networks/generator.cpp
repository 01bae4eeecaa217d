#include <algorithm>
#include <tuple>

#include "natsr/error.hpp"
#include "natsr/layers.hpp"
#include "natsr/networks.hpp"

namespace natsr {
namespace {

int upsample_stages(int scale) { return scale == 4 ? 2 : 1; }

std::string block_prefix(int i) { return "body.rdb" + std::to_string(i); }

}  // namespace

void validate(const GeneratorConfig& c) {
  if (c.scale != 2 && c.scale != 4) throw ValueError("scale must be 2 or 4");
  if (c.features <= 0 || c.channels <= 0) throw ValueError("generator: features and channels must be positive");
  if (c.depth < 0 || c.depth > 6) throw ValueError("generator: depth must lie in [0, 6]");
  if (c.block.convs <= 0 || c.block.growth <= 0) throw ValueError("generator: RDBlock widths must be positive");
  if (c.block.fusion_width != 0 && c.block.fusion_width != c.features) {
    throw ValueError("generator: RDBlock fusion width " + std::to_string(c.block.fusion_width) +
                     " differs from the feature width " + std::to_string(c.features));
  }
}

bool SkipConnection::operator<(const SkipConnection& o) const {
  return std::tie(kind, level, index) < std::tie(o.kind, o.level, o.index);
}

void add_rdblock(ParameterSet& params, const std::string& prefix, int features, const RdBlockConfig& block,
                 std::mt19937_64& rng) {
  if (features <= 0 || block.convs <= 0 || block.growth <= 0) throw ValueError("rdblock: widths must be positive");
  const int fusion = block.fusion_width == 0 ? features : block.fusion_width;
  for (int k = 1; k <= block.convs; ++k)
    nn::add_conv(params, prefix + ".conv" + std::to_string(k), 3, rdblock_input_width(features, block, k),
                 block.growth, rng);
  nn::add_conv(params, prefix + ".fusion", 1, rdblock_input_width(features, block, block.convs + 1), fusion, rng,
               true, 1.0);
}

Var rdblock(Graph& g, ParameterSet& params, const std::string& prefix, Var x, const RdBlockConfig& block,
            bool trainable) {
  const int features = g.value(x).dim(3);
  const int fusion = params.get(prefix + ".fusion.weight").value.dim(3);
  if (fusion != features) {
    throw ValueError("rdblock: fusion width " + std::to_string(fusion) + " differs from input width " +
                     std::to_string(features));
  }
  if (block.residual_scale == 0.0) return x;
  std::vector<Var> feats = {x};
  for (int k = 1; k <= block.convs; ++k) {
    Var in = feats.size() == 1 ? x : ops::concat_channels(g, feats);
    feats.push_back(
        ops::relu(g, nn::conv(g, params, prefix + ".conv" + std::to_string(k), in, 1, ops::PadMode::kZero, trainable)));
  }
  Var fused = nn::conv(g, params, prefix + ".fusion", ops::concat_channels(g, feats), 1, ops::PadMode::kZero, trainable);
  return ops::add(g, x, ops::scale(g, fused, block.residual_scale));
}

Generator::Generator(GeneratorConfig config, std::uint64_t seed) : config_(std::move(config)) {
  validate(config_);
  std::mt19937_64 rng(seed);
  const int f = config_.features;
  nn::add_conv(params_, "head", 3, config_.channels, f, rng, true, 1.0);
  for (int i = 0; i < rdblock_count(); ++i) add_rdblock(params_, block_prefix(i), f, config_.block, rng);
  nn::add_conv(params_, "trunk", 3, f, f, rng, true, 1.0);
  for (int j = 0; j < upsample_stages(config_.scale); ++j)
    nn::add_conv(params_, "up" + std::to_string(j), 3, f, 4 * f, rng, true, 1.0);
  nn::add_conv(params_, "out", 3, f, config_.channels, rng, true, 1.0);
}

Generator::Generator(GeneratorConfig config, ParameterSet params) : config_(std::move(config)), params_(std::move(params)) {
  validate(config_);
  for (const char* name : {"head.weight", "trunk.weight", "out.weight"})
    if (!params_.contains(name)) throw ValueError(std::string("generator: missing parameter ") + name);
  if (!params_.contains(block_prefix(rdblock_count() - 1) + ".fusion.weight")) {
    throw ValueError("generator: parameter set does not match depth " + std::to_string(config_.depth));
  }
}

Var Generator::unit(Graph& g, int level, Var x, int& next_block, bool trainable) {
  if (level == 0) return rdblock(g, params_, block_prefix(next_block++), x, config_.block, trainable);
  Var inner = unit(g, level - 1, x, next_block, trainable);
  inner = unit(g, level - 1, inner, next_block, trainable);
  return ops::add(g, x, inner);
}

Var Generator::forward(Graph& g, Var lr, bool trainable) {
  const Tensor& x = g.value(lr);
  require_rank4(x, "generator");
  if (x.dim(3) != config_.channels) {
    throw ShapeError("generator: input has " + std::to_string(x.dim(3)) + " channels, expected " +
                     std::to_string(config_.channels));
  }
  Var x0 = nn::conv(g, params_, "head", lr, 1, ops::PadMode::kZero, trainable);
  int next_block = 0;
  Var body = unit(g, config_.depth, x0, next_block, trainable);
  Var h = ops::add(g, x0, nn::conv(g, params_, "trunk", body, 1, ops::PadMode::kZero, trainable));
  for (int j = 0; j < upsample_stages(config_.scale); ++j)
    h = ops::depth_to_space(g, nn::conv(g, params_, "up" + std::to_string(j), h, 1, ops::PadMode::kZero, trainable), 2);
  return nn::conv(g, params_, "out", h, 1, ops::PadMode::kZero, trainable);
}

Tensor Generator::forward_sr(const Tensor& lr) const {
  Graph g;
  // trainable = false: parameters enter as constant copies and are not written.
  Var y = const_cast<Generator*>(this)->forward(g, g.constant(lr), false);
  Tensor out = g.value(y);
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<SkipConnection> Generator::skip_connections() const {
  using Kind = SkipConnection::Kind;
  std::vector<SkipConnection> s;
  for (int i = 0; i < rdblock_count(); ++i) s.push_back({Kind::kBlock, 0, i});
  for (int k = 1; k <= config_.depth; ++k)
    for (int i = 0; i < (1 << (config_.depth - k)); ++i) s.push_back({Kind::kMid, k, i});
  s.push_back({Kind::kLong, 0, 0});
  return s;
}

std::size_t Generator::expected_param_count(const GeneratorConfig& c) {
  const int f = c.features;
  std::size_t block = nn::conv_param_count(1, rdblock_input_width(f, c.block, c.block.convs + 1), f);
  for (int k = 1; k <= c.block.convs; ++k) block += nn::conv_param_count(3, rdblock_input_width(f, c.block, k), c.block.growth);
  return nn::conv_param_count(3, c.channels, f) + (std::size_t{1} << c.depth) * block + nn::conv_param_count(3, f, f) +
         upsample_stages(c.scale) * nn::conv_param_count(3, f, 4 * f) + nn::conv_param_count(3, f, c.channels);
}

std::vector<std::string> Generator::residual_branch_params() const {
  std::vector<std::string> names;
  for (int i = 0; i < rdblock_count(); ++i) {
    names.push_back(block_prefix(i) + ".fusion.weight");
    names.push_back(block_prefix(i) + ".fusion.bias");
  }
  names.push_back("trunk.weight");
  names.push_back("trunk.bias");
  return names;
}

}  // namespace natsr
