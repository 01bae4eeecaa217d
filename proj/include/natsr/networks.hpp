#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "natsr/autodiff.hpp"

namespace natsr {

// ---- generator ----

struct RdBlockConfig {
  int convs = 4;          // dense 3×3 conv + ReLU layers
  int growth = 32;        // channels added by each dense layer
  int fusion_width = 0;   // 1×1 fusion output; 0 means "same as the input"
  double residual_scale = 0.1;
};

// Fractal residual generator. U(0) is an RDBlock and
// U(k)(x) = x + U(k-1)(U(k-1)(x)); the body U(depth) sits between a head
// conv and a trunk conv with a global skip around them.
struct GeneratorConfig {
  int features = 32;
  int depth = 2;
  RdBlockConfig block;
  int scale = 4;  // 2 or 4; one (conv, depth_to_space) stage per factor 2
  int channels = 3;
};

void validate(const GeneratorConfig& config);

// Width seen by dense layer k (1-based) of an RDBlock on F input channels.
inline int rdblock_input_width(int features, const RdBlockConfig& block, int k) {
  return features + (k - 1) * block.growth;
}

// Registers the parameters of one RDBlock under `prefix`.
void add_rdblock(ParameterSet& params, const std::string& prefix, int features, const RdBlockConfig& block,
                 std::mt19937_64& rng);
// x + residual_scale · fusion(dense(x)). Throws ValueError when the fusion
// width differs from the input width.
Var rdblock(Graph& g, ParameterSet& params, const std::string& prefix, Var x, const RdBlockConfig& block,
            bool trainable = true);

struct SkipConnection {
  enum class Kind { kBlock, kMid, kLong };
  Kind kind;
  int level;  // k for the skip of U(k); 0 for block-local and global skips
  int index;  // position among skips of the same kind and level
  bool operator<(const SkipConnection& o) const;
  bool operator==(const SkipConnection& o) const = default;
};

class Generator {
 public:
  Generator() = default;
  Generator(GeneratorConfig config, std::uint64_t seed);
  Generator(GeneratorConfig config, ParameterSet params);

  // Unclamped output for training, shape (batch, H·s, W·s, channels).
  Var forward(Graph& g, Var lr, bool trainable = true);
  // Inference: frozen forward pass clamped to [0, 1].
  Tensor forward_sr(const Tensor& lr) const;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const GeneratorConfig& config() const { return config_; }

  int rdblock_count() const { return 1 << config_.depth; }
  std::vector<SkipConnection> skip_connections() const;
  static std::size_t expected_param_count(const GeneratorConfig& config);

  // Names of every residual-branch weight: RDBlock fusion convs and the
  // trunk conv. Zeroing them reduces the network to upsampler ∘ head.
  std::vector<std::string> residual_branch_params() const;

 private:
  Var unit(Graph& g, int level, Var x, int& next_block, bool trainable);

  GeneratorConfig config_;
  ParameterSet params_;
};

// ---- GAN discriminator ----

struct GanDiscConfig {
  std::vector<int> widths = {32, 64, 64, 128, 128};  // stage 0 stride 1, later stages stride 2
  int channels = 3;
  double leaky_slope = 0.2;
  int power_iterations = 1;
  // Normalise the 1×1 head too. Disabling it makes the logit scale with the
  // head weights.
  bool spectral_norm_head = true;
};

void validate(const GanDiscConfig& config);

class GanDiscriminator {
 public:
  GanDiscriminator() = default;
  GanDiscriminator(GanDiscConfig config, std::uint64_t seed);
  GanDiscriminator(GanDiscConfig config, ParameterSet params);

  // Unbounded logit per image, shape (batch, 1, 1, 1). Each call advances
  // the persistent power-iteration vectors when `update_u` is set.
  Var forward(Graph& g, Var images, bool trainable = true, bool update_u = true);
  std::vector<double> logits(const Tensor& images);

  // Runs `iters` power iterations on every weight without a forward pass.
  void warm_up(int iters);
  // Current sigma estimates used by the most recent forward pass, per conv.
  const std::vector<double>& last_sigmas() const { return sigmas_; }
  std::vector<std::string> conv_names() const;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const GanDiscConfig& config() const { return config_; }

 private:
  Var sn_conv(Graph& g, const std::string& name, Var x, int stride, bool normalise, bool trainable, bool update_u);

  GanDiscConfig config_;
  ParameterSet params_;
  std::vector<double> sigmas_;
};

}  // namespace natsr
