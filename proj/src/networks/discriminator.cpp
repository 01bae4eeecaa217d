#include <cmath>

#include "natsr/error.hpp"
#include "natsr/layers.hpp"
#include "natsr/networks.hpp"

namespace natsr {
namespace {

std::string stage_name(std::size_t i) { return "stage" + std::to_string(i); }

Tensor random_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor u({n});
  double norm = 0.0;
  for (double& v : u.data()) {
    v = normal(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : u.data()) v /= norm;
  return u;
}

}  // namespace

void validate(const GanDiscConfig& c) {
  if (c.widths.empty()) throw ValueError("gan discriminator: at least one stage is required");
  for (int w : c.widths)
    if (w <= 0) throw ValueError("gan discriminator: stage widths must be positive");
  if (c.channels <= 0) throw ValueError("gan discriminator: channels must be positive");
  if (c.power_iterations <= 0) throw ValueError("gan discriminator: power_iterations must be positive");
  if (!(c.leaky_slope >= 0.0 && c.leaky_slope < 1.0)) throw ValueError("gan discriminator: leaky_slope must lie in [0, 1)");
}

GanDiscriminator::GanDiscriminator(GanDiscConfig config, std::uint64_t seed) : config_(std::move(config)) {
  validate(config_);
  std::mt19937_64 rng(seed);
  int cin = config_.channels;
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    nn::add_conv(params_, stage_name(i), 3, cin, config_.widths[i], rng);
    params_.add(stage_name(i) + ".u", random_unit(config_.widths[i], rng), true);
    cin = config_.widths[i];
  }
  nn::add_conv(params_, "head", 1, cin, 1, rng, true, 1.0);
  params_.add("head.u", random_unit(1, rng), true);
}

GanDiscriminator::GanDiscriminator(GanDiscConfig config, ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  validate(config_);
  for (const std::string& name : conv_names())
    if (!params_.contains(name + ".weight") || !params_.contains(name + ".u")) {
      throw ValueError("gan discriminator: missing parameters for " + name);
    }
}

std::vector<std::string> GanDiscriminator::conv_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < config_.widths.size(); ++i) names.push_back(stage_name(i));
  names.push_back("head");
  return names;
}

Var GanDiscriminator::sn_conv(Graph& g, const std::string& name, Var x, int stride, bool normalise, bool trainable,
                              bool update_u) {
  Var w = nn::bind(g, params_, name + ".weight", trainable);
  if (normalise) {
    Tensor& u = params_.get(name + ".u").value;
    Tensor scratch = u;
    auto sn = ops::spectral_normalize(g, w, update_u ? u : scratch, config_.power_iterations, true);
    sigmas_.push_back(sn.sigma);
    w = sn.weight;
  }
  Var b = nn::bind(g, params_, name + ".bias", trainable);
  const int k = g.value(w).dim(0);
  return ops::conv2d(g, x, w, b, stride, ops::Padding::same(k));
}

Var GanDiscriminator::forward(Graph& g, Var images, bool trainable, bool update_u) {
  const Tensor& x = g.value(images);
  require_rank4(x, "gan discriminator");
  if (x.dim(3) != config_.channels) {
    throw ShapeError("gan discriminator: input has " + std::to_string(x.dim(3)) + " channels, expected " +
                     std::to_string(config_.channels));
  }
  sigmas_.clear();
  Var h = images;
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    h = sn_conv(g, stage_name(i), h, i == 0 ? 1 : 2, true, trainable, update_u);
    h = ops::leaky_relu(g, h, config_.leaky_slope);
  }
  h = sn_conv(g, "head", h, 1, config_.spectral_norm_head, trainable, update_u);
  return ops::global_avg_pool(g, h);
}

std::vector<double> GanDiscriminator::logits(const Tensor& images) {
  Graph g;
  const Tensor& v = g.value(forward(g, g.constant(images), false, false));
  return {v.data().begin(), v.data().end()};
}

void GanDiscriminator::warm_up(int iters) {
  for (const std::string& name : conv_names()) ops::spectral_sigma(params_.get(name + ".weight").value,
                                                                   params_.get(name + ".u").value, iters);
}

}  // namespace natsr
