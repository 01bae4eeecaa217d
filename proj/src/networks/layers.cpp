#include "natsr/layers.hpp"

#include <cmath>

namespace natsr::nn {

void add_conv(ParameterSet& params, const std::string& prefix, int k, int cin, int cout, std::mt19937_64& rng,
              bool bias, double gain) {
  Tensor w({k, k, cin, cout});
  std::normal_distribution<double> normal(0.0, std::sqrt(gain / (static_cast<double>(k) * k * cin)));
  for (double& v : w.data()) v = normal(rng);
  params.add(prefix + ".weight", std::move(w));
  if (bias) params.add(prefix + ".bias", Tensor({cout}));
}

void add_zero(ParameterSet& params, const std::string& name, Shape shape, bool buffer) {
  params.add(name, Tensor(std::move(shape)), buffer);
}

Var bind(Graph& g, ParameterSet& params, const std::string& name, bool trainable) {
  Parameter& p = params.get(name);
  return g.param(p, trainable && !params.frozen());
}

Var conv(Graph& g, ParameterSet& params, const std::string& prefix, Var x, int stride, ops::PadMode pad,
         bool trainable) {
  const Parameter& w = params.get(prefix + ".weight");
  const int k = w.value.dim(0);
  std::optional<Var> b;
  if (params.contains(prefix + ".bias")) b = nn::bind(g, params, prefix + ".bias", trainable);
  return ops::conv2d(g, x, nn::bind(g, params, prefix + ".weight", trainable), b, stride, ops::Padding::same(k, pad));
}

}  // namespace natsr::nn
