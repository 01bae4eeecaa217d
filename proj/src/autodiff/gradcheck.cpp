#include "natsr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "natsr/error.hpp"
#include "natsr/ops.hpp"

namespace natsr {
namespace {

double evaluate(const GraphFn& fn, const std::vector<Tensor>& inputs, const Tensor& probe) {
  Graph g;
  std::vector<Var> vars;
  for (const Tensor& t : inputs) vars.push_back(g.constant(t));
  Var out = fn(g, vars);
  const Tensor& y = g.value(out);
  if (probe.empty()) return y.item();
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * probe[i];
  return acc;
}

}  // namespace

Tensor random_input(const Shape& shape, InputDomain domain, std::mt19937_64& rng) {
  Tensor t(shape);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : t.data()) {
    const double r = u(rng);
    switch (domain) {
      case InputDomain::kSigned:
        v = 2.0 * r - 1.0;
        break;
      case InputDomain::kAwayFromZero:
        v = (0.1 + 0.9 * r) * (u(rng) < 0.5 ? -1.0 : 1.0);
        break;
      case InputDomain::kPositive:
        v = 0.5 + 1.5 * r;
        break;
    }
  }
  return t;
}

double grad_check(const GraphFn& fn, const std::vector<Tensor>& inputs, const GradCheckOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  Graph g;
  std::vector<Var> vars;
  for (const Tensor& t : inputs) vars.push_back(g.variable(t));
  Var out = fn(g, vars);
  Tensor probe;
  Var loss = out;
  if (g.value(out).size() != 1) {
    probe = random_input(g.value(out).shape(), InputDomain::kSigned, rng);
    loss = ops::sum(g, ops::mul(g, out, g.constant(probe)));
  }
  g.backward(loss);

  double worst = 0.0;
  std::vector<Tensor> work = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = g.grad(vars[k]);
    std::vector<std::size_t> coords(inputs[k].size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min<std::size_t>(coords.size(), static_cast<std::size_t>(opts.max_coords)));
    for (std::size_t i : coords) {
      const double orig = work[k][i];
      work[k][i] = orig + opts.eps;
      const double fp = evaluate(fn, work, probe);
      work[k][i] = orig - opts.eps;
      const double fm = evaluate(fn, work, probe);
      work[k][i] = orig;
      const double numeric = (fp - fm) / (2.0 * opts.eps);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

namespace {

OpCheck conv_check(std::string name, Shape x, int k, int cin, int cout, int stride, ops::Padding pad) {
  return {std::move(name), {x, {k, k, cin, cout}, {cout}}, InputDomain::kSigned, 1e-4,
          [stride, pad](Graph& g, const std::vector<Var>& v) { return ops::conv2d(g, v[0], v[1], v[2], stride, pad); }};
}

std::vector<OpCheck> build_registry() {
  using ops::PadMode;
  using ops::Padding;
  std::vector<OpCheck> r;
  r.push_back(conv_check("conv2d", {2, 5, 5, 2}, 3, 2, 3, 1, Padding::same(3)));
  r.push_back(conv_check("conv2d_stride2_reflect", {1, 6, 6, 2}, 3, 2, 2, 2, Padding::same(3, PadMode::kReflect)));
  r.push_back(conv_check("conv2d_1x1", {2, 3, 3, 4}, 1, 4, 2, 1, Padding::valid()));
  r.push_back({"relu", {{2, 3, 3, 2}}, InputDomain::kAwayFromZero, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::relu(g, v[0]); }});
  r.push_back({"leaky_relu", {{2, 3, 3, 2}}, InputDomain::kAwayFromZero, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::leaky_relu(g, v[0], 0.2); }});
  r.push_back({"sigmoid", {{2, 3, 3, 2}}, InputDomain::kSigned, 1e-6,
               [](Graph& g, const std::vector<Var>& v) { return ops::sigmoid(g, v[0]); }});
  r.push_back({"abs", {{2, 3, 3, 2}}, InputDomain::kAwayFromZero, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::abs(g, v[0]); }});
  r.push_back({"log", {{2, 3, 3, 2}}, InputDomain::kPositive, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::log(g, v[0]); }});
  r.push_back({"clamp", {{2, 3, 3, 2}}, InputDomain::kAwayFromZero, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::clamp(g, v[0], -0.05, 0.05); }});
  r.push_back({"global_avg_pool", {{2, 4, 3, 3}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::global_avg_pool(g, v[0]); }});
  r.push_back({"max_pool2", {{2, 4, 4, 2}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::max_pool2(g, v[0]); }});
  r.push_back({"depth_to_space", {{1, 2, 3, 8}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::depth_to_space(g, v[0], 2); }});
  r.push_back({"space_to_depth", {{1, 4, 6, 2}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::space_to_depth(g, v[0], 2); }});
  r.push_back({"concat_channels", {{1, 3, 3, 2}, {1, 3, 3, 3}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::concat_channels(g, {v[0], v[1]}); }});
  r.push_back({"slice_batch", {{3, 2, 2, 2}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::slice_batch(g, v[0], 1, 3); }});
  r.push_back({"concat_batch", {{1, 2, 2, 2}, {2, 2, 2, 2}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::concat_batch(g, {v[0], v[1]}); }});
  r.push_back({"add", {{2, 3}, {2, 3}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::add(g, v[0], v[1]); }});
  r.push_back({"sub", {{2, 3}, {2, 3}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::sub(g, v[0], v[1]); }});
  r.push_back({"mul", {{2, 3}, {2, 3}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::mul(g, v[0], v[1]); }});
  r.push_back({"scale", {{2, 3}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::scale(g, v[0], -0.7); }});
  r.push_back({"add_scalar", {{2, 3}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::add_scalar(g, v[0], 0.3); }});
  r.push_back({"sub_broadcast", {{2, 3}, {1}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::sub_broadcast(g, v[0], v[1]); }});
  r.push_back({"div_broadcast", {{2, 3}, {1}}, InputDomain::kPositive, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::div_broadcast(g, v[0], v[1]); }});
  r.push_back({"sum", {{2, 3, 2}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::sum(g, v[0]); }});
  r.push_back({"mean", {{2, 3, 2}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ops::mean(g, v[0]); }});
  r.push_back({"masked_mean", {{6}}, InputDomain::kSigned, 1e-4, [](Graph& g, const std::vector<Var>& v) {
                 return ops::masked_mean(g, v[0], {1, 0, 1, 1, 0, 1});
               }});

  // Spectral normalisation composite: a conv whose weight is normalised. The
  // persistent vector is warmed up once, then every evaluation restarts one
  // power iteration from that snapshot, so finite differences see the power
  // iteration's dependence on W while the analytic rule treats u, v as
  // constants.
  struct Snapshot {
    Tensor weight, u;
  };
  auto snapshot = std::make_shared<Snapshot>();
  r.push_back({"spectral_normalize", {{1, 4, 4, 2}, {3, 3, 2, 3}}, InputDomain::kSigned, 1e-3,
               [snapshot](Graph& g, const std::vector<Var>& v) {
                 const Tensor& w = g.value(v[1]);
                 // Re-warm only when the weight is not a finite-difference
                 // neighbour of the one the snapshot was taken for.
                 if (snapshot->weight.shape() != w.shape() || max_abs_diff(snapshot->weight, w) > 1e-3) {
                   snapshot->weight = w;
                   snapshot->u = Tensor({w.shape().back()}, 1.0 / std::sqrt(static_cast<double>(w.shape().back())));
                   ops::spectral_sigma(w, snapshot->u, 200);
                 }
                 Tensor u = snapshot->u;
                 auto sn = ops::spectral_normalize(g, v[1], u, 1);
                 return ops::conv2d(g, v[0], sn.weight, std::nullopt, 1, ops::Padding::same(3));
               }});
  return r;
}

}  // namespace

const std::vector<OpCheck>& registered_op_checks() {
  static const std::vector<OpCheck> registry = build_registry();
  return registry;
}

GradCheckRow run_op_check(const OpCheck& check, const GradCheckOptions& opts) {
  std::mt19937_64 rng(opts.seed + std::hash<std::string>{}(check.name));
  std::vector<Tensor> inputs;
  for (const Shape& s : check.shapes) inputs.push_back(random_input(s, check.domain, rng));
  return {check.name, grad_check(check.fn, inputs, opts), check.tolerance};
}

double grad_check(const std::string& opname, const std::vector<Shape>& shapes, double eps) {
  for (const OpCheck& c : registered_op_checks()) {
    if (c.name != opname) continue;
    OpCheck local = c;
    if (!shapes.empty()) local.shapes = shapes;
    GradCheckOptions opts;
    opts.eps = eps;
    return run_op_check(local, opts).max_rel_error;
  }
  throw Error("grad_check: no registered op named '" + opname + "'");
}

}  // namespace natsr
