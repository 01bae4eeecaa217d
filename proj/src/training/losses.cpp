#include <cmath>
#include <memory>

#include "natsr/error.hpp"
#include "natsr/ops.hpp"
#include "natsr/training.hpp"

namespace natsr {
namespace {

// -mean log clamp(p).
Var neg_mean_log(Graph& g, Var p) {
  return ops::scale(g, ops::mean(g, ops::log(g, ops::clamp(g, p, kRaganClamp, 1.0 - kRaganClamp))), -1.0);
}

Var one_minus(Graph& g, Var p) { return ops::add_scalar(g, ops::scale(g, p, -1.0), 1.0); }

}  // namespace

void validate(const LossWeights& w) {
  if (!(w.recon >= 0.0) || !(w.natural >= 0.0) || !(w.adversarial >= 0.0)) {
    throw ValueError("loss weights must be non-negative");
  }
}

Var recon_loss(Graph& g, Var sr, Var hr) {
  if (g.value(sr).shape() != g.value(hr).shape()) {
    throw ShapeError("recon_loss: sr " + to_string(g.value(sr).shape()) + " vs hr " + to_string(g.value(hr).shape()));
  }
  return ops::mean(g, ops::abs(g, ops::sub(g, sr, hr)));
}

Var natural_loss(Graph& g, Nmd& nmd, Var sr) { return neg_mean_log(g, nmd.forward(g, sr, false)); }

RaganLosses ragan_losses(Graph& g, Var c_real, Var c_fake) {
  const std::size_t nr = g.value(c_real).size(), nf = g.value(c_fake).size();
  if (nr == 0 || nf == 0) throw ValueError("ragan_losses: empty logit batch");
  if (nr != nf) throw ShapeError("ragan_losses: " + std::to_string(nr) + " real vs " + std::to_string(nf) + " fake logits");
  Var d_real = ops::sigmoid(g, ops::sub_broadcast(g, c_real, ops::mean(g, c_fake)));
  Var d_fake = ops::sigmoid(g, ops::sub_broadcast(g, c_fake, ops::mean(g, c_real)));
  RaganLosses out;
  out.generator = ops::add(g, neg_mean_log(g, d_real), neg_mean_log(g, one_minus(g, d_fake)));
  out.discriminator = ops::add(g, neg_mean_log(g, d_fake), neg_mean_log(g, one_minus(g, d_real)));
  return out;
}

RaganValues ragan_values(const std::vector<double>& c_real, const std::vector<double>& c_fake) {
  auto column = [](const std::vector<double>& v) { return Tensor({static_cast<int>(v.size()), 1, 1, 1}, v); };
  if (c_real.empty() || c_fake.empty()) throw ValueError("ragan_losses: empty logit batch");
  Graph g;
  RaganLosses l = ragan_losses(g, g.constant(column(c_real)), g.constant(column(c_fake)));
  return {g.value(l.generator).item(), g.value(l.discriminator).item()};
}

Var total_loss(Graph& g, Var recon, std::optional<Var> natural, std::optional<Var> adversarial, const LossWeights& w) {
  validate(w);
  std::optional<Var> acc;
  auto accumulate = [&](std::optional<Var> term, double weight, const char* name) {
    if (weight == 0.0) return;
    if (!term) throw ValueError(std::string("total_loss: weight for ") + name + " is non-zero but the term is missing");
    Var t = ops::scale(g, *term, weight);
    acc = acc ? ops::add(g, *acc, t) : t;
  };
  accumulate(recon, w.recon, "recon");
  accumulate(natural, w.natural, "natural");
  accumulate(adversarial, w.adversarial, "adversarial");
  return acc ? *acc : g.constant(Tensor::scalar(0.0));
}

double total_loss_value(double recon, double natural, double adversarial, const LossWeights& w) {
  Graph g;
  return g.value(total_loss(g, g.constant(Tensor::scalar(recon)), g.constant(Tensor::scalar(natural)),
                            g.constant(Tensor::scalar(adversarial)), w))
      .item();
}

std::vector<OpCheck> loss_checks() {
  std::vector<OpCheck> r;
  r.push_back({"recon_loss", {{2, 3, 3, 2}}, InputDomain::kAwayFromZero, 1e-4, [](Graph& g, const std::vector<Var>& v) {
                 return recon_loss(g, v[0], g.constant(Tensor(g.value(v[0]).shape())));
               }});
  r.push_back({"ragan_generator", {{3, 1, 1, 1}, {3, 1, 1, 1}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ragan_losses(g, v[0], v[1]).generator; }});
  r.push_back({"ragan_discriminator", {{3, 1, 1, 1}, {3, 1, 1, 1}}, InputDomain::kSigned, 1e-4,
               [](Graph& g, const std::vector<Var>& v) { return ragan_losses(g, v[0], v[1]).discriminator; }});
  r.push_back({"nmd_bce_loss", {{4, 1, 1, 1}}, InputDomain::kSigned, 1e-4, [](Graph& g, const std::vector<Var>& v) {
                 return nmd_bce_loss(g, ops::sigmoid(g, v[0]), {1, 1, 0, 0});
               }});
  auto nmd = std::make_shared<Nmd>(NmdConfig{.widths = {3, 4}, .patch_size = 8}, 11);
  r.push_back({"natural_loss", {{1, 8, 8, 3}}, InputDomain::kPositive, 1e-4,
               [nmd](Graph& g, const std::vector<Var>& v) { return natural_loss(g, *nmd, v[0]); }});
  return r;
}

}  // namespace natsr
