#include <cmath>

#include <Eigen/Core>

#include "natsr/error.hpp"
#include "natsr/ops.hpp"

namespace natsr::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMapMat = Eigen::Map<const RowMat>;

// The (kh, kw, cin, cout) weight viewed row-major is a (rest x cout) matrix A;
// the normalised operator is W = A^T with rows = cout.
struct PowerResult {
  Eigen::VectorXd u, v;
  double sigma;
};

PowerResult power_iterate(const Tensor& weight, Tensor& u, int iters, bool update_u) {
  if (weight.empty()) throw ShapeError("spectral_normalize: empty weight");
  const int cout = weight.shape().back();
  const std::size_t rest = weight.size() / static_cast<std::size_t>(cout);
  if (u.size() != static_cast<std::size_t>(cout)) {
    throw ShapeError("spectral_normalize: u has " + std::to_string(u.size()) + " entries, weight has " +
                     std::to_string(cout) + " rows");
  }
  if (iters <= 0) throw ValueError("spectral_normalize: iters must be positive");
  ConstMapMat a(weight.ptr(), static_cast<Eigen::Index>(rest), cout);
  Eigen::VectorXd uv = Eigen::Map<const Eigen::VectorXd>(u.ptr(), cout);
  Eigen::VectorXd vv = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rest));
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd nv = a * uv;  // W^T u
    const double nvn = nv.norm();
    if (nvn < kSpectralEps) break;
    vv = nv / nvn;
    Eigen::VectorXd nu = a.transpose() * vv;  // W v
    const double nun = nu.norm();
    if (nun < kSpectralEps) break;
    uv = nu / nun;
  }
  const double sigma = uv.dot(a.transpose() * vv);
  if (update_u) Eigen::Map<Eigen::VectorXd>(u.ptr(), cout) = uv;
  return {std::move(uv), std::move(vv), sigma};
}

}  // namespace

double spectral_sigma(const Tensor& weight, Tensor& u, int iters) {
  return power_iterate(weight, u, iters, true).sigma;
}

SpectralResult spectral_normalize(Graph& g, Var weight, Tensor& u, int iters, bool update_u) {
  const Tensor& w = g.value(weight);
  PowerResult pr = power_iterate(w, u, iters, update_u);
  const bool clamped = pr.sigma < kSpectralEps;
  const double sigma = clamped ? kSpectralEps : pr.sigma;
  Tensor out = w;
  for (double& v : out.data()) v /= sigma;

  const int cout = w.shape().back();
  auto rule = [weight, sigma, clamped, cout, u = std::move(pr.u), v = std::move(pr.v)](Graph& gr,
                                                                                     const Tensor& gy) {
    Tensor* gw = gr.grad_target(weight);
    if (!gw) return;
    const Tensor& w = gr.value(weight);
    // d/dW (W / sigma) with d sigma / dA[r][c] = v[r] u[c].
    double inner = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) inner += gy[i] * w[i];
    const double coef = clamped ? 0.0 : inner / (sigma * sigma);
    const std::size_t rest = w.size() / static_cast<std::size_t>(cout);
    for (std::size_t r = 0; r < rest; ++r)
      for (int c = 0; c < cout; ++c) {
        const std::size_t i = r * cout + c;
        (*gw)[i] += gy[i] / sigma - coef * v[static_cast<Eigen::Index>(r)] * u[c];
      }
  };
  Var normalized = g.record(std::move(out), {weight}, std::move(rule));
  return {normalized, pr.sigma};
}

}  // namespace natsr::ops
