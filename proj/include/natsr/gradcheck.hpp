#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "natsr/autodiff.hpp"

namespace natsr {

// Builds the checked expression from graph variables. A non-scalar result is
// contracted against a fixed random tensor so every output coordinate
// contributes to the checked loss.
using GraphFn = std::function<Var(Graph&, const std::vector<Var>&)>;

enum class InputDomain {
  kSigned,        // uniform in [-1, 1]
  kAwayFromZero,  // |x| in [0.1, 1], for kinked ops
  kPositive,      // uniform in [0.5, 2]
};

struct GradCheckOptions {
  double eps = 1e-6;
  int max_coords = 48;  // sampled coordinates per input
  std::uint64_t seed = 7;
};

// Max over sampled coordinates of |analytic - numeric| / max(|analytic|,
// |numeric|, 1e-8), central differences.
double grad_check(const GraphFn& fn, const std::vector<Tensor>& inputs, const GradCheckOptions& opts = {});

struct OpCheck {
  std::string name;
  std::vector<Shape> shapes;
  InputDomain domain = InputDomain::kSigned;
  double tolerance = 1e-4;
  GraphFn fn;
};

struct GradCheckRow {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_rel_error < tolerance; }
};

Tensor random_input(const Shape& shape, InputDomain domain, std::mt19937_64& rng);

// Every differentiable primitive of the engine, with its tolerance.
const std::vector<OpCheck>& registered_op_checks();

GradCheckRow run_op_check(const OpCheck& check, const GradCheckOptions& opts = {});

// Looks up `opname` in registered_op_checks(); `shapes` overrides the default
// input shapes when non-empty.
double grad_check(const std::string& opname, const std::vector<Shape>& shapes = {}, double eps = 1e-6);

}  // namespace natsr
