#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clslu/tensor.hpp"

namespace clslu {

// A scalar objective rebuilt from scratch on every call. The function must
// re-seed any randomness it uses so that repeated evaluations at the same
// parameter values are bit-identical.
using ScalarFn = std::function<Tensor(Graph&)>;

struct GradCheckEntry {
  std::string param;
  int64_t index = -1;
  double autodiff = 0.0;
  double fd = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  GradCheckEntry worst;
  int64_t entries_checked = 0;
  double tol = 0.0;
  bool pass() const { return max_rel_err < tol; }
};

// Central-difference check: for every entry of every parameter, compares
// (f(t+h) - f(t-h)) / 2h against the reverse-mode gradient. The error is
// relative to max(|autodiff|, |fd|) and absolute below 1e-6 scale.
// Throws if f is not deterministic at fixed parameters.
GradCheckReport finite_diff_check(const ScalarFn& f,
                                  std::span<const std::pair<std::string, Tensor>> params,
                                  double h, double tol);

}  // namespace clslu
