#pragma once

#include <string>
#include <vector>

#include "clslu/gradcheck.hpp"

namespace clslu {

struct LossGradCheck {
  std::string loss;
  GradCheckReport report;
};

struct LossGradCheckSummary {
  std::vector<LossGradCheck> checks;
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool passed = false;
};

// Finite-difference verification of every loss term on a toy batch built
// from a small synthetic corpus. The adversarial terms are checked against
// the parameter group they are defined to optimize (L^fc against the FC
// head, L^lvm against everything else), and the total objective is checked
// per group the same way, matching the training-time gradient routing.
LossGradCheckSummary check_loss_gradients(uint64_t seed, double h = 1e-4,
                                          double tol = 1e-4);

std::string format_gradcheck_report(const LossGradCheckSummary& summary, uint64_t seed);

}  // namespace clslu
