#include "clslu/gradcheck.hpp"

#include <cmath>

namespace clslu {

namespace {

double eval(const ScalarFn& f) {
  Graph g;
  Tensor root = f(g);
  if (root.size() != 1)
    throw ShapeError("finite_diff_check", "objective returned shape " +
                                              shape_str(root.shape()) + ", expected a scalar");
  return root.item();
}

double relative_error(double a, double b) {
  const double diff = std::abs(a - b);
  const double mag = std::max(std::abs(a), std::abs(b));
  return mag < 1e-6 ? diff : diff / mag;
}

}  // namespace

GradCheckReport finite_diff_check(const ScalarFn& f,
                                  std::span<const std::pair<std::string, Tensor>> params,
                                  double h, double tol) {
  if (h <= 0.0) throw Error("finite_diff_check: step h must be positive");

  const double v0 = eval(f);
  const double v1 = eval(f);
  if (!(v0 == v1))
    throw Error("finite_diff_check: objective is not deterministic under a fixed seed (" +
                std::to_string(v0) + " vs " + std::to_string(v1) + ")");

  // Reference gradients from one reverse pass.
  std::vector<std::vector<double>> autodiff;
  {
    for (const auto& [name, p] : params) {
      Tensor t = p;
      t.zero_grad();
    }
    Graph g;
    Tensor root = f(g);
    g.backward(root);
    for (const auto& [name, p] : params) {
      auto gspan = p.grad();
      autodiff.emplace_back(gspan.begin(), gspan.end());
      if (autodiff.back().empty()) autodiff.back().assign(static_cast<size_t>(p.size()), 0.0);
      Tensor t = p;
      t.zero_grad();
    }
  }

  GradCheckReport report;
  report.tol = tol;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi].second;
    auto vals = p.mutable_values();
    for (size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + h;
      const double fp = eval(f);
      vals[i] = saved - h;
      const double fm = eval(f);
      vals[i] = saved;
      const double fd = (fp - fm) / (2.0 * h);
      const double ad = autodiff[pi][i];
      const double rel = relative_error(ad, fd);
      ++report.entries_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = {params[pi].first, static_cast<int64_t>(i), ad, fd, rel};
      }
    }
  }
  return report;
}

}  // namespace clslu
