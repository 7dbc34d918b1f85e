#pragma once

#include <vector>

#include "clslu/tensor.hpp"

namespace clslu {

// Adam over one parameter group. Parameters with no accumulated gradient
// this step are treated as having zero gradient (moments still decay).
class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();
  int64_t steps() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace clslu
