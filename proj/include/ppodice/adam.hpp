#pragma once

#include "ppodice/common.hpp"

#include <vector>

namespace ppodice {

/// First-order optimizer over a fixed list of tensors. step() descends along
/// the given gradients; pass negated gradients to ascend.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) = 0;
  virtual double learning_rate() const = 0;
  virtual void set_learning_rate(double lr) = 0;
};

/// Rescales `grads` so their joint L2 norm is at most `max_norm` (no-op for
/// max_norm <= 0). Returns the norm before clipping.
double clip_global_norm(std::vector<Matrix>& grads, double max_norm);

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) override;
  double learning_rate() const override { return lr_; }
  void set_learning_rate(double lr) override { lr_ = lr; }

 private:
  double lr_;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-5;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
};

class Adam final : public Optimizer {
 public:
  explicit Adam(AdamConfig config = {});
  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) override;
  double learning_rate() const override { return config_.learning_rate; }
  void set_learning_rate(double lr) override { config_.learning_rate = lr; }
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

}  // namespace ppodice
