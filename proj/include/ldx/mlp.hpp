#pragma once

#include <cstddef>
#include <random>
#include <vector>

namespace ldx {

/// Two-hidden-layer tanh network with a linear output layer. All weights live
/// in one flat vector so optimizers and snapshots can treat them uniformly.
class Mlp {
 public:
  struct Cache {
    std::vector<double> x;
    std::vector<double> h1;
    std::vector<double> h2;
    std::vector<double> out;
  };

  Mlp() = default;
  Mlp(std::size_t inputs, std::size_t hidden, std::size_t outputs, std::mt19937_64& rng);

  std::size_t inputs() const noexcept { return in_; }
  std::size_t outputs() const noexcept { return out_; }

  void forward(const std::vector<double>& x, Cache& cache) const;
  /// Accumulates d(objective)/d(params) into `grad` given d(objective)/d(out).
  void backward(const Cache& cache, const std::vector<double>& d_out, std::vector<double>& grad) const;

  std::vector<double>& params() noexcept { return params_; }
  const std::vector<double>& params() const noexcept { return params_; }

 private:
  std::size_t in_ = 0;
  std::size_t hid_ = 0;
  std::size_t out_ = 0;
  std::vector<double> params_;
};

class Adam {
 public:
  explicit Adam(std::size_t size, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Gradient ascent step.
  void step(std::vector<double>& params, const std::vector<double>& grad);
  void set_lr(double lr) noexcept { lr_ = lr; }

 private:
  double lr_;
  double b1_;
  double b2_;
  double eps_;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace ldx
