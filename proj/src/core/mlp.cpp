#include "ldx/mlp.hpp"

#include <cmath>

namespace ldx {

// Layout: W1 [hid x in], b1 [hid], W2 [hid x hid], b2 [hid], W3 [out x hid], b3 [out].
Mlp::Mlp(std::size_t inputs, std::size_t hidden, std::size_t outputs, std::mt19937_64& rng)
    : in_(inputs), hid_(hidden), out_(outputs) {
  params_.assign(hid_ * in_ + hid_ + hid_ * hid_ + hid_ + out_ * hid_ + out_, 0.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::size_t p = 0;
  auto fill = [&](std::size_t rows, std::size_t cols, double scale) {
    const double bound = scale / std::sqrt(static_cast<double>(cols));
    for (std::size_t i = 0; i < rows * cols; ++i) params_[p++] = bound * unit(rng);
    p += rows;
  };
  fill(hid_, in_, 1.0);
  fill(hid_, hid_, 1.0);
  fill(out_, hid_, 0.1);
}

void Mlp::forward(const std::vector<double>& x, Cache& cache) const {
  cache.x = x;
  cache.h1.assign(hid_, 0.0);
  cache.h2.assign(hid_, 0.0);
  cache.out.assign(out_, 0.0);
  const double* w = params_.data();
  for (std::size_t i = 0; i < hid_; ++i) {
    double s = w[hid_ * in_ + i];
    const double* row = w + i * in_;
    for (std::size_t j = 0; j < in_; ++j) s += row[j] * x[j];
    cache.h1[i] = std::tanh(s);
  }
  w += hid_ * in_ + hid_;
  for (std::size_t i = 0; i < hid_; ++i) {
    double s = w[hid_ * hid_ + i];
    const double* row = w + i * hid_;
    for (std::size_t j = 0; j < hid_; ++j) s += row[j] * cache.h1[j];
    cache.h2[i] = std::tanh(s);
  }
  w += hid_ * hid_ + hid_;
  for (std::size_t i = 0; i < out_; ++i) {
    double s = w[out_ * hid_ + i];
    const double* row = w + i * hid_;
    for (std::size_t j = 0; j < hid_; ++j) s += row[j] * cache.h2[j];
    cache.out[i] = s;
  }
}

void Mlp::backward(const Cache& cache, const std::vector<double>& d_out, std::vector<double>& grad) const {
  const std::size_t o1 = 0;
  const std::size_t o2 = hid_ * in_ + hid_;
  const std::size_t o3 = o2 + hid_ * hid_ + hid_;
  std::vector<double> d_h2(hid_, 0.0);
  for (std::size_t i = 0; i < out_; ++i) {
    const double g = d_out[i];
    if (g == 0.0) continue;
    grad[o3 + out_ * hid_ + i] += g;
    double* gw = grad.data() + o3 + i * hid_;
    const double* w = params_.data() + o3 + i * hid_;
    for (std::size_t j = 0; j < hid_; ++j) {
      gw[j] += g * cache.h2[j];
      d_h2[j] += g * w[j];
    }
  }
  std::vector<double> d_h1(hid_, 0.0);
  for (std::size_t i = 0; i < hid_; ++i) {
    const double g = d_h2[i] * (1.0 - cache.h2[i] * cache.h2[i]);
    grad[o2 + hid_ * hid_ + i] += g;
    double* gw = grad.data() + o2 + i * hid_;
    const double* w = params_.data() + o2 + i * hid_;
    for (std::size_t j = 0; j < hid_; ++j) {
      gw[j] += g * cache.h1[j];
      d_h1[j] += g * w[j];
    }
  }
  for (std::size_t i = 0; i < hid_; ++i) {
    const double g = d_h1[i] * (1.0 - cache.h1[i] * cache.h1[i]);
    grad[o1 + hid_ * in_ + i] += g;
    double* gw = grad.data() + o1 + i * in_;
    for (std::size_t j = 0; j < in_; ++j) gw[j] += g * cache.x[j];
  }
}

Adam::Adam(std::size_t size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
    params[i] += lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace ldx
