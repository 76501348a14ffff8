/* Copyright 2026 The vislayer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "vislayer/tensor_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace vislayer {

namespace {

void he_normal(Eigen::MatrixXd& m, int fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

}  // namespace

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: nothing to concatenate");
  const Tensor& first = *parts.front();
  int channels = 0;
  for (const Tensor* t : parts) {
    if (t->n != first.n || t->h != first.h || t->w != first.w) {
      throw std::invalid_argument("concat_channels: batch or spatial sizes differ");
    }
    channels += t->c;
  }
  Tensor out(first.n, channels, first.h, first.w);
  for (int i = 0; i < first.n; ++i) {
    Eigen::Index offset = i * out.sample_size();
    for (const Tensor* t : parts) {
      out.data.segment(offset, t->sample_size()) = t->data.segment(i * t->sample_size(), t->sample_size());
      offset += t->sample_size();
    }
  }
  return out;
}

std::vector<Tensor> split_channels(const Tensor& t, const std::vector<int>& channels) {
  std::vector<Tensor> out;
  for (int c : channels) out.emplace_back(t.n, c, t.h, t.w);
  for (int i = 0; i < t.n; ++i) {
    Eigen::Index offset = i * t.sample_size();
    for (Tensor& part : out) {
      part.data.segment(i * part.sample_size(), part.sample_size()) = t.data.segment(offset, part.sample_size());
      offset += part.sample_size();
    }
  }
  return out;
}

Tensor avg_pool2(const Tensor& x) {
  Tensor out(x.n, x.c, x.h / 2, x.w / 2);
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      for (int y = 0; y < out.h; ++y) {
        for (int u = 0; u < out.w; ++u) {
          out.at(i, c, y, u) = 0.25 * (x.at(i, c, 2 * y, 2 * u) + x.at(i, c, 2 * y, 2 * u + 1) +
                                       x.at(i, c, 2 * y + 1, 2 * u) + x.at(i, c, 2 * y + 1, 2 * u + 1));
        }
      }
    }
  }
  return out;
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel_size)
    : in(in_channels), out(out_channels), kernel(kernel_size),
      weight(Eigen::MatrixXd::Zero(out_channels, in_channels * kernel_size * kernel_size)),
      bias(Eigen::VectorXd::Zero(out_channels)) {
  if (kernel_size % 2 == 0) throw std::invalid_argument("Conv2d: kernel size must be odd");
}

void Conv2d::init(std::mt19937_64& rng) {
  he_normal(weight, in * kernel * kernel, rng);
  bias.setZero();
}

Tensor Conv2d::forward(const Tensor& x, Cache& cache) const {
  if (x.c != in) throw std::invalid_argument("Conv2d: input has " + std::to_string(x.c) + " channels, expected " + std::to_string(in));
  const int pad = kernel / 2;
  const int hw = x.h * x.w;
  cache.h = x.h;
  cache.w = x.w;
  cache.columns.assign(x.n, Eigen::MatrixXd());
  Tensor y(x.n, out, x.h, x.w);
  for (int i = 0; i < x.n; ++i) {
    Eigen::MatrixXd& cols = cache.columns[i];
    cols.setZero(in * kernel * kernel, hw);
    for (int c = 0; c < in; ++c) {
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const int row = (c * kernel + ky) * kernel + kx;
          for (int py = 0; py < x.h; ++py) {
            const int sy = py + ky - pad;
            if (sy < 0 || sy >= x.h) continue;
            for (int px = 0; px < x.w; ++px) {
              const int sx = px + kx - pad;
              if (sx < 0 || sx >= x.w) continue;
              cols(row, py * x.w + px) = x.at(i, c, sy, sx);
            }
          }
        }
      }
    }
    auto ys = y.sample(i);
    ys.noalias() = weight * cols;
    ys.colwise() += bias;
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out, const Cache& cache, Conv2d& grad) const {
  const int pad = kernel / 2;
  Tensor dx(grad_out.n, in, cache.h, cache.w);
  for (int i = 0; i < grad_out.n; ++i) {
    const auto gy = grad_out.sample(i);
    grad.weight.noalias() += gy * cache.columns[i].transpose();
    grad.bias += gy.rowwise().sum();
    const Eigen::MatrixXd dcols = weight.transpose() * gy;
    for (int c = 0; c < in; ++c) {
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const int row = (c * kernel + ky) * kernel + kx;
          for (int py = 0; py < cache.h; ++py) {
            const int sy = py + ky - pad;
            if (sy < 0 || sy >= cache.h) continue;
            for (int px = 0; px < cache.w; ++px) {
              const int sx = px + kx - pad;
              if (sx < 0 || sx >= cache.w) continue;
              dx.at(i, c, sy, sx) += dcols(row, py * cache.w + px);
            }
          }
        }
      }
    }
  }
  return dx;
}

BatchNorm2d::BatchNorm2d(int c)
    : channels(c), gamma(Eigen::VectorXd::Ones(c)), beta(Eigen::VectorXd::Zero(c)),
      running_mean(Eigen::VectorXd::Zero(c)), running_var(Eigen::VectorXd::Ones(c)) {}

Tensor BatchNorm2d::forward(const Tensor& x, bool training, bool update_running, Cache& cache) {
  if (x.c != channels) throw std::invalid_argument("BatchNorm2d: channel mismatch");
  const Eigen::Index plane = x.plane();
  const double count = static_cast<double>(x.n) * plane;
  Eigen::VectorXd mean(channels);
  Eigen::VectorXd var(channels);
  if (training) {
    for (int c = 0; c < channels; ++c) {
      double s = 0.0;
      for (int i = 0; i < x.n; ++i) s += x.sample(i).row(c).sum();
      mean[c] = s / count;
      double ss = 0.0;
      for (int i = 0; i < x.n; ++i) ss += (x.sample(i).row(c).array() - mean[c]).square().sum();
      var[c] = ss / count;
    }
    if (update_running) {
      const double unbiased = count > 1 ? count / (count - 1) : 1.0;
      running_mean = (1 - momentum) * running_mean + momentum * mean;
      running_var = (1 - momentum) * running_var + momentum * unbiased * var;
    }
  } else {
    mean = running_mean;
    var = running_var;
  }
  cache.inv_std = (var.array() + eps).rsqrt();
  cache.normalized = Tensor(x.n, x.c, x.h, x.w);
  Tensor y(x.n, x.c, x.h, x.w);
  for (int i = 0; i < x.n; ++i) {
    auto xs = x.sample(i);
    auto ns = cache.normalized.sample(i);
    auto ys = y.sample(i);
    for (int c = 0; c < channels; ++c) {
      ns.row(c) = (xs.row(c).array() - mean[c]) * cache.inv_std[c];
      ys.row(c) = gamma[c] * ns.row(c).array() + beta[c];
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out, const Cache& cache, bool training,
                             BatchNorm2d& grad) const {
  const double count = static_cast<double>(grad_out.n) * grad_out.plane();
  Tensor dx(grad_out.n, grad_out.c, grad_out.h, grad_out.w);
  for (int c = 0; c < channels; ++c) {
    double dgamma = 0.0;
    double dbeta = 0.0;
    for (int i = 0; i < grad_out.n; ++i) {
      dgamma += grad_out.sample(i).row(c).dot(cache.normalized.sample(i).row(c));
      dbeta += grad_out.sample(i).row(c).sum();
    }
    grad.gamma[c] += dgamma;
    grad.beta[c] += dbeta;
    const double k = gamma[c] * cache.inv_std[c];
    for (int i = 0; i < grad_out.n; ++i) {
      auto d = dx.sample(i);
      if (training) {
        d.row(c) = k / count *
                   (count * grad_out.sample(i).row(c).array() - dbeta -
                    cache.normalized.sample(i).row(c).array() * dgamma);
      } else {
        d.row(c) = k * grad_out.sample(i).row(c);
      }
    }
  }
  return dx;
}

Linear::Linear(int in_features, int out_features)
    : in(in_features), out(out_features), weight(Eigen::MatrixXd::Zero(out_features, in_features)),
      bias(Eigen::VectorXd::Zero(out_features)) {}

void Linear::init(std::mt19937_64& rng) {
  he_normal(weight, in, rng);
  bias.setZero();
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != in) throw std::invalid_argument("Linear: input size mismatch");
  Eigen::MatrixXd y = weight * x;
  y.colwise() += bias;
  return y;
}

Eigen::MatrixXd Linear::backward(const Eigen::MatrixXd& grad_out, const Eigen::MatrixXd& x,
                                 Linear& grad) const {
  grad.weight.noalias() += grad_out * x.transpose();
  grad.bias += grad_out.rowwise().sum();
  return weight.transpose() * grad_out;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  y.data = y.data.cwiseMax(0.0);
  return y;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& y) {
  Tensor dx = grad_out;
  dx.data = (y.data.array() > 0.0).select(grad_out.data, 0.0);
  return dx;
}

Tensor max_pool2(const Tensor& x, MaxPoolCache& cache) {
  Tensor y(x.n, x.c, x.h / 2, x.w / 2);
  cache.in_h = x.h;
  cache.in_w = x.w;
  cache.argmax.assign(y.data.size(), 0);
  Eigen::Index o = 0;
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      for (int py = 0; py < y.h; ++py) {
        for (int px = 0; px < y.w; ++px, ++o) {
          int best = -1;
          double best_v = 0.0;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int idx = static_cast<int>(((static_cast<Eigen::Index>(i) * x.c + c) * x.h + 2 * py + dy) * x.w + 2 * px + dx);
              if (best < 0 || x.data[idx] > best_v) {
                best = idx;
                best_v = x.data[idx];
              }
            }
          }
          y.data[o] = best_v;
          cache.argmax[o] = best;
        }
      }
    }
  }
  return y;
}

Tensor max_pool2_backward(const Tensor& grad_out, const MaxPoolCache& cache) {
  Tensor dx(grad_out.n, grad_out.c, cache.in_h, cache.in_w);
  for (Eigen::Index o = 0; o < grad_out.data.size(); ++o) dx.data[cache.argmax[o]] += grad_out.data[o];
  return dx;
}

}  // namespace vislayer
