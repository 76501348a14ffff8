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
#pragma once

// Minimal dense layers for the visualization-block network. Double precision
// throughout so the end-to-end gradient check is meaningful.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vislayer {

// NCHW batch of feature maps.
struct Tensor {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;
  Eigen::VectorXd data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_), data(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_) * c_ * h_ * w_)) {}

  Eigen::Index plane() const { return static_cast<Eigen::Index>(h) * w; }
  Eigen::Index sample_size() const { return c * plane(); }
  double& at(int i, int ch, int y, int x) { return data[((static_cast<Eigen::Index>(i) * c + ch) * h + y) * w + x]; }
  double at(int i, int ch, int y, int x) const { return data[((static_cast<Eigen::Index>(i) * c + ch) * h + y) * w + x]; }
  // Channels x pixels view of one sample.
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> sample(int i) {
    return {data.data() + i * sample_size(), c, plane()};
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> sample(int i) const {
    return {data.data() + i * sample_size(), c, plane()};
  }
};

// Concatenate along channels; all parts share n, h, w.
Tensor concat_channels(const std::vector<const Tensor*>& parts);
// Inverse of concat_channels for gradients.
std::vector<Tensor> split_channels(const Tensor& t, const std::vector<int>& channels);

// 2x2 average pooling, stride 2 (used to bring the input image to the
// feature resolution).
Tensor avg_pool2(const Tensor& x);

struct Conv2d {
  int in = 0;
  int out = 0;
  int kernel = 1;
  Eigen::MatrixXd weight;  // out x (in * k * k)
  Eigen::VectorXd bias;

  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel_size);
  void init(std::mt19937_64& rng);

  struct Cache {
    std::vector<Eigen::MatrixXd> columns;
    int h = 0;
    int w = 0;
  };
  // Stride 1, zero "same" padding (odd kernels).
  Tensor forward(const Tensor& x, Cache& cache) const;
  Tensor backward(const Tensor& grad_out, const Cache& cache, Conv2d& grad) const;
};

struct BatchNorm2d {
  int channels = 0;
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNorm2d() = default;
  explicit BatchNorm2d(int c);

  struct Cache {
    Tensor normalized;
    Eigen::VectorXd inv_std;
  };
  // Training mode normalises with batch statistics and (optionally) updates
  // the running estimates; inference mode uses the running estimates.
  Tensor forward(const Tensor& x, bool training, bool update_running, Cache& cache);
  Tensor backward(const Tensor& grad_out, const Cache& cache, bool training, BatchNorm2d& grad) const;
};

struct Linear {
  int in = 0;
  int out = 0;
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;

  Linear() = default;
  Linear(int in_features, int out_features);
  void init(std::mt19937_64& rng);

  // x: in x batch (column per sample).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out, const Eigen::MatrixXd& x, Linear& grad) const;
};

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& grad_out, const Tensor& y);

struct MaxPoolCache {
  std::vector<int> argmax;
  int in_h = 0;
  int in_w = 0;
};
Tensor max_pool2(const Tensor& x, MaxPoolCache& cache);
Tensor max_pool2_backward(const Tensor& grad_out, const MaxPoolCache& cache);

}  // namespace vislayer
