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
#include "vislayer/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>

#include "vislayer/dataset.hpp"
#include "vislayer/losses.hpp"
#include "vislayer/network.hpp"
#include "vislayer/synthetic_model.hpp"

namespace vislayer {

namespace {

constexpr double kRasterStep = 1e-4;
constexpr double kSmoothStep = 1e-5;
constexpr double kNetworkStep = 1e-5;
constexpr int kMaxResamples = 200;

void record(CategoryReport& report, const RelativeError& err, int trial, std::string label) {
  if (report.worst_trial < 0 || err.max_error > report.max_error) {
    report.max_error = err.max_error;
    report.worst_trial = trial;
    report.worst_index = err.worst_index;
    report.worst_label = std::move(label);
  }
}

CategoryReport make_report(std::string name, double threshold) {
  CategoryReport report;
  report.name = std::move(name);
  report.threshold = threshold;
  return report;
}

ShapeModel trial_model(const GradcheckOptions& options, int trial) {
  return generate_synthetic_model(options.seed * 1000003ULL + static_cast<std::uint64_t>(trial),
                                  options.model_vertices, options.num_identity,
                                  options.num_expression);
}

// All activation patterns that a finite-difference probe must not change.
struct DiscreteState {
  std::vector<std::vector<bool>> relu;
  std::vector<std::vector<int>> pooling;

  static DiscreteState of(const NetworkOutput& out) {
    DiscreteState s;
    auto signs = [](const Eigen::Ref<const Eigen::VectorXd>& v) {
      std::vector<bool> out(static_cast<std::size_t>(v.size()));
      for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0;
      return out;
    };
    for (const BlockCache& b : out.blocks) {
      for (const Tensor& a : b.activations) s.relu.push_back(signs(a.data));
      s.relu.push_back(signs(Eigen::Map<const Eigen::VectorXd>(b.hidden.data(), b.hidden.size())));
      s.pooling.push_back(b.pool_cache.argmax);
    }
    return s;
  }
  bool operator==(const DiscreteState&) const = default;
};

bool same_renders(const NetworkOutput& a, const NetworkOutput& b) {
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    for (std::size_t s = 0; s < a.blocks[i].renders.size(); ++s) {
      if (!a.blocks[i].renders[s].same_support(b.blocks[i].renders[s])) return false;
    }
  }
  return true;
}

}  // namespace

RelativeError relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                             double floor_fraction) {
  if (analytic.size() != numeric.size()) {
    throw std::invalid_argument("relative_error: size mismatch");
  }
  RelativeError out;
  if (analytic.size() == 0) return out;
  const double floor = floor_fraction * std::max(analytic.cwiseAbs().maxCoeff(),
                                                 numeric.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < analytic.size(); ++j) {
    const double denom = std::max({std::abs(analytic[j]), std::abs(numeric[j]), floor});
    const double err = denom > 0.0 ? std::abs(analytic[j] - numeric[j]) / denom : 0.0;
    if (out.worst_index < 0 || err > out.max_error) {
      out.max_error = err;
      out.worst_index = static_cast<int>(j);
    }
  }
  return out;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double rel_step) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + h;
    const double fp = f(probe);
    probe[j] = x[j] - h;
    const double fm = f(probe);
    probe[j] = x[j];
    grad[j] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

std::string param_label(int index) {
  if (index < 0) return "-";
  if (index < kCameraParams) return "m" + std::to_string(index + 1);
  return "p" + std::to_string(index - kCameraParams + 1);
}

ParamVector random_params(const ShapeModel& model, int size, std::mt19937_64& rng) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Eigen::Matrix3d rotation =
      (Eigen::AngleAxisd(45.0 * kDeg * unit(rng), Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(30.0 * kDeg * unit(rng), Eigen::Vector3d::UnitX()) *
       Eigen::AngleAxisd(60.0 * kDeg * unit(rng), Eigen::Vector3d::UnitY()))
          .toRotationMatrix();
  const double scale = 0.25 * size * (1.0 + 0.2 * unit(rng));
  const Eigen::Vector3d c = scale * rotation * model.mean_shape().rowwise().mean();
  ParamVector p;
  p.camera = CameraMatrix::from_rotation(rotation, scale, 0.5 * (size - 1) - c.x(),
                                         0.5 * (size - 1) - c.y());
  // Network updates do not keep M orthogonal, so test off the rotation manifold too.
  for (int k : {0, 1, 2, 4, 5, 6}) p.camera[k] += 0.05 * scale * unit(rng);
  const Eigen::VectorXd stddev = model.basis_stddev();
  p.shape.resize(stddev.size());
  for (Eigen::Index j = 0; j < stddev.size(); ++j) p.shape[j] = 2.0 * stddev[j] * unit(rng);
  return p;
}

CategoryReport check_rasterizer(const GradcheckOptions& options) {
  CategoryReport report = make_report("rasterizer", options.rasterizer_threshold);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const MaskKind masks[] = {MaskKind::kNoseTip, MaskKind::kFivePoint, MaskKind::kNone};

  for (int trial = 0; trial < options.trials; ++trial) {
    const ShapeModel model = trial_model(options, trial);
    for (int attempt = 0;; ++attempt) {
      if (attempt > kMaxResamples) {
        throw std::runtime_error("check_rasterizer: no stable configuration found");
      }
      RasterConfig cfg;
      cfg.width = cfg.height = options.image_size;
      cfg.sigma = 1.0 + 0.4 * unit(rng);
      cfg.support_radius = 2 + static_cast<int>(rng() % 2);
      cfg.mask = masks[(trial + attempt) % 3];
      const ParamVector params = random_params(model, options.image_size, rng);
      const VisualizationOutput ref = rasterize_forward(model, params, cfg);
      Eigen::MatrixXd upstream(cfg.height, cfg.width);
      for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream.data()[i] = normal(rng);

      // Reject configurations where some probe changes a discrete decision.
      const Eigen::VectorXd x = params.flat();
      bool stable = ref.num_contributions() > 0;
      Eigen::VectorXd probe = x;
      for (Eigen::Index j = 0; stable && j < x.size(); ++j) {
        const double h = kRasterStep * std::max(1.0, std::abs(x[j]));
        for (double sign : {1.0, -1.0}) {
          probe[j] = x[j] + sign * h;
          if (!rasterize_forward(model, ParamVector::from_flat(probe), cfg).same_support(ref)) {
            stable = false;
          }
        }
        probe[j] = x[j];
      }
      if (!stable) {
        ++report.resampled;
        continue;
      }

      const Eigen::VectorXd analytic = rasterize_backward(ref, upstream, model, params, cfg);
      const Eigen::VectorXd numeric = central_difference(
          [&](const Eigen::VectorXd& v) {
            return rasterize_frozen(ref, model, ParamVector::from_flat(v), cfg)
                .image.cwiseProduct(upstream)
                .sum();
          },
          x, kRasterStep);
      const RelativeError err = relative_error(analytic, numeric);
      record(report, err, trial, param_label(err.worst_index));
      ++report.trials;
      break;
    }
  }
  return report;
}

CategoryReport check_projection_jacobian(const GradcheckOptions& options) {
  CategoryReport report = make_report("projection_jacobian", options.smooth_threshold);
  std::mt19937_64 rng(options.seed + 1);
  for (int trial = 0; trial < options.trials; ++trial) {
    const ShapeModel model = trial_model(options, trial);
    const ParamVector params = random_params(model, options.image_size, rng);
    const ProjectionJacobian pj = projection_jacobian(model, params, model.landmark_indices());
    const Eigen::VectorXd x = params.flat();
    Eigen::MatrixXd numeric(pj.jacobian.rows(), pj.jacobian.cols());
    for (Eigen::Index row = 0; row < numeric.rows(); ++row) {
      const int k = static_cast<int>(row / 2);
      const int coord = static_cast<int>(row % 2);
      numeric.row(row) = central_difference(
                             [&](const Eigen::VectorXd& v) {
                               return project_landmarks(model, ParamVector::from_flat(v))
                                   .points(coord, k);
                             },
                             x, kSmoothStep)
                             .transpose();
    }
    const Eigen::MatrixXd analytic_t = pj.jacobian.transpose();
    const Eigen::MatrixXd numeric_t = numeric.transpose();
    const RelativeError err =
        relative_error(Eigen::Map<const Eigen::VectorXd>(analytic_t.data(), analytic_t.size()),
                       Eigen::Map<const Eigen::VectorXd>(numeric_t.data(), numeric_t.size()));
    const int cols = static_cast<int>(pj.jacobian.cols());
    record(report, err, trial,
           "row " + std::to_string(err.worst_index / cols) + " " +
               param_label(err.worst_index % cols));
    ++report.trials;
  }
  return report;
}

CategoryReport check_landmark_loss(const GradcheckOptions& options) {
  CategoryReport report = make_report("landmark_loss", options.smooth_threshold);
  std::mt19937_64 rng(options.seed + 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < options.trials; ++trial) {
    const ShapeModel model = trial_model(options, trial);
    const ParamVector params = random_params(model, options.image_size, rng);
    LandmarkSet target = project_landmarks(model, random_params(model, options.image_size, rng));
    for (Eigen::Index i = 0; i < target.points.size(); ++i) target.points.data()[i] += normal(rng);
    Eigen::VectorXd delta(params.size());
    for (Eigen::Index j = 0; j < delta.size(); ++j) delta[j] = 0.05 * normal(rng);

    const LossResult r = landmark_loss(model, params, delta, target);
    const Eigen::VectorXd numeric = central_difference(
        [&](const Eigen::VectorXd& d) { return landmark_loss(model, params, d, target).loss; },
        delta, kSmoothStep);
    const RelativeError err = relative_error(r.grad, numeric);
    record(report, err, trial, param_label(err.worst_index));
    ++report.trials;
  }
  return report;
}

CategoryReport check_network(const GradcheckOptions& options) {
  CategoryReport report = make_report("end_to_end", options.network_threshold);
  constexpr int kSize = 8;
  constexpr int kBatch = 2;
  const ShapeModel model = generate_synthetic_model(options.seed, 60, 2, 2);

  DatasetOptions data_options;
  data_options.seed = options.seed + 3;
  data_options.count = kBatch;
  data_options.image_size = kSize;
  data_options.max_yaw_deg = 45.0;
  const std::vector<FaceSample> samples = generate_synthetic_dataset(model, data_options);

  BlockConfig config;
  config.n_blocks = 2;
  config.image_size = kSize;
  config.filters = {{{2, 3}, {3, 3}}, {{3, 3}, {3, 3}}};
  config.fc_sizes = {12, 0};
  const int dim = kCameraParams + model.num_shape_params();
  NetworkWeights weights = NetworkWeights::create(config, dim, options.seed + 4, false);
  // Keep the random updates small relative to the parameters they move.
  const double scale = samples[0].truth.camera.row1().norm();
  for (int k = 0; k < kCameraParams; ++k) weights.output_scale[k] = 0.02 * scale;
  weights.output_scale[3] = weights.output_scale[7] = 0.2;
  weights.output_scale.tail(model.num_shape_params()) = 0.2 * model.basis_stddev();

  std::vector<int> all(kBatch);
  for (int b = 0; b < kBatch; ++b) all[b] = b;
  const Tensor images = batch_images(samples, all);
  std::vector<ParamVector> initial;
  std::vector<LossTarget> targets;
  std::vector<ParamVector> truths;
  for (const FaceSample& s : samples) {
    initial.push_back(s.initial);
    targets.push_back({s.truth, s.landmarks});
    truths.push_back(s.truth);
  }
  const LossWeights loss_weights = build_weights(model, truths);

  ForwardOptions fwd;
  fwd.training = true;
  fwd.update_running_stats = false;
  fwd.dropout_seed = options.seed + 5;
  const NetworkOutput ref = network_forward(model, weights, images, initial, fwd);
  const DiscreteState ref_state = DiscreteState::of(ref);
  const BlockLosses losses = block_losses(model, weights, ref, targets, loss_weights);
  const NetworkGradients grads = network_backward(model, weights, ref, losses.output_grads);

  std::vector<std::vector<VisualizationOutput>> support;
  for (const BlockCache& b : ref.blocks) support.push_back(b.renders);
  ForwardOptions frozen = fwd;
  frozen.frozen_support = &support;

  struct Slot {
    std::string name;
    double* value;
    double grad;
  };
  std::vector<std::vector<Slot>> tensors;
  {
    std::vector<std::string> names;
    std::vector<Eigen::Map<Eigen::VectorXd>> values;
    weights.for_each_trainable(
        [&](const std::string& name, std::vector<int>, Eigen::Map<Eigen::VectorXd> v) {
          names.push_back(name);
          values.push_back(v);
        });
    std::vector<Eigen::Map<Eigen::VectorXd>> gvalues;
    NetworkWeights gw = grads.weights;
    gw.for_each_trainable([&](const std::string&, std::vector<int>,
                              Eigen::Map<Eigen::VectorXd> v) { gvalues.push_back(v); });
    for (std::size_t t = 0; t < names.size(); ++t) {
      std::vector<Slot> slots;
      for (Eigen::Index i = 0; i < values[t].size(); ++i) {
        slots.push_back({names[t] + "[" + std::to_string(i) + "]", &values[t][i], gvalues[t][i]});
      }
      tensors.push_back(std::move(slots));
    }
  }

  auto total_loss = [&](bool use_frozen, NetworkOutput* keep) {
    NetworkOutput out =
        network_forward(model, weights, images, initial, use_frozen ? frozen : fwd);
    const double value = block_losses(model, weights, out, targets, loss_weights).total;
    if (keep != nullptr) *keep = std::move(out);
    return value;
  };

  std::mt19937_64 rng(options.seed + 6);
  Eigen::VectorXd analytic(options.network_weights);
  Eigen::VectorXd numeric(options.network_weights);
  std::vector<std::string> labels;
  int sampled = 0;
  int cursor = 0;
  while (sampled < options.network_weights) {
    if (report.resampled > kMaxResamples) {
      throw std::runtime_error("check_network: too many unstable weight probes");
    }
    // Round-robin over tensors so small tensors (biases, batch norm) are covered.
    const std::vector<Slot>& slots = tensors[cursor++ % tensors.size()];
    const Slot& slot = slots[rng() % slots.size()];
    const double x = *slot.value;
    const double h = kNetworkStep * std::max(1.0, std::abs(x));
    bool stable = true;
    double f[2];
    for (int s = 0; s < 2; ++s) {
      *slot.value = x + (s == 0 ? h : -h);
      NetworkOutput probe;
      total_loss(false, &probe);
      stable = stable && same_renders(ref, probe) && DiscreteState::of(probe) == ref_state;
      f[s] = total_loss(true, nullptr);
    }
    *slot.value = x;
    if (!stable) {
      ++report.resampled;
      continue;
    }
    analytic[sampled] = slot.grad;
    numeric[sampled] = (f[0] - f[1]) / (2.0 * h);
    labels.push_back(slot.name);
    ++sampled;
  }
  const RelativeError err = relative_error(analytic, numeric);
  record(report, err, 0, labels.empty() ? "-" : labels[err.worst_index]);
  report.trials = sampled;
  return report;
}

std::vector<CategoryReport> run_gradchecks(const GradcheckOptions& options) {
  return {check_rasterizer(options), check_projection_jacobian(options),
          check_landmark_loss(options), check_network(options)};
}

}  // namespace vislayer
