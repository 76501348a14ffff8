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
#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vislayer/annotation.hpp"
#include "vislayer/config_json.hpp"
#include "vislayer/dataset.hpp"
#include "vislayer/file_util.hpp"
#include "vislayer/fitting.hpp"
#include "vislayer/gradcheck.hpp"
#include "vislayer/image_io.hpp"
#include "vislayer/losses.hpp"
#include "vislayer/model_io.hpp"
#include "vislayer/network.hpp"
#include "vislayer/synthetic_model.hpp"
#include "vislayer/training.hpp"
#include "vislayer/visualization_layer.hpp"

namespace vislayer::cli {

namespace fs = std::filesystem;

namespace {

// Invalid input: reported with exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
void override_if(const CLI::App* app, const char* flag, const T& value, T& target) {
  if (app->count(flag) > 0) target = value;
}

// ---------------------------------------------------------------- gen-model

struct GenModelArgs {
  std::uint64_t seed = 1;
  int vertices = 500;
  int id_bases = 8;
  int exp_bases = 4;
  std::string out;
};

void add_gen_model(CLI::App& app, GenModelArgs& a) {
  auto* cmd = app.add_subcommand("gen-model", "Generate a synthetic face model file");
  cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
  cmd->add_option("--vertices", a.vertices, "Target vertex count (>= 50)")
      ->check(CLI::Range(50, 1000000))
      ->capture_default_str();
  cmd->add_option("--id-bases", a.id_bases, "Number of identity bases (>= 1)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--exp-bases", a.exp_bases, "Number of expression bases (>= 1)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Output model file (JSON)")->required();
}

int run_gen_model(const GenModelArgs& a) {
  const ShapeModel model = generate_synthetic_model(a.seed, a.vertices, a.id_bases, a.exp_bases);
  save_model(model, a.out);
  std::cout << "model: " << a.out << "\nvertices: " << model.num_vertices()
            << "\nidentity_bases: " << model.num_identity()
            << "\nexpression_bases: " << model.num_expression()
            << "\nlandmarks: " << model.num_landmarks() << "\n";
  return 0;
}

// ----------------------------------------------------------------- gen-data

struct GenDataArgs {
  std::string model;
  std::uint64_t seed = 1;
  int count = 20;
  int size = 64;
  std::string out_dir;
  std::string format = "pgm";
};

void add_gen_data(CLI::App& app, GenDataArgs& a) {
  auto* cmd = app.add_subcommand("gen-data", "Render a synthetic annotated face dataset");
  cmd->add_option("--model", a.model, "Model file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
  cmd->add_option("--count", a.count, "Number of faces")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--size", a.size, "Image side in pixels")->check(CLI::Range(4, 4096))
      ->capture_default_str();
  cmd->add_option("--out-dir", a.out_dir, "Output directory")->required();
  cmd->add_option("--format", a.format, "Image format")->check(CLI::IsMember({"pgm", "png"}))
      ->capture_default_str();
}

int run_gen_data(const GenDataArgs& a) {
  const ShapeModel model = load_model(a.model);
  DatasetOptions options;
  options.seed = a.seed;
  options.count = a.count;
  options.image_size = a.size;
  const std::vector<FaceSample> samples = generate_synthetic_dataset(model, options);
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::ostringstream stem;
    stem << "face_" << std::setw(4) << std::setfill('0') << i;
    const std::string image_name = stem.str() + "." + a.format;
    write_image(fs::path(a.out_dir) / image_name, samples[i].image);
    Annotation ann;
    ann.image = image_name;
    ann.bbox = samples[i].bbox;
    ann.landmarks = samples[i].landmarks;
    ann.params = samples[i].truth;
    save_annotation(ann, fs::path(a.out_dir) / (stem.str() + ".json"));
  }
  std::cout << "faces: " << samples.size() << "\nout_dir: " << a.out_dir << "\n";
  return 0;
}

// ------------------------------------------------------------------- render

struct RenderArgs {
  std::string model;
  std::string annotation;
  std::vector<double> camera;
  std::vector<double> shape;
  int size = 64;
  double sigma = 1.0;
  int radius = 2;
  double background = 0.0;
  std::string mask = "1";
  std::string out;
  std::uint64_t seed = 1;
};

void add_render(CLI::App& app, RenderArgs& a) {
  auto* cmd = app.add_subcommand("render", "Render the visualization image of a parameter vector");
  cmd->add_option("--model", a.model, "Model file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--annotation", a.annotation, "Annotation file whose params are rendered")
      ->check(CLI::ExistingFile);
  cmd->add_option("--camera", a.camera, "Camera m1..m8 (8 values); default: frontal, centred")
      ->expected(8);
  cmd->add_option("--shape", a.shape, "Shape coefficients (identity then expression)");
  cmd->add_option("--size", a.size, "Image side in pixels")->check(CLI::Range(1, 4096))
      ->capture_default_str();
  cmd->add_option("--sigma", a.sigma, "Gaussian splat width in pixels")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--radius", a.radius, "Splat support radius in pixels")
      ->check(CLI::Range(1, 4096))->capture_default_str();
  cmd->add_option("--background", a.background, "Value of empty pixels")->capture_default_str();
  cmd->add_option("--mask", a.mask, "Mask: 1 (nose tip), 2 (five centres) or none")
      ->check(CLI::IsMember({"1", "2", "none"}))->capture_default_str();
  cmd->add_option("--out", a.out, "Output image (.pgm or .png); a .range.txt sidecar is written")
      ->required();
  cmd->add_option("--seed", a.seed, "Random seed (rendering is deterministic)")
      ->capture_default_str();
}

int run_render(const RenderArgs& a) {
  const ShapeModel model = load_model(a.model);
  ParamVector params;
  if (!a.annotation.empty()) {
    const Annotation ann = load_annotation(a.annotation);
    if (!ann.params) throw UsageError(a.annotation + ": annotation has no 'params' to render");
    params = *ann.params;
  } else {
    // Frontal face centred on the symmetry axis of the pixel grid.
    const double w = 0.6 * a.size;
    const double c = 0.5 * (a.size - 1);
    params = initialize_params({c - 0.5 * w, c - 0.5 * w, w, w}, model);
  }
  if (!a.camera.empty()) {
    for (int k = 0; k < kCameraParams; ++k) params.camera[k] = a.camera[k];
  }
  if (!a.shape.empty()) {
    if (static_cast<int>(a.shape.size()) != model.num_shape_params()) {
      throw UsageError("--shape: expected " + std::to_string(model.num_shape_params()) +
                       " values, got " + std::to_string(a.shape.size()));
    }
    params.shape = Eigen::Map<const Eigen::VectorXd>(a.shape.data(), a.shape.size());
  }
  RasterConfig cfg;
  cfg.width = cfg.height = a.size;
  cfg.sigma = a.sigma;
  cfg.support_radius = a.radius;
  cfg.background_value = a.background;
  cfg.mask = parse_mask(a.mask);
  const VisualizationOutput out = rasterize_forward(model, params, cfg);
  const ImageRange range = write_image(a.out, out.image);
  std::cout << "image: " << a.out << "\nwidth: " << a.size << "\nheight: " << a.size
            << "\nmin: " << range.min << "\nmax: " << range.max << "\n";
  return 0;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  GradcheckOptions options;
};

void add_gradcheck(CLI::App& app, GradcheckArgs& a) {
  auto* cmd = app.add_subcommand(
      "gradcheck", "Finite-difference checks of the analytic gradients (exit 1 on failure)");
  cmd->add_option("--seed", a.options.seed, "Random seed")->capture_default_str();
  cmd->add_option("--trials", a.options.trials, "Random configurations per category")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--size", a.options.image_size, "Rasterizer image side")
      ->check(CLI::Range(4, 512))->capture_default_str();
  cmd->add_option("--vertices", a.options.model_vertices, "Model vertex count")
      ->check(CLI::Range(50, 100000))->capture_default_str();
  cmd->add_option("--weights", a.options.network_weights, "Sampled weights, end-to-end check")
      ->check(CLI::PositiveNumber)->capture_default_str();
}

int run_gradcheck(const GradcheckArgs& a) {
  bool ok = true;
  for (const CategoryReport& r : run_gradchecks(a.options)) {
    std::cout << r.name << ": max_rel_error=" << std::scientific << std::setprecision(3)
              << r.max_error << " threshold=" << r.threshold << std::defaultfloat
              << " worst=" << r.worst_label << " (trial " << r.worst_trial << ", index "
              << r.worst_index << ") trials=" << r.trials << " resampled=" << r.resampled
              << " status=" << (r.passed() ? "PASS" : "FAIL") << "\n";
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------- fit

struct FitArgs {
  std::string model;
  std::string input;
  std::string out_dir;
  std::string csv;
  FitOptions options;
  int jitter = 0;
  std::uint64_t seed = 1;
};

void add_fit(CLI::App& app, FitArgs& a) {
  auto* cmd = app.add_subcommand("fit", "Fit model parameters to annotated 2D landmarks");
  cmd->add_option("--model", a.model, "Model file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--input", a.input, "Annotation file or directory of *.json annotations")
      ->required()->check(CLI::ExistingPath);
  cmd->add_option("--out-dir", a.out_dir, "Directory for annotations with fitted params");
  cmd->add_option("--csv", a.csv, "Per-face CSV (file, jitter, nme, loss, iterations)");
  cmd->add_option("--max-iters", a.options.max_iters, "Iteration limit")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--tol", a.options.tol, "Relative loss-change tolerance")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_option("--shape-steps", a.options.shape_steps, "Gradient steps on p per camera solve")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_option("--regularization", a.options.shape_regularization,
                  "Weight of the sum (p_j / stddev_j)^2 prior")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_option("--jitter", a.jitter, "Also fit this many jittered boxes per face")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed for the box jitter")->capture_default_str();
}

std::vector<fs::path> annotation_files(const fs::path& input) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(input);
  }
  if (files.empty()) throw UsageError(input.string() + ": no .json annotation files");
  return files;
}

int run_fit(const FitArgs& a) {
  const ShapeModel model = load_model(a.model);
  const std::vector<fs::path> files = annotation_files(a.input);
  if (!a.out_dir.empty()) fs::create_directories(a.out_dir);
  std::ostringstream csv;
  csv << "file,jitter,nme,loss,iterations\n";
  double sum = 0.0;
  int fits = 0;
  for (const fs::path& file : files) {
    Annotation ann = load_annotation(file);
    std::vector<BoundingBox> boxes = {ann.bbox};
    if (a.jitter > 0) {
      const std::vector<BoundingBox> extra = jitter_bbox(ann.bbox, a.seed, a.jitter);
      boxes.insert(boxes.end(), extra.begin(), extra.end());
    }
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      const FitResult r = fit_landmarks(model, ann.landmarks, boxes[j], a.options);
      csv << file.filename().string() << "," << j << "," << std::setprecision(10) << r.nme << ","
          << r.loss << "," << r.iterations << "\n";
      sum += r.nme;
      ++fits;
      if (j == 0) {
        ann.params = r.params;
        if (!a.out_dir.empty()) save_annotation(ann, fs::path(a.out_dir) / file.filename());
      }
    }
  }
  if (!a.csv.empty()) write_file_atomic(a.csv, csv.str());
  std::cout << "faces: " << files.size() << "\nfits: " << fits << "\nmean_nme: " << sum / fits
            << "\n";
  return 0;
}

// -------------------------------------------------------------- train / eval

// Settings shared by train and eval: the model, the data and the network.
struct Experiment {
  std::string model_path;
  SyntheticModelOptions model_options;
  DatasetOptions data;
  int train_count = 200;
  int val_count = 100;
  BlockConfig network;
  TrainOptions train;
};

void load_experiment(const std::string& path, Experiment& e) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::exception& ex) {
    throw ConfigError(path + ": parse error: " + ex.what());
  }
  if (!doc.is_object()) throw ConfigError(path + ": expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "model") {
        e.model_path = value.get<std::string>();
      } else if (key == "model_seed") {
        e.model_options.seed = value.get<std::uint64_t>();
      } else if (key == "model_vertices") {
        e.model_options.target_vertices = value.get<int>();
      } else if (key == "train_count") {
        e.train_count = value.get<int>();
      } else if (key == "val_count") {
        e.val_count = value.get<int>();
      } else if (key == "data") {
        update_from_json(value, e.data);
      } else if (key == "network") {
        update_from_json(value, e.network);
      } else if (key == "train") {
        update_from_json(value, e.train);
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    } catch (const Json::exception& ex) {
      throw ConfigError(path + ": key '" + key + "': wrong value type (" + ex.what() + ")");
    } catch (const ConfigError& ex) {
      throw ConfigError(path + ": " + ex.what());
    }
  }
}

ShapeModel experiment_model(const Experiment& e) {
  return e.model_path.empty() ? generate_synthetic_model(e.model_options)
                              : load_model(e.model_path);
}

struct ExperimentFlags {
  std::string config;
  std::string model;
  std::uint64_t seed = 1;
  int size = 64;
  int blocks = 2;
  std::string mask = "1";
  std::string inputs = "IFV";
  int val_count = 100;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config; flags override its values")
      ->check(CLI::ExistingFile);
  cmd->add_option("--model", f.model, "Model file (default: synthetic model from model_seed)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Seed for data generation and training");
  cmd->add_option("--size", f.size, "Input image side (even)")->check(CLI::Range(4, 1024));
  cmd->add_option("--blocks", f.blocks, "Number of visualization blocks")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--mask", f.mask, "Mask of the in-network renderings: 1, 2 or none")
      ->check(CLI::IsMember({"1", "2", "none"}));
  cmd->add_option("--inputs", f.inputs, "Block inputs: IFV, FV or IV")
      ->check(CLI::IsMember({"IFV", "FV", "IV"}));
  cmd->add_option("--val-count", f.val_count, "Validation faces")->check(CLI::PositiveNumber);
}

Experiment resolve_experiment(const CLI::App* cmd, const ExperimentFlags& f) {
  Experiment e;
  e.network.image_size = e.data.image_size;
  if (!f.config.empty()) load_experiment(f.config, e);
  override_if(cmd, "--model", f.model, e.model_path);
  if (cmd->count("--seed") > 0) {
    e.data.seed = f.seed;
    e.train.seed = f.seed;
  }
  if (cmd->count("--size") > 0) e.data.image_size = e.network.image_size = f.size;
  override_if(cmd, "--blocks", f.blocks, e.network.n_blocks);
  if (cmd->count("--mask") > 0) e.network.raster.mask = parse_mask(f.mask);
  if (cmd->count("--inputs") > 0) {
    Json j = {{"inputs", f.inputs}};
    update_from_json(j, e.network);
  }
  override_if(cmd, "--val-count", f.val_count, e.val_count);
  if (e.data.image_size != e.network.image_size) {
    throw ConfigError("data.image_size (" + std::to_string(e.data.image_size) +
                      ") differs from network.image_size (" +
                      std::to_string(e.network.image_size) + ")");
  }
  if (e.train_count < 1 || e.val_count < 1) {
    throw ConfigError("train_count and val_count must be >= 1");
  }
  return e;
}

// Training and validation sets come from disjoint random streams.
std::vector<FaceSample> make_split(const ShapeModel& model, const Experiment& e, bool validation) {
  DatasetOptions d = e.data;
  d.count = validation ? e.val_count : e.train_count;
  if (validation) d.seed = e.data.seed + 0x5bd1e995ULL;
  return generate_synthetic_dataset(model, d);
}

struct TrainArgs {
  ExperimentFlags common;
  int epochs = 30;
  double lr = 0.0;
  int batch = 5;
  int train_count = 200;
  bool detach = false;
  std::string out;
  std::string metrics;
  std::string dump_dir;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* cmd = app.add_subcommand("train", "Train the visualization-block network on synthetic faces");
  add_experiment_flags(cmd, a.common);
  cmd->add_option("--epochs", a.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  cmd->add_option("--lr", a.lr, "Learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--batch", a.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  cmd->add_option("--train-count", a.train_count, "Training faces")->check(CLI::PositiveNumber);
  cmd->add_flag("--detach", a.detach, "Stop gradients along the parameter path between blocks");
  cmd->add_option("--out", a.out, "Checkpoint file")->required();
  cmd->add_option("--metrics", a.metrics, "CSV log: epoch, block, loss, nme, mape");
  cmd->add_option("--dump-dir", a.dump_dir,
                  "Write the input and per-block visualization images of one validation face");
}

void dump_blocks(const ShapeModel& model, NetworkWeights& weights, const FaceSample& sample,
                 const fs::path& dir) {
  fs::create_directories(dir);
  const std::vector<FaceSample> one = {sample};
  const std::vector<int> idx = {0};
  const NetworkOutput out =
      network_forward(model, weights, batch_images(one, idx), {sample.initial}, ForwardOptions{});
  write_image(dir / "input.pgm", sample.image);
  for (int b = 0; b < weights.config.n_blocks; ++b) {
    const Tensor& v = out.visualization(b);
    const Eigen::MatrixXd img = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                               Eigen::Dynamic, Eigen::RowMajor>>(
        v.data.data(), v.h, v.w);
    write_image(dir / ("block_" + std::to_string(b + 1) + ".pgm"), img);
  }
}

int run_train(const CLI::App* cmd, const TrainArgs& a) {
  Experiment e = resolve_experiment(cmd, a.common);
  override_if(cmd, "--epochs", a.epochs, e.train.epochs);
  override_if(cmd, "--lr", a.lr, e.train.learning_rate);
  override_if(cmd, "--batch", a.batch, e.train.batch_size);
  override_if(cmd, "--train-count", a.train_count, e.train_count);
  if (a.detach) e.train.backward.detach_parameter_path = true;

  const ShapeModel model = experiment_model(e);
  const std::vector<FaceSample> train = make_split(model, e, false);
  const std::vector<FaceSample> val = make_split(model, e, true);

  std::ostringstream csv;
  csv << "epoch,block,loss,nme,mape\n";
  auto log_row = [&](int epoch, int block, double loss, double n, double m) {
    csv << epoch << "," << block << "," << std::setprecision(10) << loss << "," << n << "," << m
        << "\n";
  };
  TrainResult result = train_toy(model, e.network, train, val, e.train, [&](const EpochMetrics& m) {
    std::cout << "epoch " << m.epoch << ": loss=" << m.train_total << " val_nme=";
    for (std::size_t s = 0; s < m.validation.nme.size(); ++s) {
      std::cout << (s ? "/" : "") << std::fixed << std::setprecision(3) << m.validation.nme[s]
                << std::defaultfloat;
      log_row(m.epoch, static_cast<int>(s), s == 0 ? 0.0 : m.train_loss[s - 1],
              m.validation.nme[s], m.validation.mape[s]);
    }
    std::cout << "\n";
  });
  save_checkpoint(result.weights, a.out);
  if (!a.metrics.empty()) write_file_atomic(a.metrics, csv.str());
  if (!a.dump_dir.empty()) dump_blocks(model, result.weights, val.front(), a.dump_dir);

  const EvalResult& last =
      result.history.empty() ? result.initial_validation : result.history.back().validation;
  std::cout << "checkpoint: " << a.out << "\n";
  for (std::size_t s = 0; s < last.nme.size(); ++s) {
    std::cout << "nme_block_" << s << ": " << last.nme[s] << "\n";
  }
  return 0;
}

struct EvalArgs {
  ExperimentFlags common;
  std::string checkpoint;
  std::string init = "bbox";
  std::string csv;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* cmd = app.add_subcommand(
      "eval", "Evaluate a checkpoint (or the identity network) with NME/MAPE per block");
  add_experiment_flags(cmd, a.common);
  cmd->add_option("--checkpoint", a.checkpoint, "Checkpoint file (default: untrained identity network)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--init", a.init, "Initial parameters: bbox (frontal from the box) or truth")
      ->check(CLI::IsMember({"bbox", "truth"}))->capture_default_str();
  cmd->add_option("--csv", a.csv, "CSV output: block, nme, mape");
}

int run_eval(const CLI::App* cmd, const EvalArgs& a) {
  Experiment e = resolve_experiment(cmd, a.common);
  const ShapeModel model = experiment_model(e);
  const int dim = kCameraParams + model.num_shape_params();
  NetworkWeights weights = a.checkpoint.empty() ? NetworkWeights::create(e.network, dim, e.train.seed)
                                                : load_checkpoint(a.checkpoint);
  if (weights.param_dim != dim) {
    throw ConfigError("checkpoint parameter dimension " + std::to_string(weights.param_dim) +
                      " does not match the model (" + std::to_string(dim) + ")");
  }
  e.data.image_size = weights.config.image_size;
  std::vector<FaceSample> samples = make_split(model, e, true);
  if (a.init == "truth") {
    for (FaceSample& s : samples) s.initial = s.truth;
  }
  const EvalResult r = evaluate(model, weights, samples, e.train.eval_batch);
  std::ostringstream csv;
  csv << "block,nme,mape\n";
  std::cout << "samples: " << samples.size() << "\n";
  for (std::size_t s = 0; s < r.nme.size(); ++s) {
    std::cout << "nme_block_" << s << ": " << r.nme[s] << "\nmape_block_" << s << ": "
              << r.mape[s] << "\n";
    csv << s << "," << std::setprecision(10) << r.nme[s] << "," << r.mape[s] << "\n";
  }
  if (!a.csv.empty()) write_file_atomic(a.csv, csv.str());
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Differentiable face visualization layer: models, rendering, fitting, training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vislayer 1.0.0");

  GenModelArgs gen_model;
  GenDataArgs gen_data;
  RenderArgs render;
  GradcheckArgs gradcheck;
  FitArgs fit;
  TrainArgs train;
  EvalArgs eval;
  add_gen_model(app, gen_model);
  add_gen_data(app, gen_data);
  add_render(app, render);
  add_gradcheck(app, gradcheck);
  add_fit(app, fit);
  add_train(app, train);
  add_eval(app, eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("gen-model")) return run_gen_model(gen_model);
    if (app.got_subcommand("gen-data")) return run_gen_data(gen_data);
    if (app.got_subcommand("render")) return run_render(render);
    if (app.got_subcommand("gradcheck")) return run_gradcheck(gradcheck);
    if (app.got_subcommand("fit")) return run_fit(fit);
    if (app.got_subcommand("train")) return run_train(app.get_subcommand("train"), train);
    if (app.got_subcommand("eval")) return run_eval(app.get_subcommand("eval"), eval);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ModelFormatError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 2;
  } catch (const AnnotationError& e) {
    std::cerr << "annotation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace vislayer::cli
