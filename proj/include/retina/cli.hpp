/**
 * Copyright 2026 The Retina Screening Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef RETINA_CLI_HPP_
#define RETINA_CLI_HPP_

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <opencv2/core/version.hpp>

#include "retina/dataio.hpp"
#include "retina/error.hpp"
#include "retina/metrics.hpp"
#include "retina/nnet.hpp"
#include "retina/pairing.hpp"
#include "retina/predictions.hpp"
#include "retina/prep.hpp"
#include "retina/synthgen.hpp"
#include "retina/train.hpp"

#ifndef RETINA_VERSION
#define RETINA_VERSION "dev"
#endif

namespace retina::cli {

inline constexpr const char* kProvenanceName = "provenance.toml";
inline constexpr std::uint64_t kSplitStream = 3;

struct PrepOptions {
  prep::PrepConfig cfg;
};

struct SynthOptions {
  synth::SynthConfig cfg;
  std::vector<double> class_probs{0.74, 0.07, 0.1448, 0.0252, 0.02};
  std::string out;
};

struct PrepCommand {
  PrepOptions prep;
  std::string in, out;
};

struct TrainOptions {
  train::TrainConfig cfg;
  PrepOptions prep;
  std::string data, out;
  int input_size = 512;
  double width_scale = 1.0;
  double dropout = 0.25;
  bool no_balance = false;
  bool no_augment = false;
  bool resume = false;
};

struct FinetuneOptions {
  train::TrainConfig cfg;
  PrepOptions prep;
  std::string checkpoint, data, out;
  bool no_augment = false;
};

struct PredictOptions {
  PrepOptions prep;
  std::string checkpoint, in, out;
  std::size_t chunk = 32;
};

struct EvaluateOptions {
  std::string pred, truth, json;
};

struct PairOptions {
  std::string pred, truth, out;
  double lambda = 0.0;
};

namespace detail {

/// Doubles get a round-trip default string, so provenance files reproduce
/// defaults exactly.
inline CLI::Option* add_real(CLI::App* app, const std::string& name, double& v, const std::string& desc) {
  char buf[40];
  const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
  return app->add_option(name, v, desc)->default_str(std::string(buf, end));
}

inline void add_prep_options(CLI::App* app, PrepOptions& p) {
  detail::add_real(app, "--threshold-frac", p.cfg.row_threshold_frac, "Crop threshold as a fraction of the peak row/column sum");
  detail::add_real(app, "--sigma-over-radius", p.cfg.sigma_over_radius, "Blur sigma relative to the retina radius");
  detail::add_real(app, "--gain", p.cfg.subtract_gain, "Local-mean subtraction gain");
  detail::add_real(app, "--mask-reduction", p.cfg.mask_area_reduction, "Fraction of the retina area removed by the mask");
}

inline std::string joined(const std::vector<std::string>& args) {
  std::string s;
  for (const auto& a : args) {
    if (!s.empty()) s += ' ';
    const bool quote = a.empty() || a.find_first_of(" \t\"'") != std::string::npos;
    s += quote ? "'" + a + "'" : a;
  }
  return s;
}

/// Resolved options of `sub` as a config file that `--config` accepts,
/// headed by comments naming the build and the command line.
inline void write_provenance(const CLI::App& sub, const std::vector<std::string>& args,
                             const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IoError, "cannot write " + path.string());
  f << "# retina " << RETINA_VERSION << ", checkpoint format " << train::kCheckpointVersion << ", Eigen "
    << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << ", OpenCV "
    << CV_VERSION << '\n';
  f << "# command: " << joined(args) << '\n';
  f << "# rerun with: retina --config " << path.filename().string() << ' ' << sub.get_name() << '\n';
  f << '[' << sub.get_name() << "]\n" << sub.config_to_str(true, false);
  if (!f) fail(ErrorKind::IoError, "write failed: " + path.string());
}

inline std::filesystem::path beside(const std::filesystem::path& file) {
  auto p = file;
  p += ".provenance.toml";
  return p;
}

inline void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

inline std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

/// `--config FILE` written after the subcommand is moved in front of it;
/// CLI11 only reads config files at the top level.
inline std::vector<std::string> hoist_config(std::vector<std::string> args, const CLI::App& app) {
  std::size_t sub = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--") break;
    if (app.get_subcommand_no_throw(args[i]) != nullptr) {
      sub = i;
      break;
    }
  }
  std::vector<std::string> moved;
  for (std::size_t i = sub + 1; i < args.size();) {
    if (args[i] == "--") break;
    if (args[i] == "--config" && i + 1 < args.size()) {
      moved.insert(moved.end(), {args[i], args[i + 1]});
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    } else if (args[i].starts_with("--config=")) {
      moved.push_back(args[i]);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub), moved.begin(), moved.end());
  return args;
}

inline train::EpochCallback epoch_printer(std::ostream& out) {
  return [&out](const train::EpochRecord& r, const train::TrainState&) {
    out << "epoch " << r.epoch << " loss " << fixed(r.train_loss, 4) << " train_kappa " << fixed(r.train_kappa, 4)
        << " val_kappa " << fixed(r.val_kappa, 4) << " val_accuracy " << fixed(r.val_accuracy, 4) << std::endl;
    return true;
  };
}

// ---- commands ----

inline void run_synth(SynthOptions& o, const CLI::App& sub, const std::vector<std::string>& args, std::ostream& out) {
  std::copy(o.class_probs.begin(), o.class_probs.end(), o.cfg.class_probabilities.begin());
  const LabelManifest m = synth::generate_dataset(o.cfg, o.out);
  write_provenance(sub, args, std::filesystem::path(o.out) / kProvenanceName);
  out << "wrote " << m.size() << " images to " << o.out << "\ngrades";
  for (const auto c : m.counts()) out << ' ' << c;
  out << '\n';
}

inline void run_prep(PrepCommand& o, const CLI::App& sub, const std::vector<std::string>& args, std::ostream& out,
                     std::ostream& err) {
  o.prep.cfg.validate();
  const std::filesystem::path in(o.in), dst(o.out);
  const auto files = list_image_files(in, err);
  std::optional<LabelManifest> labels;
  if (std::filesystem::exists(in / "labels.csv")) labels = load_labels(in / "labels.csv");
  make_dir(dst);

  LabelManifest kept;
  std::size_t done = 0;
  for (const auto& f : files) {
    const std::string name = f.path.filename().string();
    try {
      const Image img = preprocess(load_image(f.path), o.prep.cfg, name);
      save_png(img, dst / (f.id.str() + ".png"));
      if (labels && labels->contains(f.id)) kept.add(f.id, labels->grade(f.id));
      ++done;
    } catch (const Error& e) {
      err << "warning: " << name << ": " << e.what() << '\n';
    }
  }
  if (done == 0) fail(ErrorKind::EmptyInput, "no image in " + in.string() + " could be preprocessed");
  if (labels) save_labels(kept, dst / "labels.csv");
  write_provenance(sub, args, dst / kProvenanceName);
  out << "preprocessed " << done << " of " << files.size() << " images into " << dst.string() << '\n';
}

inline train::Split load_split(const std::string& dir, prep::PrepConfig prep_cfg, int canvas,
                               const train::TrainConfig& cfg) {
  prep_cfg.canvas_size = canvas;
  prep_cfg.validate();
  const auto data = train::Dataset::from_directory(dir, prep_cfg);
  if (data.empty()) fail(ErrorKind::EmptyManifest, dir + "/labels.csv has no rows");
  return train::split_by_patient(data, cfg.validation_fraction, derive_seed(cfg.seed, kSplitStream));
}

inline void run_train(TrainOptions& o, const CLI::App& sub, const std::vector<std::string>& args,
                      std::ostream& out) {
  auto cfg = o.cfg;
  cfg.balanced_sampling = !o.no_balance;
  cfg.augment = !o.no_augment;
  cfg.checkpoint_dir = o.out;
  cfg.validate();
  const auto spec = nnet::grading_net_spec(o.input_size, o.width_scale, cfg.l2_coefficient, o.dropout);
  nnet::shape_chain(spec);

  train::TrainState state;
  const auto latest = std::filesystem::path(o.out) / "latest.rdrc";
  if (o.resume && std::filesystem::exists(latest)) {
    state = train::load_checkpoint(latest);
    if (nnet::describe(state.spec) != nnet::describe(spec)) {
      fail(ErrorKind::InvalidConfig, latest.string() + " holds a different architecture than the options ask for");
    }
    out << "resuming from epoch " << state.epoch << '\n';
  } else {
    state = train::initial_state(spec, cfg.seed);
  }
  const auto split = load_split(o.data, o.prep.cfg, o.input_size, cfg);
  out << "train " << split.train.size() << " images, validation " << split.validation.size() << " images, "
      << nnet::param_count(spec).total << " parameters\n";

  make_dir(o.out);
  write_provenance(sub, args, std::filesystem::path(o.out) / kProvenanceName);
  const auto result = train::train(std::move(state), split.train, split.validation, cfg, epoch_printer(out));
  out << "best epoch " << result.best_epoch << " score " << fixed(result.best_score, 4) << '\n';
}

inline void run_finetune(FinetuneOptions& o, const CLI::App& sub, const std::vector<std::string>& args,
                         std::ostream& out) {
  auto cfg = o.cfg;
  cfg.augment = !o.no_augment;
  cfg.checkpoint_dir = o.out;
  cfg.validate();
  train::TrainState state = train::load_checkpoint(o.checkpoint);
  const auto split = load_split(o.data, o.prep.cfg, state.spec.height, cfg);

  make_dir(o.out);
  write_provenance(sub, args, std::filesystem::path(o.out) / kProvenanceName);
  const auto result = train::finetune(std::move(state), split.train, split.validation, cfg, epoch_printer(out));
  out << "best epoch " << result.best_epoch << " score " << fixed(result.best_score, 4) << '\n';
}

inline void run_predict(PredictOptions& o, const CLI::App& sub, const std::vector<std::string>& args,
                        std::ostream& out, std::ostream& err) {
  if (o.chunk == 0) fail(ErrorKind::InvalidConfig, "chunk must be positive");
  const train::TrainState state = train::load_checkpoint(o.checkpoint);
  if (state.spec.height != state.spec.width) fail(ErrorKind::InvalidInputSize, "checkpoint input is not square");
  auto prep_cfg = o.prep.cfg;
  prep_cfg.canvas_size = state.spec.height;
  prep_cfg.validate();

  const auto files = list_image_files(o.in, err);
  PredictionTable table;
  std::vector<Image> images;
  std::vector<ImageId> ids;
  const auto flush = [&] {
    const auto preds = nnet::predict_proba(state.spec, state.params, images, o.chunk);
    for (std::size_t i = 0; i < preds.size(); ++i) table[ids[i]] = {preds[i].probabilities, preds[i].grade};
    images.clear();
    ids.clear();
  };
  for (const auto& f : files) {
    const std::string name = f.path.filename().string();
    try {
      Image img = load_image(f.path);
      if (img.height() != prep_cfg.canvas_size || img.width() != prep_cfg.canvas_size) {
        img = preprocess(img, prep_cfg, name);
      }
      images.push_back(std::move(img));
      ids.push_back(f.id);
    } catch (const Error& e) {
      err << "warning: " << name << ": " << e.what() << '\n';
    }
    if (images.size() == o.chunk) flush();
  }
  flush();
  if (table.empty()) fail(ErrorKind::EmptyInput, "no image in " + o.in + " could be scored");

  const std::filesystem::path dst(o.out);
  if (dst.has_parent_path()) make_dir(dst.parent_path());
  save_predictions(table, dst);
  write_provenance(sub, args, beside(dst));
  out << "scored " << table.size() << " of " << files.size() << " images into " << o.out << '\n';
}

inline void run_evaluate(EvaluateOptions& o, const CLI::App& sub, const std::vector<std::string>& args,
                         std::ostream& out, std::ostream& err) {
  const PredictionTable preds = load_predictions(o.pred);
  const LabelManifest truth = load_labels(o.truth);
  std::vector<Grade> t, p;
  std::size_t no_pred = 0;
  for (const auto& [id, g] : truth.entries()) {
    const auto it = preds.find(id);
    if (it == preds.end()) {
      ++no_pred;
      continue;
    }
    t.push_back(g);
    p.push_back(it->second.level);
  }
  const std::size_t no_truth = preds.size() - t.size();
  if (no_pred > 0) err << "warning: " << no_pred << " labelled images have no prediction\n";
  if (no_truth > 0) err << "warning: " << no_truth << " predictions have no label\n";
  if (t.empty()) fail(ErrorKind::EmptyInput, "no prediction matches a label");

  const auto cm = metrics::confusion(t, p);
  const double kappa = metrics::quadratic_weighted_kappa(cm);
  const double acc = metrics::accuracy(cm);
  out << "images " << t.size() << "\nkappa " << fixed(kappa) << "\naccuracy " << fixed(acc)
      << "\nconfusion (rows truth, columns predicted)\n";
  for (const auto& row : cm.counts) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << std::setw(6) << row[j];
    out << '\n';
  }

  if (!o.json.empty()) {
    nlohmann::json j;
    j["kappa"] = kappa;
    j["accuracy"] = acc;
    j["confusion"] = cm.counts;
    const std::filesystem::path dst(o.json);
    if (dst.has_parent_path()) make_dir(dst.parent_path());
    std::ofstream f(dst, std::ios::binary);
    f << j.dump(2) << '\n';
    if (!f) fail(ErrorKind::IoError, "cannot write " + dst.string());
    write_provenance(sub, args, beside(dst));
  }
}

inline void run_pair(PairOptions& o, const CLI::App& sub, const std::vector<std::string>& args,
                     std::ostream& out) {
  const PredictionTable preds = load_predictions(o.pred);
  std::map<ImageId, ProbabilityVector> probs;
  for (const auto& [id, row] : preds) probs.emplace(id, row.probabilities);

  pairing::BlendConfig blend{o.lambda};
  std::vector<pairing::PatientRecord> records;
  if (!o.truth.empty()) {
    const LabelManifest truth = load_labels(o.truth);
    records = pairing::group_by_patient(probs, &truth);
    blend = pairing::tune_lambda(records);
    out << "kappa before " << fixed(pairing::blended_kappa(records, {0.0})) << " after "
        << fixed(pairing::blended_kappa(records, blend)) << " on labelled images\n";
  } else {
    records = pairing::group_by_patient(probs);
  }
  blend.validate();

  PredictionTable table;
  for (const auto& [id, p] : pairing::blend_all(records, blend)) table[id] = {p, predicted_grade(p)};
  const std::filesystem::path dst(o.out);
  if (dst.has_parent_path()) make_dir(dst.parent_path());
  save_predictions(table, dst);
  write_provenance(sub, args, beside(dst));
  out << "lambda " << blend.lambda << '\n';
}

}  // namespace detail

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns 0 on success, 1 on a domain error, 2 on a usage error.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Diabetic retinopathy grading from fundus photographs", "retina"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML-style file of option values; flags given on the command line win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_version_flag("--version", RETINA_VERSION);
  app.require_subcommand(1);

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic fundus dataset");
  synth->add_option("--out", so.out, "Output directory")->required();
  synth->add_option("--patients", so.cfg.n_patients, "Number of patients (two eyes each)");
  synth->add_option("--size", so.cfg.image_size, "Image side in pixels");
  detail::add_real(synth, "--agreement", so.cfg.eye_grade_agreement, "Probability that both eyes share a grade");
  synth->add_option("--class-probs", so.class_probs, "Probability of grades 0-4")->expected(5);
  synth->add_option("--seed", so.cfg.seed, "Random seed");

  PrepCommand po;
  auto* prep_cmd = app.add_subcommand("prep", "Preprocess a directory of fundus images");
  prep_cmd->add_option("--in", po.in, "Input image directory")->required();
  prep_cmd->add_option("--out", po.out, "Output directory")->required();
  prep_cmd->add_option("--canvas", po.prep.cfg.canvas_size, "Output side in pixels");
  detail::add_prep_options(prep_cmd, po.prep);

  TrainOptions to;
  auto* train_cmd = app.add_subcommand("train", "Train a network from scratch on class-balanced batches");
  train_cmd->add_option("--data", to.data, "Dataset directory with labels.csv")->required();
  train_cmd->add_option("--out", to.out, "Checkpoint directory")->required();
  train_cmd->add_option("--input-size", to.input_size, "Network input side in pixels");
  detail::add_real(train_cmd, "--width-scale", to.width_scale, "Multiplier on convolution widths");
  detail::add_real(train_cmd, "--dropout", to.dropout, "Dropout rate");
  train_cmd->add_option("--epochs", to.cfg.epochs, "Total epochs to reach");
  train_cmd->add_option("--batch-size", to.cfg.batch_size, "Images per batch");
  train_cmd->add_option("--steps-per-epoch", to.cfg.steps_per_epoch, "Batches per epoch (0: one pass)");
  detail::add_real(train_cmd, "--lr", to.cfg.learning_rate, "Adam learning rate");
  detail::add_real(train_cmd, "--l2", to.cfg.l2_coefficient, "L2 coefficient on dense weights");
  detail::add_real(train_cmd, "--val-fraction", to.cfg.validation_fraction, "Fraction of patients held out");
  train_cmd->add_option("--train-eval-limit", to.cfg.train_eval_limit, "Training images scored per epoch");
  train_cmd->add_flag("--no-balance", to.no_balance, "Sample the natural class distribution");
  train_cmd->add_flag("--no-augment", to.no_augment, "Disable rotations and flips");
  train_cmd->add_flag("--resume", to.resume, "Continue from <out>/latest.rdrc if present");
  train_cmd->add_option("--seed", to.cfg.seed, "Random seed");
  detail::add_prep_options(train_cmd, to.prep);

  FinetuneOptions fo;
  fo.cfg.epochs = 5;
  auto* ft_cmd = app.add_subcommand("finetune", "Continue training on the natural class distribution");
  ft_cmd->add_option("--checkpoint", fo.checkpoint, "Checkpoint to start from")->required();
  ft_cmd->add_option("--data", fo.data, "Dataset directory with labels.csv")->required();
  ft_cmd->add_option("--out", fo.out, "Checkpoint directory")->required();
  ft_cmd->add_option("--epochs", fo.cfg.epochs, "Additional epochs");
  ft_cmd->add_option("--batch-size", fo.cfg.batch_size, "Images per batch");
  ft_cmd->add_option("--steps-per-epoch", fo.cfg.steps_per_epoch, "Batches per epoch (0: one pass)");
  detail::add_real(ft_cmd, "--lr", fo.cfg.learning_rate, "Base learning rate");
  detail::add_real(ft_cmd, "--lr-scale", fo.cfg.finetune_lr_scale, "Multiplier on the base learning rate");
  detail::add_real(ft_cmd, "--val-fraction", fo.cfg.validation_fraction, "Fraction of patients held out");
  ft_cmd->add_option("--train-eval-limit", fo.cfg.train_eval_limit, "Training images scored per epoch");
  ft_cmd->add_flag("--no-augment", fo.no_augment, "Disable rotations and flips");
  ft_cmd->add_option("--seed", fo.cfg.seed, "Seed for the validation split");
  detail::add_prep_options(ft_cmd, fo.prep);

  PredictOptions pro;
  auto* pred_cmd = app.add_subcommand("predict", "Score images with a checkpoint");
  pred_cmd->add_option("--checkpoint", pro.checkpoint, "Checkpoint file")->required();
  pred_cmd->add_option("--in", pro.in, "Image directory")->required();
  pred_cmd->add_option("--out", pro.out, "Predictions CSV")->required();
  pred_cmd->add_option("--chunk", pro.chunk, "Images per forward pass");
  detail::add_prep_options(pred_cmd, pro.prep);

  EvaluateOptions eo;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against labels");
  eval_cmd->add_option("--pred", eo.pred, "Predictions CSV")->required();
  eval_cmd->add_option("--truth", eo.truth, "Labels CSV")->required();
  eval_cmd->add_option("--json", eo.json, "Also write the report as JSON here");

  PairOptions pao;
  auto* pair_cmd = app.add_subcommand("pair", "Blend the predictions of a patient's two eyes");
  pair_cmd->add_option("--pred", pao.pred, "Predictions CSV")->required();
  pair_cmd->add_option("--out", pao.out, "Blended predictions CSV")->required();
  detail::add_real(pair_cmd, "--lambda", pao.lambda, "Weight given to the other eye, in [0, 0.5]");
  pair_cmd->add_option("--truth", pao.truth, "Labels CSV; when given, lambda is tuned on it");

  std::vector<std::string> argv = detail::hoist_config(args, app);
  try {
    for (std::size_t i = 0; i < argv.size(); ++i) {
      if (argv[i] == "--config") {
        ++i;
      } else if (!argv[i].starts_with("-")) {
        if (app.get_subcommand_no_throw(argv[i]) == nullptr) {
          throw CLI::ExtrasError("unknown subcommand '" + argv[i] + "'", CLI::ExitCodes::ExtrasError);
        }
        break;
      }
    }
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  std::vector<std::string> full{"retina"};
  full.insert(full.end(), args.begin(), args.end());
  try {
    if (synth->parsed()) detail::run_synth(so, *synth, full, out);
    if (prep_cmd->parsed()) detail::run_prep(po, *prep_cmd, full, out, err);
    if (train_cmd->parsed()) detail::run_train(to, *train_cmd, full, out);
    if (ft_cmd->parsed()) detail::run_finetune(fo, *ft_cmd, full, out);
    if (pred_cmd->parsed()) detail::run_predict(pro, *pred_cmd, full, out, err);
    if (eval_cmd->parsed()) detail::run_evaluate(eo, *eval_cmd, full, out, err);
    if (pair_cmd->parsed()) detail::run_pair(pao, *pair_cmd, full, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << to_string(ErrorKind::IoError) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace retina::cli

#endif  // RETINA_CLI_HPP_
