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
#ifndef RETINA_TRAIN_TRAINER_HPP_
#define RETINA_TRAIN_TRAINER_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "retina/error.hpp"
#include "retina/metrics.hpp"
#include "retina/nnet.hpp"
#include "retina/sampler.hpp"
#include "retina/train/adam.hpp"
#include "retina/train/checkpoint.hpp"
#include "retina/train/dataset.hpp"
#include "retina/train/state.hpp"

namespace retina::train {

struct TrainConfig {
  std::size_t batch_size = 32;
  /// train(): total epochs to reach (a resumed state continues up to it).
  /// finetune(): number of additional epochs.
  int epochs = 10;
  std::size_t steps_per_epoch = 0;  // 0 = ceil(train size / batch size)
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double l2_coefficient = 1e-4;
  std::uint64_t seed = 0;
  bool balanced_sampling = true;
  bool augment = true;
  double validation_fraction = 0.1;
  std::size_t train_eval_limit = 256;
  double finetune_lr_scale = 0.1;
  std::filesystem::path checkpoint_dir;  // empty = keep everything in memory

  void validate() const {
    if (batch_size == 0) fail(ErrorKind::InvalidConfig, "batch_size must be positive");
    if (epochs < 0) fail(ErrorKind::InvalidConfig, "epochs must be non-negative");
    if (!(learning_rate > 0.0)) fail(ErrorKind::InvalidConfig, "learning_rate must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
      fail(ErrorKind::InvalidConfig, "Adam betas must be in (0, 1)");
    }
    if (!(adam_epsilon > 0.0)) fail(ErrorKind::InvalidConfig, "adam_epsilon must be positive");
    if (!(l2_coefficient >= 0.0)) fail(ErrorKind::InvalidConfig, "l2_coefficient must be non-negative");
    if (!(finetune_lr_scale > 0.0)) fail(ErrorKind::InvalidConfig, "finetune_lr_scale must be positive");
  }

  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_epsilon}; }
};

struct EvalResult {
  metrics::ConfusionMatrix confusion;
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  std::vector<nnet::Prediction> predictions;
};

/// Inference over the first `limit` images of `data`. Empty input yields NaN scores.
inline EvalResult evaluate(const nnet::NetworkSpec& spec, const nnet::ParamStore<float>& params, const Dataset& data,
                           std::size_t limit = std::numeric_limits<std::size_t>::max(), std::size_t chunk = 32) {
  EvalResult result;
  const std::size_t n = std::min(limit, data.size());
  if (n == 0) return result;
  std::vector<const Image*> images;
  std::vector<Grade> truth, pred;
  for (std::size_t i = 0; i < n; ++i) {
    images.push_back(&data.image(i));
    truth.push_back(data.grade(i));
  }
  result.predictions = nnet::predict_proba(spec, params, std::span<const Image* const>(images), chunk);
  for (const auto& p : result.predictions) pred.push_back(p.grade);
  result.confusion = metrics::confusion(truth, pred);
  result.kappa = metrics::quadratic_weighted_kappa(result.confusion);
  result.accuracy = metrics::accuracy(result.confusion);
  return result;
}

struct Batch {
  nnet::Tensor<float> images;  // B x 3 x S x S
  nnet::Tensor<float> labels;  // B x 5 one-hot
  std::vector<ImageId> ids;
};

/// Draws one batch: indices first, then per-image augmentation, all from
/// `rng` in that order.
inline Batch draw_batch(const Dataset& data, const sampler::WeightedDraw& table, std::size_t batch_size, bool augment,
                        Rng& rng) {
  std::vector<std::size_t> picks(batch_size);
  for (auto& p : picks) p = table.draw(rng);
  std::vector<Image> augmented;
  std::vector<const Image*> views;
  augmented.reserve(batch_size);
  for (const auto i : picks) {
    if (augment) {
      const auto spec = sampler::draw_augment(rng);
      augmented.push_back(sampler::augment(data.image(i), spec));
      views.push_back(&augmented.back());
    } else {
      views.push_back(&data.image(i));
    }
  }
  Batch batch;
  batch.images = nnet::to_batch<float>(views);
  batch.labels = nnet::Tensor<float>({batch_size, nnet::kNumClasses});
  for (std::size_t b = 0; b < batch_size; ++b) {
    batch.labels[b * nnet::kNumClasses + static_cast<std::size_t>(data.grade(picks[b]).value())] = 1.0f;
    batch.ids.push_back(data.id(picks[b]));
  }
  return batch;
}

/// Forward, loss, backward and one Adam update. Returns the batch loss.
inline double train_step(TrainState& state, const Batch& batch, const AdamConfig& adam) {
  auto trace = nnet::forward(state.spec, state.params, batch.images, nnet::Mode::train, state.rng);
  const double loss = nnet::loss(state.spec, state.params, trace, batch.labels);
  if (!std::isfinite(loss)) {
    std::string ids;
    for (const auto& id : batch.ids) ids += (ids.empty() ? "" : " ") + id.str();
    fail(ErrorKind::NonFiniteLoss, "loss is " + std::to_string(loss) + " on batch [" + ids + "]");
  }
  const auto grads = nnet::backward(state.spec, state.params, trace, batch.labels);
  adam_step(state.params, grads, state.adam, adam);
  return loss;
}

inline void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << "epoch,train_kappa,val_kappa,train_loss,val_acc\n";
  char line[160];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%llu,%.6f,%.6f,%.6f,%.6f\n", static_cast<unsigned long long>(r.epoch),
                  r.train_kappa, r.val_kappa, r.train_loss, r.val_accuracy);
    out << line;
  }
}

struct TrainResult {
  TrainState state;                       // after the last epoch
  nnet::ParamStore<float> best_params;    // highest selection score seen
  double best_score = -std::numeric_limits<double>::infinity();
  std::uint64_t best_epoch = 0;
};

/// Called after every epoch; returning false stops the loop early.
using EpochCallback = std::function<bool(const EpochRecord&, const TrainState&)>;

namespace detail {

inline double selection_score(const EpochRecord& r) {
  return std::isnan(r.val_kappa) ? r.train_kappa : r.val_kappa;
}

inline TrainResult run_epochs(TrainState state, const Dataset& train, const Dataset& val, const TrainConfig& cfg,
                              std::uint64_t last_epoch, bool balanced, TrainResult result,
                              const EpochCallback& on_epoch) {
  if (train.empty()) fail(ErrorKind::EmptyManifest, "training set is empty");
  const auto dist = train.distribution();
  const auto weights = balanced ? sampler::build_sampling_weights(dist) : sampler::natural_weights(dist);
  const auto grades = train.grades();
  const sampler::WeightedDraw table(grades, weights);
  const std::size_t steps =
      cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : (train.size() + cfg.batch_size - 1) / cfg.batch_size;
  const AdamConfig adam = cfg.adam();

  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  while (state.epoch < last_epoch) {
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const Batch batch = draw_batch(train, table, cfg.batch_size, cfg.augment, state.rng);
      loss_sum += train_step(state, batch, adam);
    }
    ++state.epoch;

    EpochRecord record;
    record.epoch = state.epoch;
    record.train_loss = loss_sum / static_cast<double>(steps);
    record.train_kappa = evaluate(state.spec, state.params, train, cfg.train_eval_limit).kappa;
    const EvalResult v = evaluate(state.spec, state.params, val);
    record.val_kappa = v.kappa;
    record.val_accuracy = v.accuracy;
    state.history.push_back(record);

    const bool improved = selection_score(record) > result.best_score;
    if (improved) {
      result.best_score = selection_score(record);
      result.best_epoch = record.epoch;
      result.best_params = state.params;
    }
    if (!cfg.checkpoint_dir.empty()) {
      save_checkpoint(state, cfg.checkpoint_dir / "latest.rdrc");
      if (improved) save_checkpoint(state, cfg.checkpoint_dir / "best.rdrc");
      write_history_csv(state.history, cfg.checkpoint_dir / "history.csv");
    }
    if (on_epoch && !on_epoch(record, state)) break;
  }
  result.state = std::move(state);
  return result;
}

}  // namespace detail

/// Trains until `cfg.epochs` total epochs have run, starting from whatever
/// epoch `state` is at. Writes latest/best checkpoints and history.csv each
/// epoch when `cfg.checkpoint_dir` is set.
inline TrainResult train(TrainState state, const Dataset& train_set, const Dataset& val, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  TrainResult result;
  result.best_params = state.params;
  for (const auto& r : state.history) {
    if (detail::selection_score(r) > result.best_score) {
      result.best_score = detail::selection_score(r);
      result.best_epoch = r.epoch;
    }
  }
  if (!cfg.checkpoint_dir.empty() && !state.history.empty()) {
    const auto best = cfg.checkpoint_dir / "best.rdrc";
    if (std::filesystem::exists(best)) result.best_params = load_checkpoint(best).params;
  }
  return detail::run_epochs(std::move(state), train_set, val, cfg, static_cast<std::uint64_t>(cfg.epochs),
                            cfg.balanced_sampling, std::move(result), on_epoch);
}

/// Continues training on the natural class distribution (no re-sampling)
/// at learning_rate * finetune_lr_scale with fresh Adam moments, for
/// `cfg.epochs` more epochs. The starting parameters compete in model
/// selection, so the returned best_params never score below them.
inline TrainResult finetune(TrainState state, const Dataset& train_set, const Dataset& val, TrainConfig cfg,
                            const EpochCallback& on_epoch = {}) {
  cfg.validate();
  cfg.balanced_sampling = false;
  cfg.learning_rate *= cfg.finetune_lr_scale;
  state.adam = AdamState<float>{};

  TrainResult result;
  result.best_params = state.params;
  result.best_epoch = state.epoch;
  const EvalResult start_val = evaluate(state.spec, state.params, val);
  result.best_score = std::isnan(start_val.kappa)
                          ? evaluate(state.spec, state.params, train_set, cfg.train_eval_limit).kappa
                          : start_val.kappa;
  if (!cfg.checkpoint_dir.empty()) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    save_checkpoint(state, cfg.checkpoint_dir / "best.rdrc");
  }
  if (cfg.epochs == 0) {
    result.state = std::move(state);
    return result;
  }
  const std::uint64_t last = state.epoch + static_cast<std::uint64_t>(cfg.epochs);
  return detail::run_epochs(std::move(state), train_set, val, cfg, last, false, std::move(result), on_epoch);
}

}  // namespace retina::train

#endif  // RETINA_TRAIN_TRAINER_HPP_
