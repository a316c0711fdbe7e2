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
#ifndef RETINA_TRAIN_DATASET_HPP_
#define RETINA_TRAIN_DATASET_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "retina/dataio.hpp"
#include "retina/prep.hpp"
#include "retina/rng.hpp"
#include "retina/sampler.hpp"

namespace retina::train {

/// Labelled images, either held in memory or fetched on first use through a
/// loader (then cached). Copies share loaded images.
class Dataset {
 public:
  using Loader = std::function<Image(const ImageId&)>;

  Dataset() = default;

  static Dataset in_memory(std::vector<LabeledImage> items) {
    Dataset d;
    for (auto& item : items) {
      d.entries_.push_back({item.id, item.grade, std::make_shared<Slot>()});
      d.entries_.back().slot->image = std::move(item.pixels);
      d.entries_.back().slot->loaded = true;
    }
    return d;
  }

  static Dataset lazy(const LabelManifest& manifest, Loader loader) {
    Dataset d;
    d.loader_ = std::make_shared<Loader>(std::move(loader));
    for (const auto& [id, grade] : manifest.entries()) d.entries_.push_back({id, grade, std::make_shared<Slot>()});
    return d;
  }

  /// labels.csv plus "<id>.png|jpg|jpeg" images. Images that are not
  /// already canvas-sized squares are run through preprocessing.
  static Dataset from_directory(const std::filesystem::path& dir, const prep::PrepConfig& prep_cfg) {
    const LabelManifest manifest = load_labels(dir / "labels.csv");
    std::map<ImageId, std::filesystem::path> paths;
    for (const auto& f : list_image_files(dir)) paths.emplace(f.id, f.path);
    for (const auto& [id, grade] : manifest.entries()) {
      if (!paths.contains(id)) fail(ErrorKind::MissingFile, (dir / (id.str() + ".png")).string());
    }
    return lazy(manifest, [paths, prep_cfg](const ImageId& id) {
      Image img = load_image(paths.at(id));
      if (img.height() == prep_cfg.canvas_size && img.width() == prep_cfg.canvas_size) return img;
      return prep::preprocess(img, prep_cfg, id.str());
    });
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const ImageId& id(std::size_t i) const { return entries_.at(i).id; }
  Grade grade(std::size_t i) const { return entries_.at(i).grade; }

  const Image& image(std::size_t i) const {
    Slot& slot = *entries_.at(i).slot;
    if (!slot.loaded) {
      slot.image = (*loader_)(entries_[i].id);
      slot.loaded = true;
    }
    return slot.image;
  }

  std::vector<Grade> grades() const {
    std::vector<Grade> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.grade);
    return out;
  }

  LabelManifest manifest() const {
    LabelManifest m;
    for (const auto& e : entries_) m.add(e.id, e.grade);
    return m;
  }

  sampler::ClassDistribution distribution() const { return sampler::class_distribution(manifest()); }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset d;
    d.loader_ = loader_;
    for (const auto i : indices) d.entries_.push_back(entries_.at(i));
    return d;
  }

 private:
  struct Slot {
    Image image;
    bool loaded = false;
  };
  struct Entry {
    ImageId id;
    Grade grade;
    std::shared_ptr<Slot> slot;
  };

  std::vector<Entry> entries_;
  std::shared_ptr<Loader> loader_;
};

struct Split {
  Dataset train;
  Dataset validation;
};

/// Holds out ceil(fraction * patients) whole patients, chosen by a seeded
/// shuffle, so both eyes of a patient land on the same side.
inline Split split_by_patient(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) fail(ErrorKind::InvalidConfig, "validation fraction must be in [0, 1)");
  std::vector<std::uint64_t> patients;
  for (std::size_t i = 0; i < data.size(); ++i) patients.push_back(data.id(i).patient);
  std::ranges::sort(patients);
  patients.erase(std::unique(patients.begin(), patients.end()), patients.end());

  Rng rng(seed);
  for (std::size_t i = patients.size(); i > 1; --i) std::swap(patients[i - 1], patients[rng.below(i)]);
  const auto held = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(patients.size()) - 1e-9));
  std::vector<std::uint64_t> val_patients(patients.begin(), patients.begin() + static_cast<std::ptrdiff_t>(held));
  std::ranges::sort(val_patients);

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (std::ranges::binary_search(val_patients, data.id(i).patient) ? val_idx : train_idx).push_back(i);
  }
  return {data.subset(train_idx), data.subset(val_idx)};
}

}  // namespace retina::train

#endif  // RETINA_TRAIN_DATASET_HPP_
