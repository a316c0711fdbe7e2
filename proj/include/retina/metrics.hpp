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
#ifndef RETINA_METRICS_HPP_
#define RETINA_METRICS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "retina/dataio.hpp"
#include "retina/error.hpp"

namespace retina::metrics {

/// Rows are true grades, columns predicted grades.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumGrades>, kNumGrades> counts{};
  std::uint64_t n = 0;

  void add(Grade truth, Grade pred) {
    ++counts[static_cast<std::size_t>(truth.value())][static_cast<std::size_t>(pred.value())];
    ++n;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const Grade> truth, std::span<const Grade> pred) {
  if (truth.size() != pred.size()) {
    fail(ErrorKind::LengthMismatch,
         std::to_string(truth.size()) + " truth labels vs " + std::to_string(pred.size()) + " predictions");
  }
  if (truth.empty()) fail(ErrorKind::EmptyInput, "no samples");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
  return cm;
}

/// Cohen's kappa with quadratic weights (i - j)^2 / (K - 1)^2 and the
/// expected matrix taken as the outer product of the normalised marginals.
/// When the expected weighted disagreement is zero the ratio is 0/0; the
/// score is then 1 for a purely diagonal matrix and 0 otherwise.
inline double quadratic_weighted_kappa(const ConfusionMatrix& cm) {
  if (cm.n == 0) fail(ErrorKind::EmptyInput, "empty confusion matrix");
  constexpr std::size_t K = kNumGrades;
  const double n = static_cast<double>(cm.n);
  std::array<double, K> rows{}, cols{};
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      rows[i] += static_cast<double>(cm.counts[i][j]);
      cols[j] += static_cast<double>(cm.counts[i][j]);
    }
  }
  for (std::size_t i = 0; i < K; ++i) {
    rows[i] /= n;
    cols[i] /= n;
  }
  double observed = 0.0, expected = 0.0;
  bool diagonal = true;
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      const double w = d * d / static_cast<double>((K - 1) * (K - 1));
      observed += w * (static_cast<double>(cm.counts[i][j]) / n);
      expected += w * (rows[i] * cols[j]);
      if (i != j && cm.counts[i][j] != 0) diagonal = false;
    }
  }
  if (expected == 0.0) return diagonal ? 1.0 : 0.0;
  return 1.0 - observed / expected;
}

inline double accuracy(const ConfusionMatrix& cm) {
  if (cm.n == 0) fail(ErrorKind::EmptyInput, "empty confusion matrix");
  std::uint64_t trace = 0;
  for (std::size_t i = 0; i < kNumGrades; ++i) trace += cm.counts[i][i];
  return static_cast<double>(trace) / static_cast<double>(cm.n);
}

inline double quadratic_weighted_kappa(std::span<const Grade> truth, std::span<const Grade> pred) {
  return quadratic_weighted_kappa(confusion(truth, pred));
}

}  // namespace retina::metrics

#endif  // RETINA_METRICS_HPP_
