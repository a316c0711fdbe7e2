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
#ifndef RETINA_PAIRING_HPP_
#define RETINA_PAIRING_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "retina/dataio.hpp"
#include "retina/error.hpp"
#include "retina/metrics.hpp"
#include "retina/nnet.hpp"

namespace retina::pairing {

struct PatientRecord {
  std::uint64_t patient_id = 0;
  std::optional<ProbabilityVector> left;
  std::optional<ProbabilityVector> right;
  std::optional<Grade> left_truth;
  std::optional<Grade> right_truth;
};

struct BlendConfig {
  double lambda = 0.0;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 0.5)) fail(ErrorKind::InvalidConfig, "lambda must be in [0, 0.5]");
  }
};

/// One record per patient, in patient order. Truth is attached where
/// `truth` has a label for the image.
inline std::vector<PatientRecord> group_by_patient(const std::map<ImageId, ProbabilityVector>& predictions,
                                                   const LabelManifest* truth = nullptr) {
  std::map<std::uint64_t, PatientRecord> by_patient;
  for (const auto& [id, p] : predictions) {
    PatientRecord& rec = by_patient[id.patient];
    rec.patient_id = id.patient;
    std::optional<Grade> g;
    if (truth != nullptr && truth->contains(id)) g = truth->grade(id);
    if (id.eye == EyeSide::left) {
      rec.left = p;
      rec.left_truth = g;
    } else {
      rec.right = p;
      rec.right_truth = g;
    }
  }
  std::vector<PatientRecord> out;
  out.reserve(by_patient.size());
  for (auto& [_, rec] : by_patient) out.push_back(std::move(rec));
  return out;
}

struct BlendedPair {
  std::optional<ProbabilityVector> left;
  std::optional<ProbabilityVector> right;
};

/// p'_L = p_L + lambda (p_R - p_L), and symmetrically; a lone eye passes through.
inline BlendedPair blend(const PatientRecord& record, const BlendConfig& cfg) {
  cfg.validate();
  BlendedPair out{record.left, record.right};
  if (record.left && record.right) {
    for (std::size_t k = 0; k < kNumGrades; ++k) {
      const double l = (*record.left)[k], r = (*record.right)[k];
      (*out.left)[k] = l + cfg.lambda * (r - l);
      (*out.right)[k] = r + cfg.lambda * (l - r);
    }
  }
  return out;
}

inline std::map<ImageId, ProbabilityVector> blend_all(const std::vector<PatientRecord>& records,
                                                      const BlendConfig& cfg) {
  std::map<ImageId, ProbabilityVector> out;
  for (const auto& rec : records) {
    const BlendedPair b = blend(rec, cfg);
    if (b.left) out[{rec.patient_id, EyeSide::left}] = *b.left;
    if (b.right) out[{rec.patient_id, EyeSide::right}] = *b.right;
  }
  return out;
}

/// Quadratic weighted kappa of argmax grades after blending, over every eye
/// that has truth.
inline double blended_kappa(const std::vector<PatientRecord>& records, const BlendConfig& cfg) {
  std::vector<Grade> truth, pred;
  for (const auto& rec : records) {
    const BlendedPair b = blend(rec, cfg);
    if (b.left && rec.left_truth) {
      truth.push_back(*rec.left_truth);
      pred.push_back(predicted_grade(*b.left));
    }
    if (b.right && rec.right_truth) {
      truth.push_back(*rec.right_truth);
      pred.push_back(predicted_grade(*b.right));
    }
  }
  if (truth.empty()) fail(ErrorKind::NoTruth, "no eye with a known grade");
  return metrics::quadratic_weighted_kappa(truth, pred);
}

inline constexpr int kLambdaGridSteps = 10;  // lambda = 0, 0.05, ..., 0.5

/// Grid search over lambda; ties go to the smaller lambda, so the result
/// never scores below lambda = 0 on these records.
inline BlendConfig tune_lambda(const std::vector<PatientRecord>& records) {
  BlendConfig best{0.0};
  double best_kappa = blended_kappa(records, best);
  for (int k = 1; k <= kLambdaGridSteps; ++k) {
    const BlendConfig cand{k / 20.0};
    const double kappa = blended_kappa(records, cand);
    if (kappa > best_kappa) {
      best_kappa = kappa;
      best = cand;
    }
  }
  return best;
}

}  // namespace retina::pairing

#endif  // RETINA_PAIRING_HPP_
