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
#ifndef RETINA_TRAIN_STATE_HPP_
#define RETINA_TRAIN_STATE_HPP_

#include <cstdint>
#include <vector>

#include "retina/nnet/params.hpp"
#include "retina/nnet/spec.hpp"
#include "retina/rng.hpp"
#include "retina/train/adam.hpp"

namespace retina::train {

struct EpochRecord {
  std::uint64_t epoch = 0;
  double train_kappa = 0.0;
  double val_kappa = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Everything needed to continue training exactly where it stopped.
struct TrainState {
  nnet::NetworkSpec spec;
  nnet::ParamStore<float> params;
  AdamState<float> adam;
  Rng rng;
  std::uint64_t epoch = 0;
  std::vector<EpochRecord> history;
};

/// Fresh state: parameters and the sampling generator come from
/// independent substreams of `seed`.
inline TrainState initial_state(nnet::NetworkSpec spec, std::uint64_t seed) {
  TrainState state;
  state.spec = std::move(spec);
  Rng init(derive_seed(seed, 1));
  state.params = nnet::init_params<float>(state.spec, init);
  state.rng = Rng(derive_seed(seed, 2));
  return state;
}

}  // namespace retina::train

#endif  // RETINA_TRAIN_STATE_HPP_
