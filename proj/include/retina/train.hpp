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
#ifndef RETINA_TRAIN_HPP_
#define RETINA_TRAIN_HPP_

#include "retina/train/adam.hpp"
#include "retina/train/checkpoint.hpp"
#include "retina/train/dataset.hpp"
#include "retina/train/state.hpp"
#include "retina/train/trainer.hpp"

#endif  // RETINA_TRAIN_HPP_
