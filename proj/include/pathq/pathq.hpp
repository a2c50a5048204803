/*
 * Copyright 2026 The pathq Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PATHQ_PATHQ_HPP_
#define PATHQ_PATHQ_HPP_

#include "pathq/config.hpp"
#include "pathq/error.hpp"
#include "pathq/evaluation.hpp"
#include "pathq/gradcheck.hpp"
#include "pathq/instance.hpp"
#include "pathq/kg.hpp"
#include "pathq/layers.hpp"
#include "pathq/model.hpp"
#include "pathq/oracle.hpp"
#include "pathq/params.hpp"
#include "pathq/query.hpp"
#include "pathq/sampler.hpp"
#include "pathq/tensor.hpp"
#include "pathq/training.hpp"

#endif  // PATHQ_PATHQ_HPP_
