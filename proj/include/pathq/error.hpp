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

#ifndef PATHQ_ERROR_HPP_
#define PATHQ_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace pathq {

// Malformed input data: bad rows, missing files, inconsistent vocabularies.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An entity or relation id outside the vocabulary.
class DomainError : public DataError {
 public:
  using DataError::DataError;
};

// A query that violates a structural precondition (e.g. a union under a
// negation, or a plan that reads a slot before writing it).
class StructureError : public DataError {
 public:
  using DataError::DataError;
};

// NaN/Inf values, failed gradient checks, and similar numeric failures.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or layer configuration.
class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pathq

#endif  // PATHQ_ERROR_HPP_
