/*
 * Copyright 2026 The stmv Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef STMV_ERRORS_HPP
#define STMV_ERRORS_HPP

#include <stdexcept>

namespace stmv {

/// Invalid configuration document or command-line request.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (bad CSV row, zero variance, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (non-positive-definite matrix, non-finite objective, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Pair with sigma_i^2 sigma_j^2 - C_ij^2 <= 0.
class DegeneratePair : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace stmv

#endif  // STMV_ERRORS_HPP
