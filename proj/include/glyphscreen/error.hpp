/* Copyright (c) 2026 The glyphscreen Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <stdexcept>
#include <string>

namespace glyph {

/// Malformed or inconsistent input data: bad image bytes, manifests, stores,
/// checkpoints. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or dimension disagreement between tensors or vectors.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

/// Invalid numeric parameters or a numerically degenerate state (zero
/// vectors, non-finite losses, train-mode BN handed to fusion). Maps to CLI
/// exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Bad command-line usage. Maps to CLI exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace glyph
