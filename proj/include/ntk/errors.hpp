/* Copyright 2026 The ntk Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef NTK_ERRORS_HPP
#define NTK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ntk {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& msg) : Error(msg) {}
};

struct NotSymmetric : Error {
  explicit NotSymmetric(const std::string& msg) : Error(msg) {}
};

struct EmptyNetwork : Error {
  explicit EmptyNetwork(const std::string& msg) : Error(msg) {}
};

struct IndexOutOfRange : Error {
  explicit IndexOutOfRange(const std::string& msg) : Error(msg) {}
};

struct MissingParamCount : Error {
  explicit MissingParamCount(const std::string& msg) : Error(msg) {}
};

struct NonfiniteLoss : Error {
  explicit NonfiniteLoss(const std::string& msg) : Error(msg) {}
};

struct BadMagic : Error {
  explicit BadMagic(const std::string& msg) : Error(msg) {}
};

struct TruncatedFile : Error {
  explicit TruncatedFile(const std::string& msg) : Error(msg) {}
};

struct UnsupportedElementType : Error {
  explicit UnsupportedElementType(const std::string& msg) : Error(msg) {}
};

struct InsufficientSamples : Error {
  explicit InsufficientSamples(const std::string& msg) : Error(msg) {}
};

struct Io : Error {
  explicit Io(const std::string& msg) : Error(msg) {}
};

struct ShapeOverflow : Error {
  explicit ShapeOverflow(const std::string& msg) : Error(msg) {}
};

}  // namespace ntk

#endif  // NTK_ERRORS_HPP
