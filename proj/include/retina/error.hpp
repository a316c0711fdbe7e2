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
#ifndef RETINA_ERROR_HPP_
#define RETINA_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace retina {

enum class ErrorKind {
  MissingFile,
  MalformedRow,
  DuplicateId,
  MalformedId,
  DecodeError,
  EmptyContent,
  NoRetina,
  EmptyManifest,
  InvalidInputSize,
  ShapeMismatch,
  TraceMismatch,
  IoError,
  VersionMismatch,
  CorruptCheckpoint,
  NonFiniteLoss,
  LengthMismatch,
  EmptyInput,
  NoTruth,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::MalformedId: return "MalformedId";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::EmptyContent: return "EmptyContent";
    case ErrorKind::NoRetina: return "NoRetina";
    case ErrorKind::EmptyManifest: return "EmptyManifest";
    case ErrorKind::InvalidInputSize: return "InvalidInputSize";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::TraceMismatch: return "TraceMismatch";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NoTruth: return "NoTruth";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every domain failure in the library is reported as an Error carrying its
/// kind, so callers (the CLI in particular) can name it on the diagnostic
/// stream without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace retina

#endif  // RETINA_ERROR_HPP_
