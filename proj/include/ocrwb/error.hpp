/**********************************************************************
 * File:        error.hpp
 * Description: Error type shared by every ocrwb module.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 * http://www.apache.org/licenses/LICENSE-2.0
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 **********************************************************************/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ocrwb {

enum class ErrorCode {
  InvalidArgument,
  IoFailure,
  // textnorm
  InvalidUtf8,
  EmptyAfterNormalization,
  // formkit
  CapacityExceeded,
  EmptyInput,
  FiducialsNotFound,
  PoorFit,
  SlotOutOfBounds,
  // dataset
  OrphanImage,
  OrphanTruth,
  BadName,
  EmptyRegistry,
  UnassignedSamples,
  // metrics
  EmptyReference,
  NoSamples,
  // engines
  EngineFailure,
  EngineTimeout,
  UnlabeledGlyph,
  EmptyLine,
  // synth
  MissingGlyph,
  // review service
  NotFound,
  RevisionConflict,
  ValidationFailed,
  BadParams,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidUtf8: return "InvalidUtf8";
    case ErrorCode::EmptyAfterNormalization: return "EmptyAfterNormalization";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::FiducialsNotFound: return "FiducialsNotFound";
    case ErrorCode::PoorFit: return "PoorFit";
    case ErrorCode::SlotOutOfBounds: return "SlotOutOfBounds";
    case ErrorCode::OrphanImage: return "OrphanImage";
    case ErrorCode::OrphanTruth: return "OrphanTruth";
    case ErrorCode::BadName: return "BadName";
    case ErrorCode::EmptyRegistry: return "EmptyRegistry";
    case ErrorCode::UnassignedSamples: return "UnassignedSamples";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::NoSamples: return "NoSamples";
    case ErrorCode::EngineFailure: return "EngineFailure";
    case ErrorCode::EngineTimeout: return "EngineTimeout";
    case ErrorCode::UnlabeledGlyph: return "UnlabeledGlyph";
    case ErrorCode::EmptyLine: return "EmptyLine";
    case ErrorCode::MissingGlyph: return "MissingGlyph";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::RevisionConflict: return "RevisionConflict";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::BadParams: return "BadParams";
  }
  return "Unknown";
}

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-readable code. `detail` holds the offending id, path or stderr.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace ocrwb
