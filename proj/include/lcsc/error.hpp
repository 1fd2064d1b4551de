// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lcsc {

enum class ErrorCode {
  kDimensionMismatch,
  kUnknownLabel,
  kEmptyInstance,
  kMissingCaption,
  kInvalidInstructionSet,
  kMissingKey,
  kOverlapWrite,
  kDegenerateBox,
  kIoFailure,
  kSerializationOverflow,
  kParseError,
  kBadMagic,
  kVersionUnsupported,
  kChecksumMismatch,
  kConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (the batch driver in particular) can classify it without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace lcsc
