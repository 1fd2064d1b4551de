// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsc/error.hpp"

namespace lcsc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kEmptyInstance: return "EmptyInstance";
    case ErrorCode::kMissingCaption: return "MissingCaption";
    case ErrorCode::kInvalidInstructionSet: return "InvalidInstructionSet";
    case ErrorCode::kMissingKey: return "MissingKey";
    case ErrorCode::kOverlapWrite: return "OverlapWrite";
    case ErrorCode::kDegenerateBox: return "DegenerateBox";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kSerializationOverflow: return "SerializationOverflow";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace lcsc
