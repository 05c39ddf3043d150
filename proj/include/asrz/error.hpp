// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asrz {

enum class ErrorCode {
  DimensionMismatch,
  EmptyInput,
  NonFiniteValue,
  ClipTooShort,
  WrongSampleRate,
  InvalidArgument,
  StaleCache,
  TargetInfeasible,
  AlphabetMismatch,
  TooLargeToEnumerate,
  UnknownPlan,
  Io,
  BadMagic,
  UnsupportedVersion,
  ShapeMismatch,
  MalformedCheckpoint,
  MalformedAlphabet,
  EmptyCorpus,
  CharOutsideAlphabet,
  UnknownChar,
  MalformedArpa,
  VocabularyMismatch,
  LengthMismatch,
  EmptyReference,
  MalformedCsv,
  MissingAudioFile,
  InvalidTranscriptChar,
  UnsupportedFormat,
  MalformedRiff,
  MalformedConfig,
  NonFiniteLoss,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` identifies
// the failure class and `what()` carries the diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace asrz
