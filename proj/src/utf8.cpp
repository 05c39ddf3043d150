// SPDX-License-Identifier: Apache-2.0
#include "asrz/utf8.hpp"

#include "asrz/error.hpp"

namespace asrz {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ClipTooShort: return "ClipTooShort";
    case ErrorCode::WrongSampleRate: return "WrongSampleRate";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::TargetInfeasible: return "TargetInfeasible";
    case ErrorCode::AlphabetMismatch: return "AlphabetMismatch";
    case ErrorCode::TooLargeToEnumerate: return "TooLargeToEnumerate";
    case ErrorCode::UnknownPlan: return "UnknownPlan";
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MalformedCheckpoint: return "MalformedCheckpoint";
    case ErrorCode::MalformedAlphabet: return "MalformedAlphabet";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::CharOutsideAlphabet: return "CharOutsideAlphabet";
    case ErrorCode::UnknownChar: return "UnknownChar";
    case ErrorCode::MalformedArpa: return "MalformedArpa";
    case ErrorCode::VocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::MissingAudioFile: return "MissingAudioFile";
    case ErrorCode::InvalidTranscriptChar: return "InvalidTranscriptChar";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::MalformedRiff: return "MalformedRiff";
    case ErrorCode::MalformedConfig: return "MalformedConfig";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      cp = lead & 0x1F;
      extra = 1;
    } else if ((lead & 0xF0) == 0xE0) {
      cp = lead & 0x0F;
      extra = 2;
    } else if ((lead & 0xF8) == 0xF0) {
      cp = lead & 0x07;
      extra = 3;
    } else {
      throw Error(ErrorCode::InvalidArgument,
                  "invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + extra >= text.size() && extra > 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (int k = 1; k <= extra; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) {
        throw Error(ErrorCode::InvalidArgument,
                    "invalid UTF-8 continuation at offset " +
                        std::to_string(i + k));
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    static constexpr char32_t kMinForLength[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLength[extra] || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      throw Error(ErrorCode::InvalidArgument,
                  "invalid UTF-8 code point at offset " + std::to_string(i));
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string utf8_encode(char32_t ch) {
  std::string out;
  if (ch < 0x80) {
    out.push_back(static_cast<char>(ch));
  } else if (ch < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (ch >> 6)));
    out.push_back(static_cast<char>(0x80 | (ch & 0x3F)));
  } else if (ch < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (ch >> 12)));
    out.push_back(static_cast<char>(0x80 | ((ch >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (ch & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (ch >> 18)));
    out.push_back(static_cast<char>(0x80 | ((ch >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((ch >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (ch & 0x3F)));
  }
  return out;
}

std::string utf8_encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t ch : text) out += utf8_encode(ch);
  return out;
}

}  // namespace asrz
