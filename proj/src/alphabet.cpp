// SPDX-License-Identifier: Apache-2.0
#include "asrz/alphabet.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "asrz/error.hpp"
#include "asrz/utf8.hpp"

namespace asrz {

Alphabet::Alphabet(std::u32string chars) : chars_(std::move(chars)) {
  if (chars_.empty()) {
    throw Error(ErrorCode::MalformedAlphabet, "alphabet is empty");
  }
  for (size_t i = 0; i < chars_.size(); ++i) {
    if (chars_[i] == U'\n') {
      throw Error(ErrorCode::MalformedAlphabet, "newline cannot be an alphabet member");
    }
    if (!index_.emplace(chars_[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::MalformedAlphabet,
                  "duplicate character " + describe_char(chars_[i]));
    }
  }
}

Alphabet Alphabet::from_utf8(std::string_view chars) { return Alphabet(utf8_decode(chars)); }

Alphabet Alphabet::parse(std::string_view file_text) {
  std::u32string chars;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < file_text.size()) {
    size_t end = file_text.find('\n', pos);
    if (end == std::string_view::npos) end = file_text.size();
    const std::string_view line = file_text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::u32string decoded = utf8_decode(line);
    if (decoded.size() != 1) {
      throw Error(ErrorCode::MalformedAlphabet,
                  "line " + std::to_string(line_no) + " must hold exactly one character");
    }
    chars.push_back(decoded.front());
  }
  return Alphabet(std::move(chars));
}

Alphabet Alphabet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open alphabet " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Alphabet::to_file_text() const {
  std::string out;
  for (char32_t ch : chars_) {
    out += utf8_encode(ch);
    out.push_back('\n');
  }
  return out;
}

void Alphabet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write alphabet " + path.string());
  out << to_file_text();
}

std::optional<int> Alphabet::index_of(char32_t ch) const {
  auto it = index_.find(ch);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Labeling Alphabet::encode(std::u32string_view text) const {
  Labeling out;
  out.reserve(text.size());
  for (char32_t ch : text) {
    auto idx = index_of(ch);
    if (!idx) {
      throw Error(ErrorCode::CharOutsideAlphabet, "character " + describe_char(ch));
    }
    out.push_back(*idx);
  }
  return out;
}

Labeling Alphabet::encode_utf8(std::string_view text) const { return encode(utf8_decode(text)); }

std::u32string Alphabet::decode(const Labeling& labels) const {
  std::u32string out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(at(l));
  return out;
}

std::string Alphabet::decode_utf8(const Labeling& labels) const {
  return utf8_encode(decode(labels));
}

std::string Alphabet::utf8() const { return utf8_encode(chars_); }

std::string describe_char(char32_t ch) {
  if (ch >= 0x21 && ch < 0x7F) return std::string("'") + static_cast<char>(ch) + "'";
  char buf[16];
  std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(ch));
  return buf;
}

}  // namespace asrz
