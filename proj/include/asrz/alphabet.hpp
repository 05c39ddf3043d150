// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace asrz {

// Label indices into an Alphabet; never the blank.
using Labeling = std::vector<int>;

// Ordered set of output characters. Label i is chars()[i]; the CTC blank is
// the extra label size().
class Alphabet {
 public:
  Alphabet() = default;
  // Throws MalformedAlphabet on duplicates or an empty set.
  explicit Alphabet(std::u32string chars);
  static Alphabet from_utf8(std::string_view chars);

  // File form: UTF-8, one character per line, LF endings, lines starting
  // with '#' are comments and empty lines are skipped. A line holding a single
  // space is the space character.
  static Alphabet parse(std::string_view file_text);
  static Alphabet load(const std::filesystem::path& path);
  std::string to_file_text() const;
  void save(const std::filesystem::path& path) const;

  size_t size() const noexcept { return chars_.size(); }
  int blank() const noexcept { return static_cast<int>(chars_.size()); }
  size_t n_labels() const noexcept { return chars_.size() + 1; }

  char32_t at(int label) const { return chars_.at(static_cast<size_t>(label)); }
  std::optional<int> index_of(char32_t ch) const;
  bool contains(char32_t ch) const { return index_.contains(ch); }

  // Throws CharOutsideAlphabet naming the first offending character.
  Labeling encode(std::u32string_view text) const;
  Labeling encode_utf8(std::string_view text) const;
  std::u32string decode(const Labeling& labels) const;
  std::string decode_utf8(const Labeling& labels) const;

  const std::u32string& chars() const noexcept { return chars_; }
  std::string utf8() const;

  bool operator==(const Alphabet& other) const { return chars_ == other.chars_; }

 private:
  std::u32string chars_;
  std::unordered_map<char32_t, int> index_;
};

// Human-readable rendering of a character for diagnostics, e.g. '7' or U+00E4.
std::string describe_char(char32_t ch);

}  // namespace asrz
