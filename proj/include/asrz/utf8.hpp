// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace asrz {

// Throws Error(InvalidArgument) on malformed UTF-8.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);
std::string utf8_encode(char32_t ch);

}  // namespace asrz
