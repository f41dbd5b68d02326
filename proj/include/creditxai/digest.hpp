#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

namespace creditxai {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Digest of several parts, length-prefixed so ("ab","c") != ("a","bc").
std::string digest_parts(std::initializer_list<std::string_view> parts);

// Fixed-precision decimal text used wherever numbers feed a digest.
std::string digest_number(double value);

}  // namespace creditxai
