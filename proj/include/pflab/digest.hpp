#pragma once

#include <string>
#include <string_view>

namespace pflab {

/// Lower-case hex SHA-256 of `text`.
std::string sha256_hex(std::string_view text);

}  // namespace pflab
