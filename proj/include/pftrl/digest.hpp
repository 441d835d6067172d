#pragma once

#include <string>
#include <string_view>

namespace pftrl {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
/// SHA-256 of a file's bytes; throws std::runtime_error if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace pftrl
