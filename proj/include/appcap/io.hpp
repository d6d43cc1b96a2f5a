#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "appcap/bytes.hpp"

namespace appcap::io {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Bytes read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView data);
void write_text(const std::filesystem::path& path, std::string_view text);

// Lower-case hex SHA-256.
std::string sha256_hex(ByteView data);

}  // namespace appcap::io
