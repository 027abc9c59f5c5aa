#pragma once
#include <cstdint>
#include <string>

namespace perc {

// Hex SHA-256 digest; used for manifest file digests and config fingerprints.
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

}  // namespace perc
