#pragma once

#include <cstdint>
#include <string>

namespace dpfl {

// SHA-256 digest as a lowercase hex string. Used for case checksums and
// config/curve hashes recorded in run manifests.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);

}  // namespace dpfl
