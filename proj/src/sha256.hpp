#pragma once

#include <cstdint>
#include <string>

namespace milab {

/// Hex digest of the SHA-256 of a byte string (FIPS 180-4).
std::string sha256_hex(const std::string& bytes);

}  // namespace milab
