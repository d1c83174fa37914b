#pragma once

#include "fastbcd/instance.hpp"

#include <filesystem>
#include <iosfwd>

namespace fastbcd {

// Instance file, little-endian:
//   magic "FBCD1\0" | u32 header length | UTF-8 "key=value\n" header
//   (n, m, tau, kind, seed, rho, density, noise_var, has_x_true)
//   | float64 payload: A row-major, b, x_true if present | u32 CRC32(payload)

void save_instance(const Instance& inst, std::ostream& out);
void save_instance(const Instance& inst, const std::filesystem::path& path);

Instance load_instance(std::istream& in);
Instance load_instance(const std::filesystem::path& path);

/// CRC-32 (IEEE, reflected 0xEDB88320), as used by the instance format.
std::uint32_t crc32(const unsigned char* data, std::size_t len);

} // namespace fastbcd
