#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace vcore {

/// IEEE 802.3 CRC-32 (reflected), the zlib polynomial. Used to detect
/// corruption in checkpoints and dataset files.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t crc = 0);

std::uint32_t file_crc32(const std::string& path);

}  // namespace vcore
