#pragma once

#include <cstdint>
#include <span>

namespace dreplay {

/// CRC-32, reflected, polynomial 0x04C11DB7 (0xEDB88320 reversed),
/// init and final xor 0xFFFFFFFF.
std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t crc = 0);

/// Task context checksum: CRC-32 over the state bytes, then each loop
/// counter little-endian, then pc little-endian.
std::uint32_t context_checksum(std::span<const std::uint8_t> state, std::span<const std::uint32_t> loop_stack,
                               std::uint32_t pc);

}  // namespace dreplay
