#include "dreplay/recorder/checksum.hpp"

#include <array>

namespace dreplay {
namespace {

constexpr std::array<std::uint32_t, 256> make_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

constexpr auto kTable = make_table();

// Raw register update without the init/final xor so callers can chain.
std::uint32_t update(std::uint32_t reg, std::span<const std::uint8_t> data) {
  for (auto b : data) reg = kTable[(reg ^ b) & 0xFF] ^ (reg >> 8);
  return reg;
}

std::uint32_t update_u32(std::uint32_t reg, std::uint32_t v) {
  const std::uint8_t le[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                              static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
  return update(reg, le);
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t crc) {
  return update(crc ^ 0xFFFFFFFFu, data) ^ 0xFFFFFFFFu;
}

std::uint32_t context_checksum(std::span<const std::uint8_t> state, std::span<const std::uint32_t> loop_stack,
                               std::uint32_t pc) {
  std::uint32_t reg = update(0xFFFFFFFFu, state);
  for (auto c : loop_stack) reg = update_u32(reg, c);
  reg = update_u32(reg, pc);
  return reg ^ 0xFFFFFFFFu;
}

}  // namespace dreplay
