#include "slangscan/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cassert>

namespace slangscan::kernels::neon {

std::size_t ascii_prefix_length(std::string_view bytes) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data());
  const std::size_t n = bytes.size();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    uint8x16_t v = vld1q_u8(p + i);
    if (vmaxvq_u8(v) >= 0x80) break;
  }
  return i + scalar::ascii_prefix_length(bytes.substr(i));
}

void ascii_fold_lower(std::string_view src, std::span<char> dst) {
  assert(dst.size() >= src.size());
  const auto* in = reinterpret_cast<const std::uint8_t*>(src.data());
  auto* out = reinterpret_cast<std::uint8_t*>(dst.data());
  const std::size_t n = src.size();
  const uint8x16_t letters = vdupq_n_u8(26);
  const uint8x16_t base = vdupq_n_u8('A');
  const uint8x16_t case_bit = vdupq_n_u8(0x20);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    uint8x16_t v = vld1q_u8(in + i);
    uint8x16_t upper = vcltq_u8(vsubq_u8(v, base), letters);
    vst1q_u8(out + i, vorrq_u8(v, vandq_u8(upper, case_bit)));
  }
  scalar::ascii_fold_lower(src.substr(i), dst.subspan(i));
}

}  // namespace slangscan::kernels::neon

#endif
