#include "slangscan/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <bit>
#include <cassert>

namespace slangscan::kernels {

namespace sse2 {

std::size_t ascii_prefix_length(std::string_view bytes) {
  const char* p = bytes.data();
  const std::size_t n = bytes.size();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    __m128i v = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p + i));
    auto high = static_cast<unsigned>(_mm_movemask_epi8(v));
    if (high != 0) return i + static_cast<std::size_t>(std::countr_zero(high));
  }
  return i + scalar::ascii_prefix_length(bytes.substr(i));
}

void ascii_fold_lower(std::string_view src, std::span<char> dst) {
  assert(dst.size() >= src.size());
  const std::size_t n = src.size();
  const __m128i below_a = _mm_set1_epi8('A' - 1);
  const __m128i above_z = _mm_set1_epi8('Z' + 1);
  const __m128i case_bit = _mm_set1_epi8(0x20);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    __m128i v = _mm_loadu_si128(reinterpret_cast<const __m128i*>(src.data() + i));
    // Signed compares: bytes >= 0x80 are negative and never fall in range.
    __m128i upper = _mm_and_si128(_mm_cmpgt_epi8(v, below_a), _mm_cmpgt_epi8(above_z, v));
    v = _mm_or_si128(v, _mm_and_si128(upper, case_bit));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(dst.data() + i), v);
  }
  scalar::ascii_fold_lower(src.substr(i), dst.subspan(i));
}

}  // namespace sse2

namespace avx2 {

__attribute__((target("avx2"))) std::size_t ascii_prefix_length(std::string_view bytes) {
  const char* p = bytes.data();
  const std::size_t n = bytes.size();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i));
    auto high = static_cast<unsigned>(_mm256_movemask_epi8(v));
    if (high != 0) return i + static_cast<std::size_t>(std::countr_zero(high));
  }
  return i + sse2::ascii_prefix_length(bytes.substr(i));
}

__attribute__((target("avx2"))) void ascii_fold_lower(std::string_view src, std::span<char> dst) {
  assert(dst.size() >= src.size());
  const std::size_t n = src.size();
  const __m256i below_a = _mm256_set1_epi8('A' - 1);
  const __m256i above_z = _mm256_set1_epi8('Z' + 1);
  const __m256i case_bit = _mm256_set1_epi8(0x20);
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src.data() + i));
    __m256i upper =
        _mm256_and_si256(_mm256_cmpgt_epi8(v, below_a), _mm256_cmpgt_epi8(above_z, v));
    v = _mm256_or_si256(v, _mm256_and_si256(upper, case_bit));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst.data() + i), v);
  }
  sse2::ascii_fold_lower(src.substr(i), dst.subspan(i));
}

}  // namespace avx2

}  // namespace slangscan::kernels

#endif
