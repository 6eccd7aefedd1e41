#include "slangscan/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

namespace slangscan::kernels {

namespace {

Isa probe() {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Isa::Avx2;
  return Isa::Sse2;
#elif defined(__aarch64__)
  return Isa::Neon;
#else
  return Isa::Scalar;
#endif
}

Isa clamp(Isa wanted) {
  Isa best = detected_isa();
  if (wanted == Isa::Neon || best == Isa::Neon) return wanted == best ? best : Isa::Scalar;
  return static_cast<int>(wanted) <= static_cast<int>(best) ? wanted : best;
}

Isa initial() {
  const char* env = std::getenv("SLANGSCAN_SIMD");
  if (env == nullptr) return detected_isa();
  std::string s(env);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "scalar") return Isa::Scalar;
  if (s == "sse2") return clamp(Isa::Sse2);
  if (s == "avx2") return clamp(Isa::Avx2);
  if (s == "neon") return clamp(Isa::Neon);
  return detected_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Sse2: return "sse2";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

Isa detected_isa() {
  static const Isa isa = probe();
  return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void force_isa(Isa isa) { active().store(clamp(isa), std::memory_order_relaxed); }

bool is_supported(Isa isa) { return isa == Isa::Scalar || clamp(isa) == isa; }

std::size_t ascii_prefix_length(std::string_view bytes) {
  switch (active_isa()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2: return avx2::ascii_prefix_length(bytes);
    case Isa::Sse2: return sse2::ascii_prefix_length(bytes);
#endif
#if defined(__aarch64__)
    case Isa::Neon: return neon::ascii_prefix_length(bytes);
#endif
    default: return scalar::ascii_prefix_length(bytes);
  }
}

void ascii_fold_lower(std::string_view src, std::span<char> dst) {
  switch (active_isa()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2: avx2::ascii_fold_lower(src, dst); return;
    case Isa::Sse2: sse2::ascii_fold_lower(src, dst); return;
#endif
#if defined(__aarch64__)
    case Isa::Neon: neon::ascii_fold_lower(src, dst); return;
#endif
    default: scalar::ascii_fold_lower(src, dst); return;
  }
}

}  // namespace slangscan::kernels
