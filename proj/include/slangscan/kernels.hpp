#pragma once

// Byte-parallel text kernels with a scalar reference and SIMD variants.
//
// Every kernel has a scalar implementation that defines its semantics. SIMD
// variants must produce byte-identical results; the dispatcher picks the
// widest variant the running CPU supports. Setting SLANGSCAN_SIMD=scalar
// (or sse2 / avx2) in the environment caps the selection, which is how the
// equivalence tests and benchmarks pin a path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace slangscan::kernels {

enum class Isa { Scalar, Sse2, Avx2, Neon };

std::string_view isa_name(Isa isa);

/// Widest ISA supported by this CPU and compiled into this binary.
Isa detected_isa();

/// ISA actually used by the dispatching entry points below.
Isa active_isa();

/// Override the dispatch choice. Requests above detected_isa() are clamped.
void force_isa(Isa isa);

/// Number of leading bytes < 0x80.
std::size_t ascii_prefix_length(std::string_view bytes);

/// Copy `src` into `dst`, mapping 'A'..'Z' to 'a'..'z'. Other bytes pass
/// through untouched. `dst.size()` must be >= `src.size()`.
void ascii_fold_lower(std::string_view src, std::span<char> dst);

/// Explicit variants, exposed for equivalence tests. Calling a variant the
/// CPU does not support is undefined; check is_supported() first.
bool is_supported(Isa isa);

namespace scalar {
std::size_t ascii_prefix_length(std::string_view bytes);
void ascii_fold_lower(std::string_view src, std::span<char> dst);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace sse2 {
std::size_t ascii_prefix_length(std::string_view bytes);
void ascii_fold_lower(std::string_view src, std::span<char> dst);
}  // namespace sse2

namespace avx2 {
std::size_t ascii_prefix_length(std::string_view bytes);
void ascii_fold_lower(std::string_view src, std::span<char> dst);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
std::size_t ascii_prefix_length(std::string_view bytes);
void ascii_fold_lower(std::string_view src, std::span<char> dst);
}  // namespace neon
#endif

}  // namespace slangscan::kernels
