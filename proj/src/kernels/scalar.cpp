#include "slangscan/kernels.hpp"

#include <cassert>

namespace slangscan::kernels::scalar {

std::size_t ascii_prefix_length(std::string_view bytes) {
  std::size_t i = 0;
  for (; i < bytes.size(); ++i) {
    if (static_cast<unsigned char>(bytes[i]) >= 0x80) break;
  }
  return i;
}

void ascii_fold_lower(std::string_view src, std::span<char> dst) {
  assert(dst.size() >= src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    char c = src[i];
    dst[i] = (c >= 'A' && c <= 'Z') ? static_cast<char>(c + ('a' - 'A')) : c;
  }
}

}  // namespace slangscan::kernels::scalar
