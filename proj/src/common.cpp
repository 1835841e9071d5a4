#include "spoofdet/common.hpp"

namespace spoofdet {

std::string_view to_string(Hypothesis h) noexcept { return h == Hypothesis::H0 ? "H0" : "H1"; }

std::string_view to_string(Label label) noexcept {
  return label == Label::Same ? "SAME" : "DIFF";
}

std::uint64_t mix_seed(std::uint64_t value) noexcept {
  std::uint64_t z = value + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept {
  return mix_seed(mix_seed(parent) ^ mix_seed(tag ^ 0xD1B54A32D192ED03ULL));
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept {
  // FNV-1a over the tag bytes.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return derive_seed(parent, h);
}

std::uint64_t iteration_seed(std::uint64_t master, std::uint64_t point,
                             std::uint64_t iteration) noexcept {
  return derive_seed(derive_seed(master, point), iteration);
}

}  // namespace spoofdet
