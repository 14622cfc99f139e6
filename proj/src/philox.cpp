#include "kfp/philox.hpp"

namespace kfp {

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

double NormalStream::uniform() {
  if (uniform_available_ == 0) refill();
  return uniforms_[static_cast<std::size_t>(2 - uniform_available_--)];
}

}  // namespace kfp
