#include "orthoboot/random.hpp"

#include "orthoboot/error.hpp"

namespace orthoboot {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

double RandomStream::uniform() {
  return std::generate_canonical<double, 53>(engine_);
}

double RandomStream::normal() { return normal_(engine_); }

double RandomStream::exponential() { return exponential_(engine_); }

std::size_t RandomStream::uniform_index(std::size_t n) {
  if (n == 0) {
    throw InvalidArgument("uniform_index: n must be positive");
  }
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

bool RandomStream::bernoulli(double p) { return uniform() < p; }

}  // namespace orthoboot
