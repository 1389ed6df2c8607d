#ifndef STORM_RNG_HPP
#define STORM_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace storm {

// Collision-resistant combination of 64-bit words (splitmix64 finalizer
// chained over the inputs). Used to derive replica/stream seeds from
// (master seed, experiment id, replica index) so the assignment of work
// to threads never changes the draws.
std::uint64_t hash64(std::initializer_list<std::uint64_t> parts);

// One independent random stream. Gaussians are produced by an explicit
// Box-Muller transform on top of mt19937_64 so the sequence is fixed by
// the seed alone, not by the standard library's distribution internals.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : gen_(key) {}

  double uniform();   // [0,1)
  double gaussian();  // standard normal

  std::uint64_t key_bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace storm

#endif
