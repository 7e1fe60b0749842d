#ifndef SSDDR_RNG_HPP
#define SSDDR_RNG_HPP

#include <cstdint>
#include <random>
#include <span>

namespace ssddr {

// Deterministic random source.  The variate transforms are implemented here
// rather than taken from <random> because the standard leaves distribution
// algorithms unspecified, and we need bit-identical streams for a given seed
// across compilers.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on [0, 1).
    double uniform();
    // Uniform on (0, 1); never returns 0.
    double uniform_pos();
    // Standard normal via the Marsaglia polar method.
    double normal();
    // Gamma(shape, rate) via the Marsaglia-Tsang squeeze method, with the
    // usual U^(1/shape) boost for shape < 1.
    double gamma(double shape, double rate);
    // Index drawn from a discrete distribution; probs must sum to ~1.
    int categorical(std::span<const double> probs);

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ssddr

#endif
