#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "irrdiv/abelian.hpp"
#include "irrdiv/quadratic.hpp"

namespace irrdiv {

/// Name of the site-labelling generator. Bump the suffix if the derivation
/// below ever changes, since streams are expected to be stable.
inline constexpr std::string_view kSynthGenerator = "splitmix64-ctr-v1";

/// Random class labels for the rational primes. Each prime p draws
///   u = splitmix64(seed ^ splitmix64(p)),  r = (u >> 11) * 2^-53
/// and takes the first class whose cumulative probability exceeds r. The
/// uniform law uses the exact integer form ((u >> 11) * h) >> 53 instead.
struct SynthModel {
  GroupSpec group;
  std::uint64_t seed = 0;
  std::vector<double> law;  // empty: uniform over classes

  /// Throws InvalidArgument unless law is empty or a probability vector of
  /// length h.
  void validate() const;
};

std::uint64_t splitmix64(std::uint64_t x);

ClassIndex synth_class(const SynthModel& m, std::uint64_t p);

/// One site per rational prime p <= X, norm p, in increasing order. Sites
/// carry splitting = split and conjugate_id = id (no pairing).
std::vector<PrimeSite> synth_sites(const SynthModel& m, std::uint64_t X);

}  // namespace irrdiv
