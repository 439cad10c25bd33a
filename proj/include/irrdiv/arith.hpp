#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace irrdiv::arith {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using i128 = __int128;
using u128 = unsigned __int128;

u64 mul_mod(u64 a, u64 b, u64 m);
u64 pow_mod(u64 base, u64 exp, u64 m);

/// gcd on magnitudes; gcd(0, 0) = 0.
i64 gcd(i64 a, i64 b);

/// Extended Euclid: returns g = gcd(a, b) >= 0 and sets u, v with u*a + v*b = g.
i64 ext_gcd(i64 a, i64 b, i64& u, i64& v);

/// Floor-mod, result in [0, m) for m > 0.
inline i64 mod(i64 a, i64 m) {
  i64 r = a % m;
  return r < 0 ? r + m : r;
}

/// Deterministic Miller-Rabin, valid for all 64-bit inputs.
bool is_prime(u64 n);

bool is_squarefree(i64 n);

/// Distinct prime divisors of n > 0, ascending.
std::vector<u64> prime_divisors(u64 n);

u64 euler_phi(u64 n);

/// Kronecker symbol (a / n).
int kronecker(i64 a, i64 n);

/// Square root of a modulo an odd prime p (Tonelli-Shanks). Returns the root
/// in [0, p/2], or nullopt when a is a non-residue.
std::optional<u64> sqrt_mod(u64 a, u64 p);

/// Lazy segmented sieve of Eratosthenes yielding primes 2, 3, 5, ... up to a
/// bound, one segment of fixed size resident at a time.
class PrimeSieve {
 public:
  explicit PrimeSieve(u64 limit, u64 segment_size = 1u << 18);

  std::optional<u64> next();

 private:
  void fill_segment();

  u64 limit_;
  u64 segment_size_;
  std::vector<u64> base_primes_;
  std::vector<u64> segment_;  // primes of the current segment
  std::size_t cursor_ = 0;
  u64 low_ = 0;               // start of the next segment
};

/// All primes <= limit.
std::vector<u64> primes_up_to(u64 limit);

}  // namespace irrdiv::arith
