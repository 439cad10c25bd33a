#include "irrdiv/arith.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <utility>

namespace irrdiv::arith {

u64 mul_mod(u64 a, u64 b, u64 m) {
  return static_cast<u64>(static_cast<u128>(a) * b % m);
}

u64 pow_mod(u64 base, u64 exp, u64 m) {
  u64 result = 1 % m;
  base %= m;
  while (exp) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

i64 gcd(i64 a, i64 b) {
  a = a < 0 ? -a : a;
  b = b < 0 ? -b : b;
  while (b) {
    i64 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

i64 ext_gcd(i64 a, i64 b, i64& u, i64& v) {
  i64 old_r = a, r = b;
  i64 old_s = 1, s = 0;
  i64 old_t = 0, t = 1;
  while (r != 0) {
    i64 q = old_r / r;
    old_r = std::exchange(r, old_r - q * r);
    old_s = std::exchange(s, old_s - q * s);
    old_t = std::exchange(t, old_t - q * t);
  }
  if (old_r < 0) {
    old_r = -old_r;
    old_s = -old_s;
    old_t = -old_t;
  }
  u = old_s;
  v = old_t;
  return old_r;
}

namespace {

bool miller_rabin_witness(u64 n, u64 a, u64 d, int s) {
  u64 x = pow_mod(a, d, n);
  if (x == 1 || x == n - 1) return false;
  for (int r = 1; r < s; ++r) {
    x = mul_mod(x, x, n);
    if (x == n - 1) return false;
  }
  return true;
}

}  // namespace

bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // This base set is deterministic below 2^64.
  for (u64 a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (miller_rabin_witness(n, a, d, s)) return false;
  }
  return true;
}

bool is_squarefree(i64 n) {
  if (n == 0) return false;
  u64 m = static_cast<u64>(n < 0 ? -n : n);
  for (u64 p = 2; p * p <= m; ++p) {
    if (m % p == 0) {
      m /= p;
      if (m % p == 0) return false;
    }
  }
  return true;
}

std::vector<u64> prime_divisors(u64 n) {
  std::vector<u64> out;
  for (u64 p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

u64 euler_phi(u64 n) {
  u64 phi = n;
  for (u64 p : prime_divisors(n)) phi = phi / p * (p - 1);
  return phi;
}

int kronecker(i64 a, i64 n) {
  if (n == 0) return (a == 1 || a == -1) ? 1 : 0;
  int k = 1;
  if (n < 0) {
    n = -n;
    if (a < 0) k = -1;
  }
  if ((a & 1) == 0 && (n & 1) == 0) return 0;

  // Strip factors of two from n using (a / 2).
  int v = 0;
  while ((n & 1) == 0) {
    n >>= 1;
    ++v;
  }
  if (v & 1) {
    i64 r = mod(a, 8);
    if (r == 3 || r == 5) k = -k;
  }

  // Jacobi symbol (a / n) for odd n > 0.
  a = mod(a, n);
  while (a != 0) {
    while ((a & 1) == 0) {
      a >>= 1;
      i64 r = n & 7;
      if (r == 3 || r == 5) k = -k;
    }
    std::swap(a, n);
    if ((a & 3) == 3 && (n & 3) == 3) k = -k;
    a %= n;
  }
  return n == 1 ? k : 0;
}

std::optional<u64> sqrt_mod(u64 a, u64 p) {
  a %= p;
  if (a == 0) return 0;
  if (p == 2) return a;
  if (pow_mod(a, (p - 1) / 2, p) != 1) return std::nullopt;

  u64 q = p - 1;
  int s = 0;
  while ((q & 1) == 0) {
    q >>= 1;
    ++s;
  }
  u64 z = 2;
  while (pow_mod(z, (p - 1) / 2, p) != p - 1) ++z;

  u64 m = s;
  u64 c = pow_mod(z, q, p);
  u64 t = pow_mod(a, q, p);
  u64 r = pow_mod(a, (q + 1) / 2, p);
  while (t != 1) {
    u64 i = 0;
    u64 t2 = t;
    while (t2 != 1) {
      t2 = mul_mod(t2, t2, p);
      ++i;
    }
    u64 b = c;
    for (u64 j = 0; j + i + 1 < m; ++j) b = mul_mod(b, b, p);
    m = i;
    c = mul_mod(b, b, p);
    t = mul_mod(t, c, p);
    r = mul_mod(r, b, p);
  }
  return r <= p / 2 ? r : p - r;
}

PrimeSieve::PrimeSieve(u64 limit, u64 segment_size)
    : limit_(limit), segment_size_(segment_size) {
  u64 root = static_cast<u64>(std::sqrt(static_cast<double>(limit)));
  while (root * root > limit) --root;
  while ((root + 1) * (root + 1) <= limit) ++root;

  std::vector<bool> composite(root + 1, false);
  for (u64 i = 2; i <= root; ++i) {
    if (composite[i]) continue;
    base_primes_.push_back(i);
    for (u64 j = i * i; j <= root; j += i) composite[j] = true;
  }
  low_ = 2;
}

void PrimeSieve::fill_segment() {
  segment_.clear();
  cursor_ = 0;
  while (segment_.empty() && low_ <= limit_) {
    u64 high = std::min(limit_, low_ + segment_size_ - 1);
    std::vector<bool> composite(high - low_ + 1, false);
    for (u64 p : base_primes_) {
      if (p * p > high) break;
      u64 start = std::max(p * p, (low_ + p - 1) / p * p);
      for (u64 j = start; j <= high; j += p) composite[j - low_] = true;
    }
    for (u64 n = low_; n <= high; ++n) {
      if (!composite[n - low_]) segment_.push_back(n);
    }
    low_ = high + 1;
  }
}

std::optional<u64> PrimeSieve::next() {
  if (cursor_ >= segment_.size()) fill_segment();
  if (cursor_ >= segment_.size()) return std::nullopt;
  return segment_[cursor_++];
}

std::vector<u64> primes_up_to(u64 limit) {
  std::vector<u64> out;
  PrimeSieve sieve(limit);
  while (auto p = sieve.next()) out.push_back(*p);
  return out;
}

}  // namespace irrdiv::arith
