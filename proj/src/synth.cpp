#include "irrdiv/synth.hpp"

#include <cmath>

namespace irrdiv {

void SynthModel::validate() const {
  if (law.empty()) return;
  if (law.size() != group.order()) {
    throw InvalidArgument("synth label law needs one probability per class");
  }
  double total = 0.0;
  for (double q : law) {
    if (!(q >= 0.0) || !std::isfinite(q)) {
      throw InvalidArgument("synth label law has a negative or non-finite entry");
    }
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("synth label law does not sum to 1");
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ClassIndex synth_class(const SynthModel& m, std::uint64_t p) {
  const std::uint64_t u = splitmix64(m.seed ^ splitmix64(p)) >> 11;
  const std::uint64_t h = m.group.order();
  if (m.law.empty()) {
    return static_cast<ClassIndex>((static_cast<arith::u128>(u) * h) >> 53);
  }
  const double r = std::ldexp(static_cast<double>(u), -53);
  double cum = 0.0;
  for (std::size_t i = 0; i < m.law.size(); ++i) {
    cum += m.law[i];
    if (r < cum) return static_cast<ClassIndex>(i);
  }
  // r fell in the rounding slack above the final cumulative sum; use the
  // last class with positive mass.
  for (std::size_t i = m.law.size(); i-- > 0;) {
    if (m.law[i] > 0.0) return static_cast<ClassIndex>(i);
  }
  return 0;
}

std::vector<PrimeSite> synth_sites(const SynthModel& m, std::uint64_t X) {
  m.validate();
  if (X < 2) throw InvalidArgument("synth site bound must be at least 2");
  std::vector<PrimeSite> out;
  arith::PrimeSieve sieve(X);
  while (auto p = sieve.next()) {
    PrimeSite s;
    s.id = out.size();
    s.p = *p;
    s.norm = *p;
    s.splitting = Splitting::split;
    s.conjugate_id = s.id;
    s.class_index = synth_class(m, *p);
    out.push_back(s);
  }
  return out;
}

}  // namespace irrdiv
