#include "irrdiv/quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace irrdiv {

using arith::i128;

namespace {

std::uint64_t form_key(std::int64_t a, std::int64_t b) {
  return (static_cast<std::uint64_t>(a) << 32) |
         static_cast<std::uint32_t>(static_cast<std::int32_t>(b));
}

/// Shift b into (-a, a] by x -> x - k y.
void normalize(i128& a, i128& b, i128& c) {
  i128 two_a = 2 * a;
  // k = ceil((b - a) / 2a)
  i128 num = b - a;
  i128 k = num >= 0 ? (num + two_a - 1) / two_a : -((-num) / two_a);
  if (k == 0) return;
  c = c - k * b + k * k * a;
  b = b - two_a * k;
}

}  // namespace

bool QuadForm::is_reduced() const {
  if (a <= 0) return false;
  if (!(-a < b && b <= a)) return false;
  if (a > c) return false;
  if (a == c && b < 0) return false;
  return true;
}

std::ostream& operator<<(std::ostream& os, const QuadForm& f) {
  return os << "(" << f.a << "," << f.b << "," << f.c << ")";
}

QuadForm reduce(QuadForm f) {
  if (f.a <= 0 || f.c <= 0) throw InvalidArgument("form is not positive definite");
  i128 a = f.a, b = f.b, c = f.c;
  normalize(a, b, c);
  while (a > c) {
    std::swap(a, c);
    b = -b;
    normalize(a, b, c);
  }
  if (a == c && b < 0) b = -b;
  return {static_cast<std::int64_t>(a), static_cast<std::int64_t>(b),
          static_cast<std::int64_t>(c)};
}

QuadForm compose(const QuadForm& f, const QuadForm& g) {
  const std::int64_t disc = f.discriminant();
  if (g.discriminant() != disc) {
    throw InvalidArgument("composition of forms with different discriminants");
  }
  const std::int64_t s = (f.b + g.b) / 2;
  std::int64_t u1, v1, u2, w;
  const std::int64_t g1 = arith::ext_gcd(f.a, g.a, u1, v1);
  const std::int64_t e = arith::ext_gcd(g1, s, u2, w);
  const i128 u = static_cast<i128>(u1) * u2;
  const i128 v = static_cast<i128>(v1) * u2;

  const i128 a3 = static_cast<i128>(f.a) * g.a / (static_cast<i128>(e) * e);
  i128 b3 = (u * f.a * g.b + v * g.a * f.b +
             static_cast<i128>(w) * ((static_cast<i128>(f.b) * g.b + disc) / 2)) /
            e;
  const i128 two_a3 = 2 * a3;
  b3 %= two_a3;
  if (b3 < 0) b3 += two_a3;
  const i128 num = b3 * b3 - disc;
  if (num % (4 * a3) != 0) {
    throw std::logic_error("composition produced a non-integral form");
  }
  const i128 c3 = num / (4 * a3);

  i128 ra = a3, rb = b3, rc = c3;
  normalize(ra, rb, rc);
  return reduce({static_cast<std::int64_t>(ra), static_cast<std::int64_t>(rb),
                 static_cast<std::int64_t>(rc)});
}

std::int64_t fundamental_discriminant(std::int64_t d) {
  return arith::mod(d, 4) == 1 ? d : 4 * d;
}

std::size_t ClassGroup::form_position(const QuadForm& reduced) const {
  auto it = lookup_.find(form_key(reduced.a, reduced.b));
  if (it == lookup_.end()) throw std::logic_error("reduced form not in class table");
  return it->second;
}

ClassIndex ClassGroup::class_of(const QuadForm& f) const {
  const i128 disc = static_cast<i128>(f.b) * f.b - static_cast<i128>(4) * f.a * f.c;
  if (disc != field_.disc) {
    throw InvalidArgument("form discriminant differs from field discriminant");
  }
  return class_of_form_[form_position(reduce(f))];
}

ClassGroup class_group(std::int64_t d, QuadraticLimits limits) {
  if (d >= 0) throw InvalidArgument("d must be negative");
  if (!arith::is_squarefree(d)) throw InvalidArgument("d must be squarefree");
  const std::int64_t disc = fundamental_discriminant(d);
  const std::uint64_t abs_disc = static_cast<std::uint64_t>(-disc);
  if (abs_disc > limits.max_abs_disc) {
    throw ResourceLimit("|disc| = " + std::to_string(abs_disc) +
                        " exceeds bound " + std::to_string(limits.max_abs_disc));
  }

  ClassGroup cg;
  FieldSpec& field = cg.field_;
  field.d = d;
  field.disc = disc;
  field.w = disc == -3 ? 6 : disc == -4 ? 4 : 2;
  field.psi_coeff = mpq_class(2, field.w);
  field.psi_coeff.canonicalize();
  field.psi = field.psi_coeff.get_d() * std::numbers::pi /
              std::sqrt(static_cast<double>(abs_disc));

  // Reduced primitive forms: |b| <= a <= c forces 3a^2 <= |disc|.
  for (std::int64_t a = 1; 3 * a * a <= static_cast<std::int64_t>(abs_disc); ++a) {
    for (std::int64_t b = -a + 1; b <= a; ++b) {
      if (arith::mod(b - disc, 2) != 0) continue;
      const std::int64_t num = b * b - disc;
      if (num % (4 * a) != 0) continue;
      const std::int64_t c = num / (4 * a);
      if (c < a || (c == a && b < 0)) continue;
      if (arith::gcd(arith::gcd(a, b), c) != 1) continue;
      cg.forms_.push_back({a, b, c});
    }
  }
  std::sort(cg.forms_.begin(), cg.forms_.end(),
            [](const QuadForm& x, const QuadForm& y) {
              auto key = [](const QuadForm& f) {
                return std::tuple(f.a, f.b < 0 ? -f.b : f.b, -f.b);
              };
              return key(x) < key(y);
            });
  const std::size_t h = cg.forms_.size();
  field.h = h;
  for (std::size_t i = 0; i < h; ++i) {
    cg.lookup_.emplace(form_key(cg.forms_[i].a, cg.forms_[i].b), i);
  }

  auto mul = [&](std::size_t i, std::size_t j) {
    return cg.form_position(compose(cg.forms_[i], cg.forms_[j]));
  };

  // Greedy basis: repeatedly take an element of maximal order m in G/H, where
  // H is spanned by the generators found so far, and correct it by an element
  // of H so that it has order exactly m in G. H then splits off as a direct
  // summand, and the orders found form a divisor chain n_1, n_2, ... with
  // n_{i+1} | n_i.
  std::vector<std::size_t> gens;
  std::vector<std::uint32_t> gen_orders;
  // coords[pos] = exponent vector of pos over gens, or empty when pos not in H.
  std::vector<std::vector<std::uint32_t>> coords(h);
  std::vector<bool> in_h(h, false);
  in_h[0] = true;
  std::size_t h_size = 1;

  while (h_size < h) {
    std::size_t best = 0;
    std::uint32_t best_order = 0;
    for (std::size_t x = 0; x < h; ++x) {
      if (in_h[x]) continue;
      std::uint32_t m = 1;
      std::size_t y = x;
      while (!in_h[y]) {
        y = mul(y, x);
        ++m;
      }
      if (m > best_order) {
        best_order = m;
        best = x;
      }
    }
    // x^m lies in H; divide its exponents by m and cancel them.
    std::size_t y = best;
    for (std::uint32_t i = 1; i < best_order; ++i) y = mul(y, best);
    std::size_t gen = best;
    const auto& ys = coords[y];
    for (std::size_t i = 0; i < gens.size(); ++i) {
      const std::uint32_t a = ys.empty() ? 0 : ys[i];
      if (a % best_order != 0) {
        throw std::logic_error("class group basis construction failed");
      }
      const std::uint32_t n = gen_orders[i];
      const std::uint32_t k = (n - (a / best_order) % n) % n;
      for (std::uint32_t r = 0; r < k; ++r) gen = mul(gen, gens[i]);
    }
    if (!gen_orders.empty() && gen_orders.back() % best_order != 0) {
      throw std::logic_error("class group orders do not form a divisor chain");
    }
    gens.push_back(gen);
    gen_orders.push_back(best_order);

    // H <- H x <gen>
    std::vector<std::size_t> members;
    for (std::size_t pos = 0; pos < h; ++pos) {
      if (in_h[pos]) members.push_back(pos);
    }
    for (std::size_t pos : members) {
      if (coords[pos].size() < gens.size()) coords[pos].resize(gens.size(), 0);
    }
    std::size_t power = 0;  // gen^0 = identity at position 0
    for (std::uint32_t k = 1; k < best_order; ++k) {
      power = mul(power, gen);
      for (std::size_t pos : members) {
        std::size_t z = mul(pos, power);
        if (in_h[z]) throw std::logic_error("generator not independent");
        in_h[z] = true;
        coords[z] = coords[pos];
        coords[z][gens.size() - 1] = k;
        ++h_size;
      }
    }
  }

  // Canonical coordinates list invariant factors ascending: reverse.
  std::vector<std::uint32_t> factors(gen_orders.rbegin(), gen_orders.rend());
  cg.group_ = GroupSpec(factors);
  cg.class_of_form_.assign(h, 0);
  cg.form_of_class_.assign(h, QuadForm{});
  for (std::size_t pos = 0; pos < h; ++pos) {
    const std::vector<std::uint32_t> c(coords[pos].rbegin(), coords[pos].rend());
    const ClassIndex ci = cg.group_.from_coordinates(c);
    cg.class_of_form_[pos] = ci;
    cg.form_of_class_[ci] = cg.forms_[pos];
  }
  return cg;
}

std::string_view to_string(Splitting s) {
  switch (s) {
    case Splitting::split: return "split";
    case Splitting::inert: return "inert";
    case Splitting::ramified: return "ramified";
  }
  return "?";
}

Splitting splitting_type(const FieldSpec& f, std::uint64_t p) {
  if (!arith::is_prime(p)) {
    throw InvalidArgument(std::to_string(p) + " is not prime");
  }
  const std::int64_t ip = static_cast<std::int64_t>(p);
  if (f.disc % ip == 0) return Splitting::ramified;
  return arith::kronecker(f.disc, ip) == 1 ? Splitting::split : Splitting::inert;
}

PrimeSiteStream::PrimeSiteStream(const ClassGroup& cg, std::uint64_t max_norm,
                                 QuadraticLimits limits)
    : cg_(cg), max_norm_(max_norm), sieve_(max_norm) {
  if (max_norm > limits.max_norm) {
    throw ResourceLimit("norm bound " + std::to_string(max_norm) +
                        " exceeds configured limit " +
                        std::to_string(limits.max_norm));
  }
}

void PrimeSiteStream::refill() {
  ready_.clear();
  ready_pos_ = 0;
  while (ready_.empty()) {
    std::optional<std::uint64_t> p;
    if (!sieve_done_) {
      p = sieve_.next();
      if (!p) sieve_done_ = true;
    }
    const std::uint64_t bound = p ? *p : UINT64_MAX;
    while (!inert_.empty() && inert_.top().norm < bound) {
      const Pending q = inert_.top();
      inert_.pop();
      PrimeSite s;
      s.id = next_id_++;
      s.p = q.p;
      s.norm = q.norm;
      s.splitting = Splitting::inert;
      s.conjugate_id = s.id;
      s.class_index = 0;
      ready_.push_back(s);
    }
    if (!p) return;

    const FieldSpec& f = cg_.field();
    const std::uint64_t prime = *p;
    const i128 disc = f.disc;
    auto site_class = [&](std::uint64_t b) {
      const i128 num = static_cast<i128>(b) * b - disc;
      const i128 c = num / (4 * static_cast<i128>(prime));
      return cg_.class_of({static_cast<std::int64_t>(prime),
                           static_cast<std::int64_t>(b),
                           static_cast<std::int64_t>(c)});
    };
    const bool disc_even = (f.disc & 1) == 0;

    switch (splitting_type(f, prime)) {
      case Splitting::inert:
        if (prime <= max_norm_ / prime) inert_.push({prime * prime, prime});
        break;
      case Splitting::ramified: {
        std::uint64_t b;
        if (prime == 2) {
          b = arith::mod(f.disc, 8) == 0 ? 0 : 2;
        } else {
          b = disc_even ? 0 : prime;
        }
        PrimeSite s;
        s.id = next_id_++;
        s.p = prime;
        s.norm = prime;
        s.splitting = Splitting::ramified;
        s.conjugate_id = s.id;
        s.class_index = site_class(b);
        ready_.push_back(s);
        break;
      }
      case Splitting::split: {
        std::uint64_t b_small;
        if (prime == 2) {
          b_small = 1;
        } else {
          const std::uint64_t r =
              *arith::sqrt_mod(static_cast<std::uint64_t>(arith::mod(f.disc, prime)), prime);
          const std::uint64_t lift = ((r & 1) == (disc_even ? 0u : 1u)) ? r : r + prime;
          b_small = std::min(lift, 2 * prime - lift);
        }
        const std::uint64_t b_large = 2 * prime - b_small;
        PrimeSite s1, s2;
        s1.id = next_id_++;
        s2.id = next_id_++;
        s1.p = s2.p = prime;
        s1.norm = s2.norm = prime;
        s1.splitting = s2.splitting = Splitting::split;
        s1.conjugate_id = s2.id;
        s2.conjugate_id = s1.id;
        s1.class_index = site_class(b_small);
        s2.class_index = site_class(b_large);
        ready_.push_back(s1);
        ready_.push_back(s2);
        break;
      }
    }
  }
}

std::optional<PrimeSite> PrimeSiteStream::next() {
  if (ready_pos_ >= ready_.size()) refill();
  if (ready_pos_ >= ready_.size()) return std::nullopt;
  return ready_[ready_pos_++];
}

std::vector<PrimeSite> prime_sites_up_to(const ClassGroup& cg,
                                         std::uint64_t max_norm,
                                         QuadraticLimits limits) {
  if (max_norm < 2) throw InvalidArgument("norm bound must be >= 2");
  std::vector<PrimeSite> out;
  PrimeSiteStream stream(cg, max_norm, limits);
  while (auto s = stream.next()) out.push_back(*s);
  return out;
}

void write_sites_csv(std::ostream& os, std::span<const PrimeSite> sites) {
  os << "id,p,norm,splitting,class_index,conjugate_id\n";
  for (const auto& s : sites) {
    os << s.id << ',' << s.p << ',' << s.norm << ',' << to_string(s.splitting)
       << ',' << (s.class_index + 1) << ',' << s.conjugate_id << '\n';
  }
}

}  // namespace irrdiv
