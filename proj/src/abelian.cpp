#include "irrdiv/abelian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace irrdiv {

GroupSpec::GroupSpec(std::vector<std::uint32_t> invariant_factors)
    : factors_(std::move(invariant_factors)) {
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i] < 2) {
      throw InvalidArgument("invariant factor must be >= 2");
    }
    if (i > 0 && factors_[i] % factors_[i - 1] != 0) {
      throw InvalidArgument("invariant factors must form a divisor chain");
    }
    if (order_ > (std::uint64_t{1} << 31)) {
      throw ResourceLimit("group order exceeds 2^31");
    }
    order_ *= factors_[i];
  }
}

GroupSpec GroupSpec::cyclic(std::uint32_t n) {
  if (n == 0) throw InvalidArgument("cyclic group of order 0");
  if (n == 1) return GroupSpec{};
  return GroupSpec({n});
}

std::vector<std::uint32_t> GroupSpec::coordinates(ClassIndex g) const {
  std::vector<std::uint32_t> out(factors_.size());
  for (std::size_t i = factors_.size(); i-- > 0;) {
    out[i] = g % factors_[i];
    g /= factors_[i];
  }
  return out;
}

ClassIndex GroupSpec::from_coordinates(
    std::span<const std::uint32_t> coords) const {
  if (coords.size() != factors_.size()) {
    throw InvalidArgument("coordinate tuple has wrong rank");
  }
  ClassIndex g = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] >= factors_[i]) {
      throw InvalidArgument("coordinate out of range");
    }
    g = g * factors_[i] + coords[i];
  }
  return g;
}

ClassIndex GroupSpec::add(ClassIndex a, ClassIndex b) const {
  ClassIndex out = 0;
  ClassIndex place = 1;
  for (std::size_t i = factors_.size(); i-- > 0;) {
    const std::uint32_t d = factors_[i];
    std::uint32_t digit = (a % d + b % d) % d;
    out += digit * place;
    place *= d;
    a /= d;
    b /= d;
  }
  return out;
}

ClassIndex GroupSpec::negate(ClassIndex a) const {
  ClassIndex out = 0;
  ClassIndex place = 1;
  for (std::size_t i = factors_.size(); i-- > 0;) {
    const std::uint32_t d = factors_[i];
    std::uint32_t digit = (d - a % d) % d;
    out += digit * place;
    place *= d;
    a /= d;
  }
  return out;
}

ClassIndex GroupSpec::multiple(ClassIndex a, std::int64_t k) const {
  ClassIndex out = 0;
  ClassIndex place = 1;
  for (std::size_t i = factors_.size(); i-- > 0;) {
    const std::int64_t d = factors_[i];
    std::int64_t digit = ((a % d) * (k % d)) % d;
    if (digit < 0) digit += d;
    out += static_cast<ClassIndex>(digit) * place;
    place *= static_cast<ClassIndex>(d);
    a /= static_cast<ClassIndex>(d);
  }
  return out;
}

std::uint64_t GroupSpec::element_order(ClassIndex a) const {
  std::uint64_t ord = 1;
  auto coords = coordinates(a);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    std::uint64_t d = factors_[i];
    std::uint64_t oi = d / std::gcd<std::uint64_t>(coords[i], d);
    ord = std::lcm(ord, oi);
  }
  return ord;
}

std::string GroupSpec::to_string() const {
  if (factors_.empty()) return "trivial";
  std::ostringstream os;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) os << " x ";
    os << "Z/" << factors_[i];
  }
  return os.str();
}

ClassIndex ClassOrdering::index_of(
    std::span<const std::uint32_t> coords) const {
  auto it = std::lower_bound(
      elements.begin(), elements.end(), coords,
      [](const std::vector<std::uint32_t>& e,
         std::span<const std::uint32_t> c) {
        return std::lexicographical_compare(e.begin(), e.end(), c.begin(),
                                            c.end());
      });
  if (it == elements.end() || !std::equal(it->begin(), it->end(),
                                          coords.begin(), coords.end())) {
    throw InvalidArgument("element not in ordering");
  }
  return static_cast<ClassIndex>(it - elements.begin());
}

ClassOrdering canonical_ordering(const GroupSpec& g) {
  ClassOrdering ord;
  ord.elements.reserve(g.order());
  for (ClassIndex i = 0; i < g.order(); ++i) {
    ord.elements.push_back(g.coordinates(i));
  }
  return ord;
}

std::uint32_t TypeVector::length() const {
  return std::accumulate(t.begin(), t.end(), std::uint32_t{0});
}

ClassIndex type_sum(const GroupSpec& g, const TypeVector& tau) {
  if (tau.t.size() != g.order()) {
    throw InvalidArgument("type vector length differs from group order");
  }
  ClassIndex s = 0;
  for (ClassIndex i = 0; i < tau.t.size(); ++i) {
    if (tau.t[i]) s = g.add(s, g.multiple(i, tau.t[i]));
  }
  return s;
}

namespace {

void check_ordering(const GroupSpec& g, const ClassOrdering& ord) {
  if (ord.size() != g.order()) {
    throw InvalidArgument("class ordering does not match group");
  }
}

/// Dense bitset over group elements.
class ElementSet {
 public:
  explicit ElementSet(std::size_t n) : words_((n + 63) / 64, 0) {}

  bool test(ClassIndex i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
  void set(ClassIndex i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits) {
        int b = __builtin_ctzll(bits);
        f(static_cast<ClassIndex>(w * 64 + b));
        bits &= bits - 1;
      }
    }
  }

 private:
  std::vector<std::uint64_t> words_;
};

/// Depth-first search over zero-sum-free sequences S (nondecreasing in
/// canonical position, identity excluded) carrying their set of nonempty
/// subsums. Each minimal zero-sum sequence T of length >= 2 arises exactly
/// once as S + g where g = -sum(S) is the largest element of T.
class TypeSearch {
 public:
  TypeSearch(const GroupSpec& g, std::vector<TypeVector>& out)
      : group_(g), h_(static_cast<ClassIndex>(g.order())), out_(out),
        add_(static_cast<std::size_t>(h_) * h_), counts_(h_, 0) {
    for (ClassIndex a = 0; a < h_; ++a) {
      for (ClassIndex b = 0; b < h_; ++b) add_[a * h_ + b] = g.add(a, b);
    }
  }

  void run() {
    TypeVector identity{std::vector<std::uint32_t>(h_, 0)};
    identity.t[0] = 1;
    out_.push_back(identity);
    ElementSet empty(h_);
    for (ClassIndex g = 1; g < h_; ++g) extend(empty, 0, g);
  }

 private:
  void extend(const ElementSet& sums, ClassIndex total, ClassIndex g) {
    ElementSet next = sums;
    sums.for_each([&](ClassIndex s) { next.set(add_[s * h_ + g]); });
    next.set(g);
    const ClassIndex new_total = add_[total * h_ + g];
    ++counts_[g];

    const ClassIndex closing = group_.negate(new_total);
    if (closing >= g) {
      TypeVector tau{counts_};
      ++tau.t[closing];
      out_.push_back(std::move(tau));
    }
    for (ClassIndex c = g; c < h_; ++c) {
      if (!next.test(group_.negate(c))) extend(next, new_total, c);
    }
    --counts_[g];
  }

  const GroupSpec& group_;
  ClassIndex h_;
  std::vector<TypeVector>& out_;
  std::vector<ClassIndex> add_;
  std::vector<std::uint32_t> counts_;
};

mpq_class factorial(std::uint32_t n) {
  mpz_class f;
  mpz_fac_ui(f.get_mpz_t(), n);
  return mpq_class(f);
}

}  // namespace

bool is_minimal_zero_sum(const GroupSpec& g, const ClassOrdering& ord,
                         const TypeVector& tau) {
  check_ordering(g, ord);
  if (tau.length() == 0) {
    throw InvalidArgument("type vector of length 0");
  }
  if (type_sum(g, tau) != 0) return false;

  // Number of sub-vectors s <= t reaching each element, capped at 3: t is
  // minimal iff exactly two (s = 0 and s = t) reach the identity.
  const std::size_t h = g.order();
  std::vector<std::uint8_t> ways(h, 0), next(h);
  ways[0] = 1;
  for (ClassIndex c = 0; c < h; ++c) {
    if (!tau.t[c]) continue;
    std::fill(next.begin(), next.end(), 0);
    for (ClassIndex s = 0; s < h; ++s) {
      if (!ways[s]) continue;
      ClassIndex to = s;
      for (std::uint32_t j = 0; j <= tau.t[c]; ++j) {
        next[to] = static_cast<std::uint8_t>(std::min(3, next[to] + ways[s]));
        to = g.add(to, c);
      }
    }
    ways.swap(next);
  }
  return ways[0] == 2;
}

std::vector<TypeVector> enumerate_types(const GroupSpec& g,
                                        const ClassOrdering& ord,
                                        SearchLimits limits) {
  check_ordering(g, ord);
  if (g.order() > limits.max_order) {
    throw ResourceLimit("group order " + std::to_string(g.order()) +
                        " exceeds type-search bound " +
                        std::to_string(limits.max_order));
  }
  std::vector<TypeVector> out;
  TypeSearch(g, out).run();
  std::sort(out.begin(), out.end());
  return out;
}

std::uint32_t davenport_constant(const GroupSpec& g, SearchLimits limits) {
  std::uint32_t d = 0;
  for (const auto& tau : enumerate_types(g, canonical_ordering(g), limits)) {
    d = std::max(d, tau.length());
  }
  return d;
}

StructuralConstants structural_constants(const GroupSpec& g,
                                         SearchLimits limits) {
  StructuralConstants sc;
  sc.group = g;
  sc.types = enumerate_types(g, canonical_ordering(g), limits);
  sc.D = 0;
  for (const auto& tau : sc.types) sc.D = std::max(sc.D, tau.length());
  for (const auto& tau : sc.types) {
    if (tau.length() == sc.D) sc.maximal_types.push_back(tau);
  }

  const std::size_t h = g.order();
  sc.kappa.assign(h, mpq_class(0));
  for (const auto& tau : sc.maximal_types) {
    mpq_class weight(1);
    for (auto ti : tau.t) weight /= factorial(ti);
    for (std::size_t j = 0; j < h; ++j) {
      if (tau.t[j]) sc.kappa[j] += weight * tau.t[j];
    }
  }

  mpq_class kappa_sum(0), kappa_sq(0);
  for (const auto& k : sc.kappa) {
    kappa_sum += k;
    kappa_sq += k * k;
  }
  mpz_class h_pow_d, h_pow_2d1;
  mpz_ui_pow_ui(h_pow_d.get_mpz_t(), h, sc.D);
  mpz_ui_pow_ui(h_pow_2d1.get_mpz_t(), h, 2 * sc.D - 1);
  sc.A = kappa_sum / (mpq_class(sc.D) * mpq_class(h_pow_d));
  sc.A.canonicalize();
  sc.B_squared = kappa_sq / mpq_class(h_pow_2d1);
  sc.B_squared.canonicalize();
  sc.B = std::sqrt(sc.B_squared.get_d());
  return sc;
}

std::string rational_string(const mpq_class& q) {
  mpq_class c = q;
  c.canonicalize();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

}  // namespace irrdiv
