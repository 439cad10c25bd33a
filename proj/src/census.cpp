#include "irrdiv/census.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

namespace irrdiv {

namespace {

std::uint64_t binom(std::uint32_t n, std::uint32_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint32_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void check_classes(std::span<const FactorEntry> entries, std::uint64_t h) {
  for (const auto& e : entries) {
    if (e.cls >= h) {
      throw InvalidArgument("factorization class index outside the group");
    }
    if (e.exponent == 0) throw InvalidArgument("factorization exponent is zero");
  }
}

/// prod (e + 1), or limit + 1 once it exceeds limit.
std::uint64_t divisor_count(std::span<const FactorEntry> entries,
                            std::uint64_t limit) {
  std::uint64_t n = 1;
  for (const auto& e : entries) {
    n *= e.exponent + 1ULL;
    if (n > limit) return limit + 1;
  }
  return n;
}

std::string field_label(std::int64_t d) {
  std::ostringstream os;
  os << "Q(sqrt(" << d << "))";
  return os.str();
}

}  // namespace

SiteTable field_site_table(const ClassGroup& cg, std::uint64_t x,
                           QuadraticLimits limits) {
  SiteTable t;
  t.group = cg.group();
  if (x >= 2) t.sites = prime_sites_up_to(cg, x, limits);
  t.psi = cg.field().psi;
  t.psi_coeff = cg.field().psi_coeff;
  t.label = field_label(cg.field().d);
  return t;
}

SiteTable synth_site_table(const SynthModel& m, std::uint64_t x) {
  m.validate();
  SiteTable t;
  t.group = m.group;
  if (x >= 2) t.sites = synth_sites(m, x);
  t.psi = 1.0;
  t.psi_coeff = 0;
  std::ostringstream os;
  os << "synth " << m.group.to_string() << " seed=" << m.seed;
  t.label = os.str();
  return t;
}

std::uint32_t Factorization::length() const {
  std::uint32_t n = 0;
  for (const auto& e : entries) n += e.exponent;
  return n;
}

Factorization make_factorization(
    const SiteTable& t,
    std::span<const std::pair<std::uint64_t, std::uint32_t>> pairs) {
  Factorization f;
  for (const auto& [id, e] : pairs) {
    if (id >= t.sites.size()) throw InvalidArgument("unknown site id");
    if (e == 0) throw InvalidArgument("factorization exponent is zero");
    const auto& s = t.sites[id];
    f.entries.push_back({s.id, s.norm, s.class_index, e});
  }
  std::sort(f.entries.begin(), f.entries.end());
  for (std::size_t i = 1; i < f.entries.size(); ++i) {
    if (f.entries[i].site_id == f.entries[i - 1].site_id) {
      throw InvalidArgument("repeated site id in factorization");
    }
  }
  arith::u128 norm = 1;
  for (const auto& e : f.entries) {
    for (std::uint32_t k = 0; k < e.exponent; ++k) {
      norm *= e.norm;
      if (norm > UINT64_MAX) throw ResourceLimit("factorization norm overflows");
    }
    f.class_index = t.group.add(
        f.class_index, t.group.multiple(e.cls, static_cast<std::int64_t>(e.exponent)));
  }
  f.norm = static_cast<std::uint64_t>(norm);
  return f;
}

Factorization FactorView::to_factorization() const {
  Factorization f;
  f.entries.assign(entries.begin(), entries.end());
  f.norm = norm;
  f.class_index = cls;
  return f;
}

void class_profile(const GroupSpec& g, std::span<const FactorEntry> entries,
                   std::vector<std::uint32_t>& omega,
                   std::vector<std::uint32_t>& Omega) {
  const auto h = g.order();
  check_classes(entries, h);
  omega.assign(h, 0);
  Omega.assign(h, 0);
  for (const auto& e : entries) {
    ++omega[e.cls];
    Omega[e.cls] += e.exponent;
  }
}

// ---------------------------------------------------------------------------
// nu

NuResult nu_exact(std::span<const FactorEntry> entries,
                  const StructuralConstants& sc) {
  const std::uint64_t h = sc.h();
  check_classes(entries, h);
  const std::uint32_t deg = sc.D;
  // poly[i * (deg + 1) + k] = coefficient of z^k for class i
  std::vector<std::uint64_t> poly(h * (deg + 1), 0);
  for (std::uint64_t i = 0; i < h; ++i) poly[i * (deg + 1)] = 1;
  for (const auto& e : entries) {
    std::uint64_t* p = &poly[e.cls * (deg + 1)];
    // multiply by 1 + z + ... + z^e, highest degree first so p is reused
    for (std::uint32_t k = deg; k >= 1; --k) {
      std::uint64_t s = 0;
      for (std::uint32_t j = 1; j <= std::min(k, e.exponent); ++j) s += p[k - j];
      p[k] += s;
    }
  }
  NuResult r;
  r.by_type.resize(sc.types.size(), 0);
  for (std::size_t ti = 0; ti < sc.types.size(); ++ti) {
    const auto& t = sc.types[ti].t;
    std::uint64_t prod = 1;
    for (std::uint64_t i = 0; i < h && prod; ++i) {
      if (t[i]) prod *= poly[i * (deg + 1) + t[i]];
    }
    r.by_type[ti] = prod;
    r.nu += prod;
  }
  return r;
}

NuResult nu_exact(const Factorization& f, const StructuralConstants& sc) {
  return nu_exact(std::span<const FactorEntry>(f.entries), sc);
}

std::uint64_t nu_bruteforce(const Factorization& f, const GroupSpec& g,
                            CensusLimits limits) {
  check_classes(f.entries, g.order());
  if (f.length() > limits.max_bruteforce_length) {
    throw ResourceLimit("factorization too long for brute-force nu");
  }
  const std::size_t k = f.entries.size();
  // Walk every exponent vector with an odometer, tracking the class sum.
  std::vector<std::uint32_t> cur(k, 0);
  std::vector<std::vector<std::uint32_t>> zero;
  ClassIndex sum = 0;
  while (true) {
    std::size_t i = 0;
    while (i < k && cur[i] == f.entries[i].exponent) {
      sum = g.add(sum, g.multiple(f.entries[i].cls,
                                  -static_cast<std::int64_t>(cur[i])));
      cur[i++] = 0;
    }
    if (i == k) break;
    ++cur[i];
    sum = g.add(sum, f.entries[i].cls);
    if (sum == 0) zero.push_back(cur);
  }
  auto leq = [&](const std::vector<std::uint32_t>& a,
                 const std::vector<std::uint32_t>& b) {
    for (std::size_t j = 0; j < k; ++j) {
      if (a[j] > b[j]) return false;
    }
    return true;
  };
  std::uint64_t count = 0;
  for (const auto& v : zero) {
    bool minimal = true;
    for (const auto& u : zero) {
      if (&u != &v && leq(u, v)) {
        minimal = false;
        break;
      }
    }
    count += minimal;
  }
  return count;
}

std::uint64_t nu_squarefull_formula(const Factorization& f,
                                    const StructuralConstants& sc,
                                    CensusLimits limits) {
  const std::uint64_t h = sc.h();
  check_classes(f.entries, h);
  std::vector<FactorEntry> full;
  std::vector<std::uint32_t> omega_u(h, 0);
  std::uint64_t omega_1 = 0;
  for (const auto& e : f.entries) {
    if (e.cls == 0) ++omega_1;
    if (e.exponent >= 2) {
      full.push_back(e);
    } else {
      ++omega_u[e.cls];
    }
  }
  if (divisor_count(full, limits.max_divisor_count) > limits.max_divisor_count) {
    throw ResourceLimit("squarefull part has too many divisors");
  }
  // Omega profile of every divisor of the squarefull part, with multiplicity.
  std::map<std::vector<std::uint32_t>, std::uint64_t> profiles;
  std::vector<std::uint32_t> cur(full.size(), 0);
  std::vector<std::uint32_t> prof(h, 0);
  while (true) {
    ++profiles[prof];
    std::size_t i = 0;
    while (i < full.size() && cur[i] == full[i].exponent) {
      prof[full[i].cls] -= cur[i];
      cur[i++] = 0;
    }
    if (i == full.size()) break;
    ++cur[i];
    ++prof[full[i].cls];
  }

  std::uint64_t nu = omega_1;
  for (const auto& tau : sc.types) {
    const auto& t = tau.t;
    if (t[0] != 0) continue;
    for (const auto& [p, mult] : profiles) {
      std::uint64_t term = mult;
      for (std::uint64_t i = 0; i < h && term; ++i) {
        term = p[i] > t[i] ? 0 : term * binom(omega_u[i], t[i] - p[i]);
      }
      nu += term;
    }
  }
  return nu;
}

// ---------------------------------------------------------------------------
// delta

std::uint64_t delta_exact(std::span<const FactorEntry> entries,
                          const GroupSpec& g, CensusLimits limits) {
  check_classes(entries, g.order());
  if (divisor_count(entries, limits.max_divisor_count) > limits.max_divisor_count) {
    throw ResourceLimit("too many divisors for delta");
  }
  const std::uint64_t h = g.order();
  std::vector<std::uint64_t> ways(h, 0), next(h);
  ways[0] = 1;
  for (const auto& e : entries) {
    std::fill(next.begin(), next.end(), 0);
    ClassIndex shift = 0;
    for (std::uint32_t k = 0; k <= e.exponent; ++k) {
      for (ClassIndex c = 0; c < h; ++c) {
        if (ways[c]) next[g.add(c, shift)] += ways[c];
      }
      shift = g.add(shift, e.cls);
    }
    ways.swap(next);
  }
  return ways[0];
}

std::uint64_t delta_exact(const Factorization& f, const GroupSpec& g,
                          CensusLimits limits) {
  return delta_exact(std::span<const FactorEntry>(f.entries), g, limits);
}

std::uint64_t delta_bruteforce(const Factorization& f, const GroupSpec& g,
                               CensusLimits limits) {
  check_classes(f.entries, g.order());
  if (divisor_count(f.entries, limits.max_divisor_count) > limits.max_divisor_count) {
    throw ResourceLimit("too many divisors for delta");
  }
  const std::size_t k = f.entries.size();
  std::vector<std::uint32_t> cur(k, 0);
  std::uint64_t count = 0;
  while (true) {
    // recompute the class from scratch for every divisor
    ClassIndex sum = 0;
    for (std::size_t i = 0; i < k; ++i) {
      sum = g.add(sum, g.multiple(f.entries[i].cls, cur[i]));
    }
    count += sum == 0;
    std::size_t i = 0;
    while (i < k && cur[i] == f.entries[i].exponent) cur[i++] = 0;
    if (i == k) break;
    ++cur[i];
  }
  return count;
}

std::uint64_t delta_lower_bound(const CensusRecord& r, std::uint64_t h) {
  std::uint64_t prod = 1;
  for (auto w : r.omega) {
    std::uint64_t s = 0;
    for (std::uint32_t j = 0; j <= w; j += static_cast<std::uint32_t>(h)) {
      s += binom(w, j);
    }
    prod *= s;
  }
  return prod;
}

// ---------------------------------------------------------------------------
// irreducibility

bool is_irreducible(std::span<const FactorEntry> entries,
                    const StructuralConstants& sc) {
  const auto& g = sc.group;
  std::vector<std::uint32_t> omega, Omega;
  class_profile(g, entries, omega, Omega);
  if (entries.empty()) throw InvalidArgument("the unit ideal is not a nonunit");
  ClassIndex sum = 0;
  for (const auto& e : entries) {
    sum = g.add(sum, g.multiple(e.cls, e.exponent));
  }
  if (sum != 0) throw InvalidArgument("factorization is not principal");
  return std::binary_search(sc.types.begin(), sc.types.end(), TypeVector{Omega});
}

bool is_irreducible(const Factorization& f, const StructuralConstants& sc) {
  return is_irreducible(std::span<const FactorEntry>(f.entries), sc);
}

std::uint64_t squarefull_norm(std::span<const FactorEntry> entries) {
  std::uint64_t n = 1;
  for (const auto& e : entries) {
    if (e.exponent < 2) continue;
    for (std::uint32_t k = 0; k < e.exponent; ++k) n *= e.norm;
  }
  return n;
}

// ---------------------------------------------------------------------------
// records

RecordBuilder::RecordBuilder(const StructuralConstants& sc, CensusLimits limits)
    : sc_(sc), limits_(limits), h_(sc.h()) {
  if (h_ <= 256) {
    table_.resize(h_ * h_);
    for (ClassIndex a = 0; a < h_; ++a) {
      for (ClassIndex b = 0; b < h_; ++b) table_[a * h_ + b] = sc.group.add(a, b);
    }
  }
}

std::uint64_t RecordBuilder::delta(std::span<const FactorEntry> entries) const {
  if (divisor_count(entries, limits_.max_divisor_count) > limits_.max_divisor_count) {
    throw ResourceLimit("too many divisors for delta");
  }
  std::vector<std::uint64_t> ways(h_, 0), next(h_);
  ways[0] = 1;
  for (const auto& e : entries) {
    std::fill(next.begin(), next.end(), 0);
    ClassIndex shift = 0;
    for (std::uint32_t k = 0; k <= e.exponent; ++k) {
      for (ClassIndex c = 0; c < h_; ++c) {
        if (ways[c]) next[add(c, shift)] += ways[c];
      }
      shift = add(shift, e.cls);
    }
    ways.swap(next);
  }
  return ways[0];
}

bool RecordBuilder::irreducible_profile(const std::vector<std::uint32_t>& Omega) const {
  return std::binary_search(sc_.types.begin(), sc_.types.end(), TypeVector{Omega});
}

CensusRecord RecordBuilder::build(const FactorView& v) const {
  if (v.cls != 0) throw InvalidArgument("census record requested for a nonprincipal ideal");
  CensusRecord r;
  r.norm = v.norm;
  r.class_index = v.cls;
  class_profile(sc_.group, v.entries, r.omega, r.Omega);
  auto nu = nu_exact(v.entries, sc_);
  r.nu = nu.nu;
  r.nu_by_type = std::move(nu.by_type);
  r.delta = delta(v.entries);
  r.is_irreducible = !v.entries.empty() && irreducible_profile(r.Omega);
  r.squarefull_norm = squarefull_norm(v.entries);
  return r;
}

CensusRecord make_record(const FactorView& v, const StructuralConstants& sc,
                         CensusLimits limits) {
  return RecordBuilder(sc, limits).build(v);
}

// ---------------------------------------------------------------------------
// enumeration

namespace {

/// First site index whose norm exceeds bound.
std::size_t sites_end(const SiteTable& t, std::uint64_t bound) {
  return static_cast<std::size_t>(
      std::upper_bound(t.sites.begin(), t.sites.end(), bound,
                       [](std::uint64_t b, const PrimeSite& s) { return b < s.norm; }) -
      t.sites.begin());
}

struct Dfs {
  const SiteTable& t;
  std::uint64_t x;
  const std::function<void(const FactorView&)>& visit;
  std::vector<FactorEntry> stack;

  void expand(std::size_t lo, std::size_t hi, std::uint64_t n, ClassIndex c) {
    const std::uint64_t room = x / n;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& s = t.sites[i];
      if (s.norm > room) break;
      stack.push_back({s.id, s.norm, s.class_index, 0});
      std::uint64_t m = n;
      ClassIndex cc = c;
      while (m <= x / s.norm) {
        m *= s.norm;
        cc = t.group.add(cc, s.class_index);
        ++stack.back().exponent;
        visit(FactorView{stack, m, cc});
        expand(i + 1, t.sites.size(), m, cc);
      }
      stack.pop_back();
    }
  }
};

struct Planner {
  const SiteTable& t;
  std::uint64_t x;
  std::uint64_t budget;
  std::vector<CensusTask> tasks;

  void plan(std::vector<FactorEntry>& prefix, std::uint64_t n, ClassIndex c,
            std::size_t lo, bool visit_self) {
    const std::size_t end = sites_end(t, x / n);
    std::size_t i = lo;
    // Heavy children get their own subtree plans.
    for (; i < end && x / (n * t.sites[i].norm) > budget; ++i) {
      const auto& s = t.sites[i];
      prefix.push_back({s.id, s.norm, s.class_index, 0});
      std::uint64_t m = n;
      ClassIndex cc = c;
      while (m <= x / s.norm) {
        m *= s.norm;
        cc = t.group.add(cc, s.class_index);
        ++prefix.back().exponent;
        plan(prefix, m, cc, i + 1, true);
      }
      prefix.pop_back();
    }
    // Light children are batched into ranges of roughly budget weight.
    bool self_pending = visit_self;
    while (i < end || self_pending) {
      std::size_t j = i;
      std::uint64_t weight = 0;
      while (j < end && weight < budget) weight += x / (n * t.sites[j++].norm);
      CensusTask task;
      task.prefix = prefix;
      task.norm = n;
      task.cls = c;
      task.lo = i;
      task.hi = j;
      task.visit_prefix = self_pending;
      tasks.push_back(std::move(task));
      self_pending = false;
      i = j;
    }
  }
};

}  // namespace

std::vector<CensusTask> plan_census(const SiteTable& t, std::uint64_t x,
                                    unsigned threads) {
  if (threads <= 1) {
    CensusTask all;
    all.lo = 0;
    all.hi = t.sites.size();
    all.visit_prefix = true;
    return {all};
  }
  Planner p{t, x, std::max<std::uint64_t>(1, x / (64ULL * threads)), {}};
  std::vector<FactorEntry> prefix;
  p.plan(prefix, 1, 0, 0, true);
  return std::move(p.tasks);
}

void run_census_task(const SiteTable& t, std::uint64_t x, const CensusTask& task,
                     const std::function<void(const FactorView&)>& visit) {
  Dfs dfs{t, x, visit, task.prefix};
  if (task.visit_prefix) visit(FactorView{dfs.stack, task.norm, task.cls});
  dfs.expand(task.lo, task.hi, task.norm, task.cls);
}

namespace {

struct RowAcc {
  std::vector<CensusRow> rows;
  void merge(RowAcc&& o) {
    rows.insert(rows.end(), std::make_move_iterator(o.rows.begin()),
                std::make_move_iterator(o.rows.end()));
  }
};

}  // namespace

std::vector<CensusRow> enumerate_principal(const SiteTable& t,
                                           const StructuralConstants& sc,
                                           std::uint64_t x, unsigned threads,
                                           CensusLimits limits) {
  if (!(sc.group == t.group)) {
    throw InvalidArgument("structural constants are for a different group");
  }
  const RecordBuilder builder(sc, limits);
  auto acc = enumerate_ideals(t, x, threads, [] { return RowAcc{}; },
                              [&](RowAcc& a, const FactorView& v) {
                                if (v.cls != 0) return;
                                a.rows.push_back({v.to_factorization(), builder.build(v)});
                              });
  std::sort(acc.rows.begin(), acc.rows.end(),
            [](const CensusRow& a, const CensusRow& b) {
              if (a.factorization.norm != b.factorization.norm) {
                return a.factorization.norm < b.factorization.norm;
              }
              return a.factorization.entries < b.factorization.entries;
            });
  return std::move(acc.rows);
}

void write_census_csv(std::ostream& os, std::span<const CensusRow> rows,
                      std::uint64_t h) {
  os << "norm,class";
  for (std::uint64_t i = 1; i <= h; ++i) os << ",omega_" << i;
  for (std::uint64_t i = 1; i <= h; ++i) os << ",Omega_" << i;
  os << ",nu,delta,is_irreducible,squarefull_norm\n";
  for (const auto& row : rows) {
    const auto& r = row.record;
    os << r.norm << ',' << r.class_index + 1;
    for (auto w : r.omega) os << ',' << w;
    for (auto w : r.Omega) os << ',' << w;
    os << ',' << r.nu << ',' << r.delta << ',' << (r.is_irreducible ? 1 : 0) << ','
       << r.squarefull_norm << '\n';
  }
}

// ---------------------------------------------------------------------------
// harmonic sums

void HarmonicSum::add(std::uint64_t norm, std::uint64_t count) {
  acc_ += static_cast<arith::u128>(count) * ((arith::u128{1} << 96) / norm);
}

double HarmonicSum::value() const {
  const auto hi = static_cast<std::uint64_t>(acc_ >> 64);
  const auto lo = static_cast<std::uint64_t>(acc_);
  return std::ldexp(static_cast<double>(hi), -32) +
         std::ldexp(static_cast<double>(lo), -96);
}

namespace {

struct HarmonicAcc {
  HarmonicSum principal, irreducible;
  std::uint64_t irreducible_count = 0;
  void merge(HarmonicAcc&& o) {
    principal.merge(o.principal);
    irreducible.merge(o.irreducible);
    irreducible_count += o.irreducible_count;
  }
};

}  // namespace

HarmonicSums harmonic_sums(const SiteTable& t, const StructuralConstants& sc,
                           std::uint64_t x, unsigned threads) {
  if (!(sc.group == t.group)) {
    throw InvalidArgument("structural constants are for a different group");
  }
  if (x < 1) return {0.0, 0.0, 0};
  const RecordBuilder builder(sc);
  const auto h = sc.h();
  auto acc = enumerate_ideals(
      t, x, threads, [] { return HarmonicAcc{}; },
      [&](HarmonicAcc& a, const FactorView& v) {
        if (v.cls != 0) return;
        a.principal.add(v.norm);
        if (v.entries.empty()) return;
        std::vector<std::uint32_t> Omega(h, 0);
        for (const auto& e : v.entries) Omega[e.cls] += e.exponent;
        if (builder.irreducible_profile(Omega)) {
          a.irreducible.add(v.norm);
          ++a.irreducible_count;
        }
      });
  return {acc.principal.value(), acc.irreducible.value(), acc.irreducible_count};
}

}  // namespace irrdiv
