#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "irrdiv/abelian.hpp"
#include "irrdiv/quadratic.hpp"
#include "irrdiv/synth.hpp"

namespace irrdiv {

/// Prime sites of one ring (or synthetic stream) up to a norm bound, sorted
/// by norm with id == position.
struct SiteTable {
  GroupSpec group;
  std::vector<PrimeSite> sites;
  /// Density of ideals: #{N(a) <= x} ~ psi * x. Weber's constant for a
  /// field, 1 for synthetic streams over the rational primes.
  double psi = 1.0;
  mpq_class psi_coeff = 1;  // psi = psi_coeff * pi / sqrt|disc| for fields
  std::string label;
};

SiteTable field_site_table(const ClassGroup& cg, std::uint64_t x,
                           QuadraticLimits limits = {});
SiteTable synth_site_table(const SynthModel& m, std::uint64_t x);

struct FactorEntry {
  std::uint64_t site_id = 0;
  std::uint64_t norm = 0;  // norm of the site
  ClassIndex cls = 0;      // class of the site
  std::uint32_t exponent = 1;

  auto operator<=>(const FactorEntry&) const = default;
};

/// Prime ideal factorization, entries sorted by site id.
struct Factorization {
  std::vector<FactorEntry> entries;
  std::uint64_t norm = 1;
  ClassIndex class_index = 0;

  std::uint32_t length() const;  // Omega, with multiplicity
  auto operator<=>(const Factorization&) const = default;
};

/// Builds and validates a factorization from (site id, exponent) pairs.
Factorization make_factorization(
    const SiteTable& t,
    std::span<const std::pair<std::uint64_t, std::uint32_t>> pairs);

/// Non-owning view handed to census visitors; entries are in DFS order
/// (ascending site index).
struct FactorView {
  std::span<const FactorEntry> entries;
  std::uint64_t norm = 1;
  ClassIndex cls = 0;

  Factorization to_factorization() const;
};

struct CensusRecord {
  std::uint64_t norm = 1;
  ClassIndex class_index = 0;
  std::vector<std::uint32_t> omega;  // distinct sites per class
  std::vector<std::uint32_t> Omega;  // with multiplicity
  std::uint64_t nu = 0;
  std::vector<std::uint64_t> nu_by_type;  // parallel to constants.types
  std::uint64_t delta = 1;
  bool is_irreducible = false;
  std::uint64_t squarefull_norm = 1;
};

struct CensusLimits {
  std::uint32_t max_bruteforce_length = 24;       // Omega bound for nu_bruteforce
  std::uint64_t max_divisor_count = 1'000'000;  // bound for delta computations
};

/// omega / Omega vectors of a factorization.
void class_profile(const GroupSpec& g, std::span<const FactorEntry> entries,
                   std::vector<std::uint32_t>& omega,
                   std::vector<std::uint32_t>& Omega);

struct NuResult {
  std::uint64_t nu = 0;
  std::vector<std::uint64_t> by_type;  // parallel to sc.types
};

/// Sub-multiset counts per type from the per-class generating polynomials
/// prod_s (1 + z + ... + z^{e_s}).
NuResult nu_exact(const Factorization& f, const StructuralConstants& sc);
NuResult nu_exact(std::span<const FactorEntry> entries,
                  const StructuralConstants& sc);

/// Direct enumeration of identity-class sub-multisets, keeping the minimal
/// ones. Independent of the type list.
std::uint64_t nu_bruteforce(const Factorization& f, const GroupSpec& g,
                            CensusLimits limits = {});

/// Squarefull/squarefree split: the part of a sub-multiset inside the
/// squarefull part s is any divisor of s, the rest is a choice of distinct
/// squarefree sites per class.
std::uint64_t nu_squarefull_formula(const Factorization& f,
                                    const StructuralConstants& sc,
                                    CensusLimits limits = {});

/// Number of principal ideals dividing f, by a group-ring convolution.
std::uint64_t delta_exact(std::span<const FactorEntry> entries,
                          const GroupSpec& g, CensusLimits limits = {});
std::uint64_t delta_exact(const Factorization& f, const GroupSpec& g,
                          CensusLimits limits = {});

/// Same count by listing every divisor exponent vector.
std::uint64_t delta_bruteforce(const Factorization& f, const GroupSpec& g,
                               CensusLimits limits = {});

/// prod_i sum_{0 <= j <= omega_i, h | j} C(omega_i, j).
std::uint64_t delta_lower_bound(const CensusRecord& r, std::uint64_t h);

/// True when the class distribution of f is a minimal zero-sum type. Throws
/// InvalidArgument for the unit ideal and for nonprincipal f.
bool is_irreducible(const Factorization& f, const StructuralConstants& sc);
bool is_irreducible(std::span<const FactorEntry> entries,
                    const StructuralConstants& sc);

std::uint64_t squarefull_norm(std::span<const FactorEntry> entries);

/// Builds census records for principal ideals. Caches an addition table for
/// the group; safe to share between threads.
class RecordBuilder {
 public:
  explicit RecordBuilder(const StructuralConstants& sc, CensusLimits limits = {});

  const StructuralConstants& constants() const { return sc_; }
  ClassIndex add(ClassIndex a, ClassIndex b) const {
    return table_.empty() ? sc_.group.add(a, b) : table_[a * h_ + b];
  }

  /// nu via nu_exact, delta via delta_exact, irreducibility via the type
  /// list. Throws InvalidArgument for a nonprincipal view.
  CensusRecord build(const FactorView& v) const;

  std::uint64_t delta(std::span<const FactorEntry> entries) const;
  /// Omega profile is a minimal zero-sum type (false for the unit ideal).
  bool irreducible_profile(const std::vector<std::uint32_t>& Omega) const;

 private:
  const StructuralConstants& sc_;
  CensusLimits limits_;
  std::uint64_t h_;
  std::vector<ClassIndex> table_;  // h*h addition table when h is small
};

CensusRecord make_record(const FactorView& v, const StructuralConstants& sc,
                         CensusLimits limits = {});

// ---------------------------------------------------------------------------
// Enumeration

/// Every ideal of norm <= x is a path in the DFS over sites (ascending site
/// index, exponent stack). Tasks partition that tree.
struct CensusTask {
  std::vector<FactorEntry> prefix;
  std::uint64_t norm = 1;
  ClassIndex cls = 0;
  std::size_t lo = 0, hi = 0;  // child site range [lo, hi) to expand
  bool visit_prefix = false;   // also visit the prefix node itself
};

std::vector<CensusTask> plan_census(const SiteTable& t, std::uint64_t x,
                                    unsigned threads);

void run_census_task(const SiteTable& t, std::uint64_t x, const CensusTask& task,
                     const std::function<void(const FactorView&)>& visit);

/// Visits every ideal of norm <= x (the unit ideal included) exactly once.
/// Each worker folds into its own accumulator from make(), and the
/// per-worker results are merged via Acc::merge. Visit order inside a worker
/// is unspecified, so Acc must be order-independent.
template <class Make, class Visit>
auto enumerate_ideals(const SiteTable& t, std::uint64_t x, unsigned threads,
                      Make make, Visit visit) {
  using Acc = decltype(make());
  if (x < 1) throw InvalidArgument("census bound x must be at least 1");
  if (threads == 0) threads = 1;
  const auto tasks = plan_census(t, x, threads);
  std::vector<Acc> accs;
  accs.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) accs.push_back(make());
  std::atomic<std::size_t> next{0};
  auto worker = [&](unsigned w) {
    Acc& acc = accs[w];
    std::function<void(const FactorView&)> cb = [&](const FactorView& v) {
      visit(acc, v);
    };
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      run_census_task(t, x, tasks[i], cb);
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          worker(w);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!err) err = std::current_exception();
          next = tasks.size();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }
  for (unsigned w = 1; w < threads; ++w) accs[0].merge(std::move(accs[w]));
  return std::move(accs[0]);
}

struct CensusRow {
  Factorization factorization;
  CensusRecord record;
};

/// Every principal ideal of norm <= x, sorted by (norm, factorization).
std::vector<CensusRow> enumerate_principal(const SiteTable& t,
                                           const StructuralConstants& sc,
                                           std::uint64_t x, unsigned threads = 1,
                                           CensusLimits limits = {});

/// Header `norm,class,omega_1..omega_h,Omega_1..Omega_h,nu,delta,
/// is_irreducible,squarefull_norm`.
void write_census_csv(std::ostream& os, std::span<const CensusRow> rows,
                      std::uint64_t h);

/// Sum of 1/N over a set of ideals in 2^-96 fixed point, so that shards can
/// be summed in any order with identical results.
class HarmonicSum {
 public:
  void add(std::uint64_t norm, std::uint64_t count = 1);
  void merge(const HarmonicSum& o) { acc_ += o.acc_; }
  double value() const;
  bool operator==(const HarmonicSum&) const = default;

 private:
  arith::u128 acc_ = 0;
};

struct HarmonicSums {
  double principal = 0.0;    // sum of 1/N over principal ideals
  double irreducible = 0.0;  // sum of 1/N over irreducibles (their ideals)
  std::uint64_t irreducible_count = 0;
};

HarmonicSums harmonic_sums(const SiteTable& t, const StructuralConstants& sc,
                           std::uint64_t x, unsigned threads = 1);

}  // namespace irrdiv
