#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irrdiv/census.hpp"

namespace irrdiv {

// Logarithms are natural throughout: L = log log x, L3 = log log log x.

double loglog(double x);

/// z = (nu - A L^D) / (B L^(D - 1/2)). Requires x >= 16.
double standardize(double nu, const StructuralConstants& sc, double x);
double standardize(const CensusRecord& r, const StructuralConstants& sc, double x);

/// Gaussian k-th central moment of variance sigma2 * L: 0 for odd k,
/// k! / (2^(k/2) (k/2)!) (sigma2 L)^(k/2) for even k.
double gaussian_target(unsigned k, double sigma2, double L);

/// sigma^2 = (1/h) sum kappa_j^2 and mu = (1/h) sum kappa_j.
mpq_class kappa_variance(const std::vector<mpq_class>& kappa);
mpq_class kappa_mean(const std::vector<mpq_class>& kappa);

/// Product of prime-site powers, e.g. "p0^2*p3" (site ids), "1" for the unit
/// ideal.
struct IdealDescriptor {
  std::vector<std::pair<std::uint64_t, std::uint32_t>> parts;  // sorted ids

  static IdealDescriptor parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const IdealDescriptor&) const = default;
};

/// G(r) = prod over q^e || r of (1/Nq)(1 - 1/Nq)^e + (-1/Nq)^e (1 - 1/Nq).
mpq_class G_factor(const SiteTable& t, const IdealDescriptor& r);

/// Norm of the radical of r.
std::uint64_t radical_norm(const SiteTable& t, const IdealDescriptor& r);

struct StatConfig {
  std::uint64_t x = 1;
  std::vector<std::uint32_t> moduli{2};     // residue tables for nu mod m
  unsigned max_moment = 4;                  // standardized moments 1..max
  std::vector<IdealDescriptor> descriptors; // g-mean checks
  std::vector<mpq_class> kappa;             // empty: structural kappa
};

/// Default g-mean descriptors: the unit ideal, the square of the smallest
/// site, and the second smallest site alone.
std::vector<IdealDescriptor> default_descriptors(const SiteTable& t);

struct StatContext;

/// Exact, mergeable tallies over one census. Everything is an integer count
/// (or 2^-96 fixed point), so merging shards in any order gives identical
/// results.
class StatAccumulator {
 public:
  explicit StatAccumulator(std::shared_ptr<const StatContext> ctx);

  void add(const FactorView& v);
  void merge(StatAccumulator&& o);
  void merge(const StatAccumulator& o);

  const StatContext& context() const { return *ctx_; }

  std::uint64_t n_ideals = 0;
  std::uint64_t n_principal = 0;
  std::vector<std::uint64_t> class_counts;  // all ideals, per class
  std::vector<std::uint64_t> nu_hist;       // principal: nu -> count
  std::vector<std::uint64_t> f_hist;        // principal: f * denom -> count
  std::uint64_t exceptional = 0;
  std::vector<std::vector<std::uint64_t>> g_patterns;  // per descriptor, per mask
  HarmonicSum harmonic_principal, harmonic_irreducible;
  std::uint64_t irreducible_count = 0;

 private:
  std::shared_ptr<const StatContext> ctx_;
  std::vector<std::uint32_t> omega_, Omega_;
};

struct StatContext {
  const SiteTable* table = nullptr;
  const StructuralConstants* sc = nullptr;
  StatConfig config;
  RecordBuilder builder;
  double L = 0.0;   // log log x (NaN for x <= e)
  double L3 = 0.0;  // log log log x (NaN for x <= e^e)
  std::vector<std::uint64_t> kappa_scaled;  // kappa_j * kappa_denom
  mpq_class kappa_denom;
  std::vector<std::vector<std::uint64_t>> descriptor_sites;

  StatContext(const SiteTable& t, const StructuralConstants& sc, StatConfig cfg);
};

std::shared_ptr<const StatContext> make_stat_context(const SiteTable& t,
                                                     const StructuralConstants& sc,
                                                     StatConfig cfg);

/// One census pass over all ideals of norm <= cfg.x.
StatAccumulator run_stats(const SiteTable& t, const StructuralConstants& sc,
                          const StatConfig& cfg, unsigned threads = 1);

struct ResidueTable {
  std::uint32_t m = 1;
  std::vector<std::uint64_t> counts;
  double deviation = 0.0;  // max_a |count_a / n - 1/m|
};

ResidueTable equidist(const StatAccumulator& acc, std::uint32_t m);

/// Fraction of principal ideals violating |omega_i - L/h| < L^(2/3) or
/// |Omega_i - omega_i| < L3 for some class i; 1 when L3 <= 0.
double exceptional_fraction(const StatAccumulator& acc);

/// count_i * h / (Psi x) per class.
std::vector<double> weber_check(const StatAccumulator& acc);
/// count_i / x per class.
std::vector<double> class_densities(const StatAccumulator& acc);
/// sum_{N p <= x, p in C_i} 1/N p - L/h per class.
std::vector<double> landau_check(const SiteTable& t, std::uint64_t x);

struct GMean {
  std::string descriptor;
  std::uint64_t norm = 1;
  mpq_class G;
  double measured = 0.0;   // (1/x) sum over principal ideals of g_r
  double predicted = 0.0;  // (Psi/h) G(r)
};

GMean g_mean_check(const StatAccumulator& acc, std::size_t descriptor_index);

/// (1/n) sum over principal ideals of (f - mu L)^k, f = sum kappa_j omega_j.
double f_central_moment(const StatAccumulator& acc, unsigned k);

struct MomentRow {
  unsigned k = 0;
  double measured = 0.0;
  double target = 0.0;
  double ratio = 0.0;  // NaN when the target is 0
};

std::vector<MomentRow> f_moments(const StatAccumulator& acc, unsigned max_k);

struct HistogramBin {
  double low = 0.0, high = 0.0;  // [low, high); tails use -inf / +inf
  std::uint64_t count = 0;
};

/// Standardized nu in bins of width 0.25 on [-6, 6] plus two tail bins.
std::vector<HistogramBin> z_histogram(const StatAccumulator& acc);

struct StatReport {
  std::string source;
  GroupSpec group;
  std::uint32_t D = 1;
  mpq_class A, B_squared;
  double B = 0.0;
  double psi = 0.0;
  std::uint64_t x = 1;
  double L = 0.0;
  std::uint64_t n_ideals = 0;
  std::uint64_t n_principal = 0;
  double mean_nu = 0.0, var_nu = 0.0;
  std::map<unsigned, double> standardized_moments;
  double ks_distance = 0.0;
  std::map<std::uint32_t, ResidueTable> residue_counts;
  std::vector<double> weber_ratios;
  std::vector<double> class_densities;
  std::vector<double> landau_deviations;
  double exceptional_fraction = 1.0;
  std::vector<GMean> g_mean_table;
  HarmonicSums harmonic;
  std::vector<HistogramBin> histogram;
};

StatReport make_report(const StatAccumulator& acc);

void write_report_json(std::ostream& os, const StatReport& r);
/// `bin_low,bin_high,count`
void write_histogram_csv(std::ostream& os, const std::vector<HistogramBin>& bins);

/// Formats a double with 17 significant digits ("inf", "-inf", "nan" for
/// non-finite values).
std::string format_double(double v);

}  // namespace irrdiv
