#include "irrdiv/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace irrdiv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

long double powl_int(long double b, unsigned k) {
  long double r = 1;
  for (unsigned i = 0; i < k; ++i) r *= b;
  return r;
}

mpq_class pow_q(const mpq_class& b, std::uint32_t e) {
  mpq_class r(1);
  for (std::uint32_t i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

double loglog(double x) { return std::log(std::log(x)); }

double standardize(double nu, const StructuralConstants& sc, double x) {
  if (!(x >= 16.0)) throw InvalidArgument("standardize needs x >= 16");
  const double L = loglog(x);
  const double D = sc.D;
  const double center = sc.A.get_d() * std::pow(L, D);
  const double scale = sc.B * std::pow(L, D - 0.5);
  return (nu - center) / scale;
}

double standardize(const CensusRecord& r, const StructuralConstants& sc, double x) {
  return standardize(static_cast<double>(r.nu), sc, x);
}

double gaussian_target(unsigned k, double sigma2, double L) {
  if (k % 2) return 0.0;
  // k! / (2^(k/2) (k/2)!) = (k-1)!!
  double coeff = 1.0;
  for (unsigned j = k - 1; j >= 1 && j <= k; j -= 2) coeff *= j;
  return coeff * std::pow(sigma2 * L, k / 2.0);
}

mpq_class kappa_variance(const std::vector<mpq_class>& kappa) {
  mpq_class s(0);
  for (const auto& k : kappa) s += k * k;
  return s / static_cast<unsigned long>(kappa.size());
}

mpq_class kappa_mean(const std::vector<mpq_class>& kappa) {
  mpq_class s(0);
  for (const auto& k : kappa) s += k;
  return s / static_cast<unsigned long>(kappa.size());
}

// ---------------------------------------------------------------------------
// descriptors and G(r)

IdealDescriptor IdealDescriptor::parse(std::string_view text) {
  IdealDescriptor d;
  if (text == "1") return d;
  auto bad = [&] {
    return InvalidArgument("bad ideal descriptor '" + std::string(text) +
                           "' (expected e.g. p0^2*p3 or 1)");
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t star = text.find('*', pos);
    if (star == std::string_view::npos) star = text.size();
    std::string_view part = text.substr(pos, star - pos);
    if (part.size() < 2 || part[0] != 'p') throw bad();
    std::uint64_t id = 0;
    std::uint32_t e = 1;
    const char* b = part.data() + 1;
    const char* end = part.data() + part.size();
    auto [p1, ec1] = std::from_chars(b, end, id);
    if (ec1 != std::errc() || p1 == b) throw bad();
    if (p1 != end) {
      if (*p1 != '^') throw bad();
      auto [p2, ec2] = std::from_chars(p1 + 1, end, e);
      if (ec2 != std::errc() || p2 != end || e == 0) throw bad();
    }
    d.parts.emplace_back(id, e);
    pos = star + 1;
  }
  std::sort(d.parts.begin(), d.parts.end());
  for (std::size_t i = 1; i < d.parts.size(); ++i) {
    if (d.parts[i].first == d.parts[i - 1].first) throw bad();
  }
  return d;
}

std::string IdealDescriptor::to_string() const {
  if (parts.empty()) return "1";
  std::string s;
  for (const auto& [id, e] : parts) {
    if (!s.empty()) s += '*';
    s += 'p' + std::to_string(id);
    if (e != 1) s += '^' + std::to_string(e);
  }
  return s;
}

namespace {

const PrimeSite& descriptor_site(const SiteTable& t, std::uint64_t id) {
  if (id >= t.sites.size()) {
    throw InvalidArgument("descriptor names site p" + std::to_string(id) +
                          ", beyond the site table");
  }
  return t.sites[id];
}

}  // namespace

mpq_class G_factor(const SiteTable& t, const IdealDescriptor& r) {
  mpq_class g(1);
  for (const auto& [id, e] : r.parts) {
    const mpq_class inv(1, descriptor_site(t, id).norm);
    g *= inv * pow_q(1 - inv, e) + pow_q(-inv, e) * (1 - inv);
  }
  return g;
}

std::uint64_t radical_norm(const SiteTable& t, const IdealDescriptor& r) {
  std::uint64_t n = 1;
  for (const auto& part : r.parts) n *= descriptor_site(t, part.first).norm;
  return n;
}

std::vector<IdealDescriptor> default_descriptors(const SiteTable& t) {
  std::vector<IdealDescriptor> out{IdealDescriptor{}};
  if (!t.sites.empty()) out.push_back(IdealDescriptor{{{0, 2}}});
  if (t.sites.size() > 1) out.push_back(IdealDescriptor{{{1, 1}}});
  return out;
}

// ---------------------------------------------------------------------------
// accumulation

StatContext::StatContext(const SiteTable& t, const StructuralConstants& s,
                         StatConfig cfg)
    : table(&t), sc(&s), config(std::move(cfg)), builder(s) {
  if (!(s.group == t.group)) {
    throw InvalidArgument("structural constants are for a different group");
  }
  if (config.x < 1) throw InvalidArgument("x must be at least 1");
  for (auto m : config.moduli) {
    if (m == 0) throw InvalidArgument("modulus m must be at least 1");
  }
  const auto h = s.h();
  if (config.kappa.empty()) config.kappa = s.kappa;
  if (config.kappa.size() != h) throw InvalidArgument("kappa needs one weight per class");
  bool any = false;
  for (const auto& k : config.kappa) {
    if (k < 0) throw InvalidArgument("kappa weights must be nonnegative");
    any |= k != 0;
  }
  if (!any) throw InvalidArgument("kappa weights must not all vanish");
  mpz_class den(1);
  for (const auto& k : config.kappa) {
    mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), k.get_den_mpz_t());
  }
  kappa_denom = den;
  for (const auto& k : config.kappa) {
    mpq_class scaled = k * kappa_denom;
    if (!scaled.get_num().fits_ulong_p()) throw ResourceLimit("kappa denominators too large");
    kappa_scaled.push_back(scaled.get_num().get_ui());
  }
  const double lx = std::log(static_cast<double>(config.x));
  L = lx > 1.0 ? std::log(lx) : kNaN;
  L3 = L > 0.0 ? std::log(L) : kNaN;
  for (const auto& d : config.descriptors) {
    if (d.parts.size() > 16) throw ResourceLimit("descriptor has more than 16 sites");
    std::vector<std::uint64_t> ids;
    for (const auto& part : d.parts) ids.push_back(descriptor_site(t, part.first).id);
    descriptor_sites.push_back(std::move(ids));
  }
}

std::shared_ptr<const StatContext> make_stat_context(const SiteTable& t,
                                                     const StructuralConstants& sc,
                                                     StatConfig cfg) {
  return std::make_shared<const StatContext>(t, sc, std::move(cfg));
}

StatAccumulator::StatAccumulator(std::shared_ptr<const StatContext> ctx)
    : ctx_(std::move(ctx)) {
  const auto h = ctx_->sc->h();
  class_counts.assign(h, 0);
  for (const auto& ids : ctx_->descriptor_sites) {
    g_patterns.emplace_back(std::size_t{1} << ids.size(), 0);
  }
  omega_.assign(h, 0);
  Omega_.assign(h, 0);
}

void StatAccumulator::add(const FactorView& v) {
  const auto& ctx = *ctx_;
  ++n_ideals;
  ++class_counts[v.cls];
  if (v.cls != 0) return;
  ++n_principal;

  std::fill(omega_.begin(), omega_.end(), 0);
  std::fill(Omega_.begin(), Omega_.end(), 0);
  for (const auto& e : v.entries) {
    ++omega_[e.cls];
    Omega_[e.cls] += e.exponent;
  }

  const auto nu = nu_exact(v.entries, *ctx.sc).nu;
  if (nu >= nu_hist.size()) nu_hist.resize(nu + 1, 0);
  ++nu_hist[nu];

  std::uint64_t f = 0;
  for (std::size_t i = 0; i < omega_.size(); ++i) f += ctx.kappa_scaled[i] * omega_[i];
  if (f >= f_hist.size()) f_hist.resize(f + 1, 0);
  ++f_hist[f];

  if (ctx.L3 > 0.0) {
    const double h = static_cast<double>(omega_.size());
    const double spread = std::pow(ctx.L, 2.0 / 3.0);
    for (std::size_t i = 0; i < omega_.size(); ++i) {
      if (!(std::abs(omega_[i] - ctx.L / h) < spread) ||
          !(static_cast<double>(Omega_[i] - omega_[i]) < ctx.L3)) {
        ++exceptional;
        break;
      }
    }
  }

  for (std::size_t d = 0; d < ctx.descriptor_sites.size(); ++d) {
    const auto& ids = ctx.descriptor_sites[d];
    std::size_t mask = 0;
    for (std::size_t j = 0; j < ids.size(); ++j) {
      for (const auto& e : v.entries) {
        if (e.site_id == ids[j]) {
          mask |= std::size_t{1} << j;
          break;
        }
      }
    }
    ++g_patterns[d][mask];
  }

  harmonic_principal.add(v.norm);
  if (!v.entries.empty() && ctx.builder.irreducible_profile(Omega_)) {
    harmonic_irreducible.add(v.norm);
    ++irreducible_count;
  }
}

namespace {

void add_into(std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (b.size() > a.size()) a.resize(b.size(), 0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
}

}  // namespace

void StatAccumulator::merge(const StatAccumulator& o) {
  if (ctx_ != o.ctx_) throw InvalidArgument("merging accumulators of different runs");
  n_ideals += o.n_ideals;
  n_principal += o.n_principal;
  add_into(class_counts, o.class_counts);
  add_into(nu_hist, o.nu_hist);
  add_into(f_hist, o.f_hist);
  exceptional += o.exceptional;
  for (std::size_t d = 0; d < g_patterns.size(); ++d) add_into(g_patterns[d], o.g_patterns[d]);
  harmonic_principal.merge(o.harmonic_principal);
  harmonic_irreducible.merge(o.harmonic_irreducible);
  irreducible_count += o.irreducible_count;
}

void StatAccumulator::merge(StatAccumulator&& o) { merge(static_cast<const StatAccumulator&>(o)); }

StatAccumulator run_stats(const SiteTable& t, const StructuralConstants& sc,
                          const StatConfig& cfg, unsigned threads) {
  auto ctx = make_stat_context(t, sc, cfg);
  return enumerate_ideals(t, cfg.x, threads, [&] { return StatAccumulator(ctx); },
                          [](StatAccumulator& a, const FactorView& v) { a.add(v); });
}

// ---------------------------------------------------------------------------
// derived quantities

ResidueTable equidist(const StatAccumulator& acc, std::uint32_t m) {
  if (m == 0) throw InvalidArgument("modulus m must be at least 1");
  ResidueTable r;
  r.m = m;
  r.counts.assign(m, 0);
  for (std::size_t nu = 0; nu < acc.nu_hist.size(); ++nu) r.counts[nu % m] += acc.nu_hist[nu];
  const double n = static_cast<double>(acc.n_principal);
  for (auto c : r.counts) {
    r.deviation = std::max(r.deviation, std::abs(static_cast<double>(c) / n - 1.0 / m));
  }
  return r;
}

double exceptional_fraction(const StatAccumulator& acc) {
  if (!(acc.context().L3 > 0.0)) return 1.0;
  return static_cast<double>(acc.exceptional) / static_cast<double>(acc.n_principal);
}

std::vector<double> weber_check(const StatAccumulator& acc) {
  const auto& ctx = acc.context();
  const double h = static_cast<double>(ctx.sc->h());
  const double x = static_cast<double>(ctx.config.x);
  std::vector<double> out;
  for (auto c : acc.class_counts) out.push_back(static_cast<double>(c) * h / (ctx.table->psi * x));
  return out;
}

std::vector<double> class_densities(const StatAccumulator& acc) {
  const double x = static_cast<double>(acc.context().config.x);
  std::vector<double> out;
  for (auto c : acc.class_counts) out.push_back(static_cast<double>(c) / x);
  return out;
}

std::vector<double> landau_check(const SiteTable& t, std::uint64_t x) {
  const auto h = t.group.order();
  std::vector<HarmonicSum> sums(h);
  for (const auto& s : t.sites) {
    if (s.norm > x) break;
    sums[s.class_index].add(s.norm);
  }
  const double lx = std::log(static_cast<double>(x));
  const double L = lx > 1.0 ? std::log(lx) : kNaN;
  std::vector<double> out;
  for (const auto& s : sums) out.push_back(s.value() - L / static_cast<double>(h));
  return out;
}

GMean g_mean_check(const StatAccumulator& acc, std::size_t index) {
  const auto& ctx = acc.context();
  if (index >= ctx.config.descriptors.size()) throw InvalidArgument("no such descriptor");
  const auto& d = ctx.config.descriptors[index];
  const auto& t = *ctx.table;
  GMean g;
  g.descriptor = d.to_string();
  for (const auto& [id, e] : d.parts) {
    for (std::uint32_t k = 0; k < e; ++k) g.norm *= t.sites[id].norm;
  }
  g.G = G_factor(t, d);
  mpq_class total(0);
  const auto& patterns = acc.g_patterns[index];
  for (std::size_t mask = 0; mask < patterns.size(); ++mask) {
    if (!patterns[mask]) continue;
    mpq_class value(1);
    for (std::size_t j = 0; j < d.parts.size(); ++j) {
      const mpq_class inv(1, t.sites[d.parts[j].first].norm);
      const mpq_class gp = (mask >> j & 1) ? mpq_class(1 - inv) : mpq_class(-inv);
      value *= pow_q(gp, d.parts[j].second);
    }
    total += value * mpz_class(std::to_string(patterns[mask]));
  }
  g.measured = mpq_class(total / mpz_class(std::to_string(ctx.config.x))).get_d();
  g.predicted = t.psi / static_cast<double>(ctx.sc->h()) * g.G.get_d();
  return g;
}

double f_central_moment(const StatAccumulator& acc, unsigned k) {
  const auto& ctx = acc.context();
  const long double center =
      static_cast<long double>(kappa_mean(ctx.config.kappa).get_d()) * ctx.L;
  const long double den = ctx.kappa_denom.get_d();
  long double s = 0;
  for (std::size_t f = 0; f < acc.f_hist.size(); ++f) {
    if (!acc.f_hist[f]) continue;
    s += static_cast<long double>(acc.f_hist[f]) *
         powl_int(static_cast<long double>(f) / den - center, k);
  }
  return static_cast<double>(s / static_cast<long double>(acc.n_principal));
}

std::vector<MomentRow> f_moments(const StatAccumulator& acc, unsigned max_k) {
  const auto& ctx = acc.context();
  const double sigma2 = kappa_variance(ctx.config.kappa).get_d();
  std::vector<MomentRow> out;
  for (unsigned k = 1; k <= max_k; ++k) {
    MomentRow r;
    r.k = k;
    r.measured = f_central_moment(acc, k);
    r.target = gaussian_target(k, sigma2, ctx.L);
    r.ratio = r.target != 0.0 ? r.measured / r.target : kNaN;
    out.push_back(r);
  }
  return out;
}

std::vector<HistogramBin> z_histogram(const StatAccumulator& acc) {
  constexpr int kBins = 48;  // width 0.25 on [-6, 6]
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<HistogramBin> bins;
  bins.push_back({-inf, -6.0, 0});
  for (int i = 0; i < kBins; ++i) bins.push_back({-6.0 + 0.25 * i, -6.0 + 0.25 * (i + 1), 0});
  bins.push_back({6.0, inf, 0});
  const auto& ctx = acc.context();
  if (ctx.config.x < 16) return bins;
  for (std::size_t nu = 0; nu < acc.nu_hist.size(); ++nu) {
    if (!acc.nu_hist[nu]) continue;
    const double z = standardize(nu, *ctx.sc, static_cast<double>(ctx.config.x));
    std::size_t b;
    if (z < -6.0) {
      b = 0;
    } else if (z >= 6.0) {
      b = kBins + 1;
    } else {
      b = 1 + std::min<std::size_t>(kBins - 1, static_cast<std::size_t>((z + 6.0) / 0.25));
    }
    bins[b].count += acc.nu_hist[nu];
  }
  return bins;
}

StatReport make_report(const StatAccumulator& acc) {
  const auto& ctx = acc.context();
  const auto& sc = *ctx.sc;
  StatReport r;
  r.source = ctx.table->label;
  r.group = sc.group;
  r.D = sc.D;
  r.A = sc.A;
  r.B_squared = sc.B_squared;
  r.B = sc.B;
  r.psi = ctx.table->psi;
  r.x = ctx.config.x;
  r.L = ctx.L;
  r.n_ideals = acc.n_ideals;
  r.n_principal = acc.n_principal;

  const long double n = static_cast<long double>(acc.n_principal);
  long double s1 = 0, s2 = 0;
  for (std::size_t nu = 0; nu < acc.nu_hist.size(); ++nu) {
    s1 += static_cast<long double>(acc.nu_hist[nu]) * nu;
    s2 += static_cast<long double>(acc.nu_hist[nu]) * nu * nu;
  }
  const long double mean = s1 / n;
  r.mean_nu = static_cast<double>(mean);
  r.var_nu = static_cast<double>(s2 / n - mean * mean);

  if (r.x >= 16) {
    const double x = static_cast<double>(r.x);
    for (unsigned k = 1; k <= ctx.config.max_moment; ++k) {
      long double s = 0;
      for (std::size_t nu = 0; nu < acc.nu_hist.size(); ++nu) {
        if (!acc.nu_hist[nu]) continue;
        s += static_cast<long double>(acc.nu_hist[nu]) * powl_int(standardize(nu, sc, x), k);
      }
      r.standardized_moments[k] = static_cast<double>(s / n);
    }
    // Kolmogorov-Smirnov distance of the standardized values to N(0, 1).
    double ks = 0.0;
    std::uint64_t below = 0;
    for (std::size_t nu = 0; nu < acc.nu_hist.size(); ++nu) {
      if (!acc.nu_hist[nu]) continue;
      const double z = standardize(nu, sc, x);
      const double phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
      const double before = static_cast<double>(below) / static_cast<double>(n);
      below += acc.nu_hist[nu];
      const double after = static_cast<double>(below) / static_cast<double>(n);
      ks = std::max({ks, std::abs(before - phi), std::abs(after - phi)});
    }
    r.ks_distance = ks;
  } else {
    r.ks_distance = kNaN;
  }

  for (auto m : ctx.config.moduli) r.residue_counts[m] = equidist(acc, m);
  r.weber_ratios = weber_check(acc);
  r.class_densities = class_densities(acc);
  r.landau_deviations = landau_check(*ctx.table, r.x);
  r.exceptional_fraction = exceptional_fraction(acc);
  for (std::size_t d = 0; d < ctx.config.descriptors.size(); ++d) {
    r.g_mean_table.push_back(g_mean_check(acc, d));
  }
  r.harmonic = {acc.harmonic_principal.value(), acc.harmonic_irreducible.value(),
                acc.irreducible_count};
  r.histogram = z_histogram(acc);
  return r;
}

// ---------------------------------------------------------------------------
// output

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_report_json(std::ostream& os, const StatReport& r) {
  using json = nlohmann::ordered_json;
  json j;
  j["source"] = r.source;
  j["group"] = r.group.to_string();
  j["invariant_factors"] = std::vector<std::uint32_t>(r.group.invariant_factors().begin(),
                                                      r.group.invariant_factors().end());
  j["h"] = r.group.order();
  j["D"] = r.D;
  j["A"] = rational_string(r.A);
  j["B_squared"] = rational_string(r.B_squared);
  j["B"] = r.B;
  j["psi"] = r.psi;
  j["x"] = r.x;
  j["L"] = r.L;
  j["n_ideals"] = r.n_ideals;
  j["n_principal"] = r.n_principal;
  j["mean_nu"] = r.mean_nu;
  j["var_nu"] = r.var_nu;
  json moments = json::object();
  for (const auto& [k, v] : r.standardized_moments) moments[std::to_string(k)] = v;
  j["standardized_moments"] = moments;
  j["ks_distance"] = r.ks_distance;
  json residues = json::object();
  json deviations = json::object();
  for (const auto& [m, t] : r.residue_counts) {
    residues[std::to_string(m)] = t.counts;
    deviations[std::to_string(m)] = t.deviation;
  }
  j["residue_counts"] = residues;
  j["residue_deviation"] = deviations;
  j["weber_ratios"] = r.weber_ratios;
  j["class_densities"] = r.class_densities;
  j["landau_deviations"] = r.landau_deviations;
  j["exceptional_fraction"] = r.exceptional_fraction;
  json g = json::array();
  for (const auto& e : r.g_mean_table) {
    g.push_back({{"descriptor", e.descriptor},
                 {"norm", e.norm},
                 {"G", rational_string(e.G)},
                 {"measured", e.measured},
                 {"predicted", e.predicted}});
  }
  j["g_mean_table"] = g;
  j["harmonic"] = {{"principal", r.harmonic.principal},
                   {"irreducible", r.harmonic.irreducible},
                   {"irreducible_count", r.harmonic.irreducible_count}};
  json hist = json::array();
  for (const auto& b : r.histogram) {
    // JSON has no infinities; the tail edges are written as strings
    auto edge = [](double v) { return std::isinf(v) ? json(format_double(v)) : json(v); };
    hist.push_back({{"bin_low", edge(b.low)}, {"bin_high", edge(b.high)}, {"count", b.count}});
  }
  j["histogram"] = hist;
  os << j.dump(2) << '\n';
}

void write_histogram_csv(std::ostream& os, const std::vector<HistogramBin>& bins) {
  os << "bin_low,bin_high,count\n";
  for (const auto& b : bins) {
    os << format_double(b.low) << ',' << format_double(b.high) << ',' << b.count << '\n';
  }
}

}  // namespace irrdiv
