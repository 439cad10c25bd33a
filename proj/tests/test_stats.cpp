#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "doctest.h"
#include "irrdiv/stats.hpp"
#include "oracles.hpp"

using namespace irrdiv;

namespace {

struct Field {
  ClassGroup cg;
  SiteTable table;
  StructuralConstants sc;

  Field(std::int64_t d, std::uint64_t x)
      : cg(class_group(d)), table(field_site_table(cg, x)),
        sc(structural_constants(cg.group())) {}
};

const Field& minus5_1e6() {
  static const Field f(-5, 1'000'000);
  return f;
}

StatConfig config(const SiteTable& t, std::uint64_t x) {
  StatConfig c;
  c.x = x;
  c.moduli = {1, 2, 3};
  c.descriptors = default_descriptors(t);
  return c;
}

std::string report_json(const StatAccumulator& acc) {
  std::ostringstream os;
  write_report_json(os, make_report(acc));
  return os.str();
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("standardize") {
  auto z2 = structural_constants(GroupSpec::cyclic(2));
  const double x = 1e6;
  const double L = loglog(x);
  CHECK(L == doctest::Approx(2.6258).epsilon(1e-4));
  CHECK(standardize(10.0, z2, x) == doctest::Approx(6.074).epsilon(1e-3));
  const double centre = z2.A.get_d() * L * L;
  CHECK(standardize(centre, z2, x) == 0.0);
  double prev = -1e300;
  for (int nu = 0; nu < 40; ++nu) {
    const double z = standardize(nu, z2, x);
    CHECK(z > prev);
    prev = z;
  }

  auto triv = structural_constants(GroupSpec{});
  for (int w = 0; w < 8; ++w) {
    CHECK(standardize(w, triv, 1e5) ==
          doctest::Approx((w - loglog(1e5)) / std::sqrt(loglog(1e5))));
  }
  CHECK_THROWS_AS(standardize(1.0, z2, 15.9), InvalidArgument);
  CHECK_NOTHROW(standardize(1.0, z2, 16.0));
}

TEST_CASE("gaussian_target") {
  CHECK(gaussian_target(2, 0.5, 3.0) == doctest::Approx(1.5));
  CHECK(gaussian_target(4, 0.5, 3.0) == doctest::Approx(3 * 1.5 * 1.5));
  CHECK(gaussian_target(6, 0.5, 3.0) == doctest::Approx(15 * 1.5 * 1.5 * 1.5));
  for (unsigned k = 1; k <= 9; k += 2) CHECK(gaussian_target(k, 0.7, 2.0) == 0.0);
  for (unsigned k = 0; k <= 10; k += 2) CHECK(gaussian_target(k, 0.7, 2.0) > 0.0);
  CHECK(kappa_variance({0, 1}) == mpq_class(1, 2));
  CHECK(kappa_mean({0, mpq_class(1, 2), mpq_class(1, 2)}) == mpq_class(1, 3));
}

TEST_CASE("descriptors") {
  CHECK(IdealDescriptor::parse("1").parts.empty());
  auto d = IdealDescriptor::parse("p3*p0^2");
  CHECK(d.parts == std::vector<std::pair<std::uint64_t, std::uint32_t>>{{0, 2}, {3, 1}});
  CHECK(d.to_string() == "p0^2*p3");
  CHECK(IdealDescriptor::parse(d.to_string()) == d);
  for (const char* bad : {"", "p", "q1", "p1^0", "p1^", "p1*p1", "p1**p2", "p-1", "p1x"}) {
    CHECK_THROWS_AS(IdealDescriptor::parse(bad), InvalidArgument);
  }
}

TEST_CASE("G(r) examples and bounds") {
  Field f(-5, 1000);
  const auto& t = f.table;
  CHECK(G_factor(t, IdealDescriptor::parse("p0^2")) == mpq_class(1, 4));
  CHECK(G_factor(t, IdealDescriptor::parse("p0")) == 0);
  CHECK(G_factor(t, IdealDescriptor::parse("p1")) == 0);
  CHECK(G_factor(t, IdealDescriptor::parse("1")) == 1);
  CHECK(G_factor(t, IdealDescriptor::parse("p0^2*p1")) == 0);
  CHECK_THROWS_AS(G_factor(t, IdealDescriptor::parse("p100000")), InvalidArgument);

  for (std::uint64_t a = 0; a < 6; ++a) {
    for (std::uint32_t ea = 1; ea <= 5; ++ea) {
      for (std::uint64_t b = a + 1; b < 7; ++b) {
        for (std::uint32_t eb = 0; eb <= 4; ++eb) {
          IdealDescriptor r;
          r.parts.push_back({a, ea});
          if (eb) r.parts.push_back({b, eb});
          const auto g = G_factor(t, r);
          const bool squarefull = ea >= 2 && (eb == 0 || eb >= 2);
          if (!squarefull) CHECK(g == 0);
          CHECK(abs(g) <= mpq_class(1, radical_norm(t, r)));
        }
      }
    }
  }
}

TEST_CASE("accumulated quantities match direct per-record computation") {
  for (std::int64_t d : {-5, -23, -14}) {
    Field f(d, 10'000);
    auto cfg = config(f.table, 10'000);
    cfg.descriptors.push_back(IdealDescriptor::parse("p0*p2^3"));
    auto acc = run_stats(f.table, f.sc, cfg);
    auto rows = enumerate_principal(f.table, f.sc, 10'000);
    REQUIRE(acc.n_principal == rows.size());

    const double L = loglog(1e4);
    const auto h = f.sc.h();
    const double mu = kappa_mean(f.sc.kappa).get_d() * L;
    double m2 = 0, m3 = 0;
    for (const auto& r : rows) {
      double fv = 0;
      for (std::size_t i = 0; i < h; ++i) fv += f.sc.kappa[i].get_d() * r.record.omega[i];
      m2 += (fv - mu) * (fv - mu);
      m3 += (fv - mu) * (fv - mu) * (fv - mu);
    }
    const double n = static_cast<double>(rows.size());
    CHECK(f_central_moment(acc, 2) == doctest::Approx(m2 / n).epsilon(1e-12));
    CHECK(f_central_moment(acc, 3) == doctest::Approx(m3 / n).epsilon(1e-12));

    for (std::size_t di = 0; di < cfg.descriptors.size(); ++di) {
      const auto& desc = cfg.descriptors[di];
      double sum = 0;
      for (const auto& r : rows) {
        double prod = 1;
        for (const auto& [id, e] : desc.parts) {
          const double inv = 1.0 / static_cast<double>(f.table.sites[id].norm);
          bool divides = false;
          for (const auto& fe : r.factorization.entries) divides |= fe.site_id == id;
          prod *= std::pow(divides ? 1 - inv : -inv, e);
        }
        sum += prod;
      }
      CHECK(g_mean_check(acc, di).measured == doctest::Approx(sum / 1e4).epsilon(1e-12));
    }

    // equidist partitions the principal ideals
    for (std::uint32_t m : {1u, 2u, 3u, 5u}) {
      auto e = equidist(acc, m);
      CHECK(e.counts.size() == m);
      CHECK(std::accumulate(e.counts.begin(), e.counts.end(), std::uint64_t{0}) ==
            acc.n_principal);
      std::vector<std::uint64_t> direct(m, 0);
      for (const auto& r : rows) ++direct[r.record.nu % m];
      CHECK(e.counts == direct);
    }
    CHECK(equidist(acc, 1).deviation == 0.0);
  }
}

TEST_CASE("h = 1 equidistribution of omega mod 2 against a direct sieve") {
  SynthModel m{GroupSpec{}, 3, {}};
  const std::uint64_t x = 1'000'000;
  auto t = synth_site_table(m, x);
  auto sc = structural_constants(m.group);
  auto acc = run_stats(t, sc, config(t, x));
  // omega(n) by an additive sieve
  std::vector<std::uint8_t> w(x + 1, 0);
  for (std::uint64_t p = 2; p <= x; ++p) {
    if (w[p]) continue;
    for (std::uint64_t k = p; k <= x; k += p) ++w[k];
  }
  std::array<std::uint64_t, 2> counts{};
  for (std::uint64_t n = 1; n <= x; ++n) ++counts[w[n] % 2];
  auto e = equidist(acc, 2);
  CHECK(e.counts[0] == counts[0]);
  CHECK(e.counts[1] == counts[1]);
  CHECK(e.deviation < 0.01);

  Field gauss(-1, x);
  auto ga = run_stats(gauss.table, gauss.sc, config(gauss.table, x));
  CHECK(equidist(ga, 2).deviation < 0.01);
  CHECK(exceptional_fraction(ga) < 0.9);
}

TEST_CASE("exceptional fraction edge cases") {
  Field f(-5, 100);
  auto small = run_stats(f.table, f.sc, config(f.table, 15));
  CHECK(exceptional_fraction(small) == 1.0);
  auto at16 = run_stats(f.table, f.sc, config(f.table, 16));
  // 11 principal ideals of norm <= 16; L3 ~ 0.02 forces squarefree and
  // omega_i <= 1, leaving only (1) and (sqrt(-5)) unexceptional
  CHECK(at16.n_principal == 11);
  CHECK(exceptional_fraction(at16) == doctest::Approx(9.0 / 11.0));
  CHECK(exceptional_fraction(at16) >= 0.0);
}

TEST_CASE("Weber and Landau in Q(sqrt(-5)) at x = 1e6") {
  const auto& f = minus5_1e6();
  auto acc = run_stats(f.table, f.sc, config(f.table, 1'000'000));
  CHECK(f.cg.field().psi == doctest::Approx(0.702481).epsilon(1e-6));
  // Per-class density is Psi itself; the Psi x / h normalization reads ~h.
  for (double d : class_densities(acc)) CHECK(std::abs(d / f.cg.field().psi - 1) < 0.02);
  auto weber = weber_check(acc);
  CHECK(weber[0] == doctest::Approx(1.99996).epsilon(1e-4));
  CHECK(weber[1] == doctest::Approx(2.00004).epsilon(1e-4));

  // Landau deviations drift less than 0.05 per decade
  std::vector<std::vector<double>> dev;
  for (std::uint64_t x : {10'000ULL, 100'000ULL, 1'000'000ULL}) dev.push_back(landau_check(f.table, x));
  for (std::size_t i = 0; i + 1 < dev.size(); ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      MESSAGE("landau drift class ", c + 1, ": ", dev[i + 1][c] - dev[i][c]);
      CHECK(std::abs(dev[i + 1][c] - dev[i][c]) < 0.05);
    }
  }
}

TEST_CASE("G(r) means in Q(sqrt(-5)) at x = 1e6") {
  const auto& f = minus5_1e6();
  auto acc = run_stats(f.table, f.sc, config(f.table, 1'000'000));
  auto unit = g_mean_check(acc, 0);
  auto p2sq = g_mean_check(acc, 1);
  auto p3 = g_mean_check(acc, 2);
  CHECK(unit.descriptor == "1");
  CHECK(p2sq.descriptor == "p0^2");
  CHECK(p2sq.G == mpq_class(1, 4));
  CHECK(p3.G == 0);
  // g_{p2}^2 = 1/4 identically, so the measured mean is a quarter of the
  // principal density.
  CHECK(p2sq.measured == doctest::Approx(unit.measured / 4));
  CHECK(std::abs(p3.measured) < 0.02);
  CHECK(std::abs(p2sq.measured - f.cg.field().psi * 0.25) < 0.02);
}

TEST_CASE("merging shards in any grouping gives identical reports") {
  Field f(-23, 30'000);
  auto cfg = config(f.table, 30'000);
  auto ctx = make_stat_context(f.table, f.sc, cfg);
  auto tasks = plan_census(f.table, 30'000, 6);
  REQUIRE(tasks.size() > 3);
  std::vector<StatAccumulator> shards;
  for (const auto& task : tasks) {
    StatAccumulator a(ctx);
    run_census_task(f.table, 30'000, task, [&](const FactorView& v) { a.add(v); });
    shards.push_back(std::move(a));
  }
  StatAccumulator forward(ctx), backward(ctx), pairs(ctx);
  for (const auto& s : shards) forward.merge(s);
  for (std::size_t i = shards.size(); i-- > 0;) backward.merge(shards[i]);
  for (std::size_t i = 0; i < shards.size(); i += 2) {
    StatAccumulator p(ctx);
    p.merge(shards[i]);
    if (i + 1 < shards.size()) p.merge(shards[i + 1]);
    pairs.merge(std::move(p));
  }
  const auto serial = report_json(run_stats(f.table, f.sc, cfg, 1));
  CHECK(report_json(forward) == serial);
  CHECK(report_json(backward) == serial);
  CHECK(report_json(pairs) == serial);
  CHECK(report_json(run_stats(f.table, f.sc, cfg, 8)) == serial);

  StatAccumulator stranger(make_stat_context(f.table, f.sc, cfg));
  CHECK_THROWS_AS(forward.merge(stranger), InvalidArgument);
}

TEST_CASE("report and histogram outputs") {
  Field f(-5, 100'000);
  auto acc = run_stats(f.table, f.sc, config(f.table, 100'000));
  auto r = make_report(acc);
  CHECK(r.n_principal == acc.n_principal);
  CHECK(r.ks_distance >= 0.0);
  CHECK(r.ks_distance <= 1.0);
  CHECK(r.exceptional_fraction >= 0.0);
  CHECK(r.exceptional_fraction <= 1.0);
  CHECK(r.histogram.size() == 50);
  std::uint64_t total = 0;
  for (const auto& b : r.histogram) total += b.count;
  CHECK(total == r.n_principal);
  CHECK(r.standardized_moments.size() == 4);

  std::ostringstream js;
  write_report_json(js, r);
  auto j = nlohmann::json::parse(js.str());
  for (const char* key : {"x", "n_principal", "mean_nu", "var_nu", "standardized_moments",
                          "ks_distance", "residue_counts", "weber_ratios",
                          "landau_deviations", "exceptional_fraction", "g_mean_table"}) {
    CHECK_MESSAGE(j.contains(key), key);
  }
  CHECK(j["A"] == "1/8");
  CHECK(j["residue_counts"]["2"].size() == 2);
  CHECK(j["g_mean_table"][1]["G"] == "1/4");
  CHECK(j["histogram"][0]["bin_low"] == "-inf");

  std::ostringstream csv;
  write_histogram_csv(csv, r.histogram);
  const auto text = csv.str();
  CHECK(text.rfind("bin_low,bin_high,count\n-inf,-6,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 51);
  CHECK(text.find("\n-0.25,0,") != std::string::npos);

  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("kappa validation") {
  Field f(-5, 100);
  auto cfg = config(f.table, 100);
  cfg.kappa = {0, 0};
  CHECK_THROWS_AS(run_stats(f.table, f.sc, cfg), InvalidArgument);
  cfg.kappa = {1, -1};
  CHECK_THROWS_AS(run_stats(f.table, f.sc, cfg), InvalidArgument);
  cfg.kappa = {1};
  CHECK_THROWS_AS(run_stats(f.table, f.sc, cfg), InvalidArgument);
  cfg.kappa = {mpq_class(1, 3), mpq_class(1, 2)};
  CHECK_NOTHROW(run_stats(f.table, f.sc, cfg));
  cfg.kappa.clear();
  cfg.moduli = {0};
  CHECK_THROWS_AS(run_stats(f.table, f.sc, cfg), InvalidArgument);
}

TEST_CASE("trivial group with kappa = (1) gives classical omega moments") {
  SynthModel m{GroupSpec{}, 11, {}};
  auto t = synth_site_table(m, 100'000);
  auto sc = structural_constants(m.group);
  auto acc = run_stats(t, sc, config(t, 100'000));
  const double L = loglog(1e5);
  double s1 = 0, s2 = 0;
  for (std::uint64_t n = 1; n <= 100'000; ++n) {
    const double w = oracle::small_omega(n) - L;
    s1 += w;
    s2 += w * w;
  }
  CHECK(f_central_moment(acc, 1) == doctest::Approx(s1 / 1e5).epsilon(1e-12));
  CHECK(f_central_moment(acc, 2) == doctest::Approx(s2 / 1e5).epsilon(1e-12));
}

}  // TEST_SUITE
