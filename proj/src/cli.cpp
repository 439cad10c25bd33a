#include "irrdiv/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "irrdiv/arith.hpp"
#include "irrdiv/census.hpp"
#include "irrdiv/quadratic.hpp"
#include "irrdiv/stats.hpp"
#include "irrdiv/synth.hpp"

namespace irrdiv::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kSelftestNorm = 10'000;

// which flags a subcommand accepts
enum Flag : unsigned {
  kSource = 1,  // --field / --group
  kX = 2,
  kSeed = 4,
  kM = 8,
  kK = 16,
  kThreads = 32,
};

struct SubcommandInfo {
  Subcommand sub;
  const char* name;
  const char* help;
  unsigned flags;
};

constexpr SubcommandInfo kSubcommands[] = {
    {Subcommand::constants, "constants", "Structural constants D, types, kappa, A, B",
     kSource},
    {Subcommand::census, "census", "Per principal ideal nu, delta, irreducibility",
     kSource | kX | kSeed | kThreads},
    {Subcommand::ek, "ek", "Standardized nu statistics and z histogram",
     kSource | kX | kSeed | kThreads},
    {Subcommand::equidist, "equidist", "Residues of nu modulo m",
     kSource | kX | kSeed | kM | kThreads},
    {Subcommand::moments, "moments", "Central moments of f against Gaussian targets",
     kSource | kX | kSeed | kK | kThreads},
    {Subcommand::check, "check", "Weber, Landau and G(r) mean checks",
     kSource | kX | kSeed | kThreads},
    {Subcommand::selftest, "selftest", "Oracle-equivalence sweep up to norm 10^4",
     kThreads},
};

std::string json_rational(const mpq_class& q) { return rational_string(q); }

json rational_array(const std::vector<mpq_class>& v) {
  json a = json::array();
  for (const auto& q : v) a.push_back(json_rational(q));
  return a;
}

json factors_json(const GroupSpec& g) {
  return std::vector<std::uint32_t>(g.invariant_factors().begin(), g.invariant_factors().end());
}

std::string entries_descriptor(std::span<const FactorEntry> entries) {
  IdealDescriptor d;
  for (const auto& e : entries) d.parts.push_back({e.site_id, e.exponent});
  return d.to_string();
}

// Output sink: cmd.out when set, otherwise the stream handed to run().
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw std::runtime_error("cannot open output file " + path);
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }
  void finish(const std::string& path) {
    os_->flush();
    if (!*os_) throw std::runtime_error("write failed" + (path.empty() ? "" : " for " + path));
  }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open output file " + path);
  f << text;
  if (!f.flush()) throw std::runtime_error("write failed for " + path);
}

// "rpt.json" -> "rpt.hist.csv", "dir/out" -> "dir/out.hist.csv"
std::string histogram_path(const std::string& out) {
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash + 1);
  return (has_ext ? out.substr(0, dot) : out) + ".hist.csv";
}

struct Source {
  std::optional<ClassGroup> cg;
  SiteTable table;
  StructuralConstants sc;
};

std::unique_ptr<Source> make_source(const Command& cmd) {
  auto s = std::make_unique<Source>();
  if (cmd.field) {
    s->cg = class_group(*cmd.field);
    s->table = field_site_table(*s->cg, cmd.x);
    s->sc = structural_constants(s->cg->group());
  } else {
    SynthModel m{*cmd.group, *cmd.seed, {}};
    s->table = synth_site_table(m, cmd.x);
    s->sc = structural_constants(m.group);
  }
  return s;
}

StatConfig stat_config(const Source& s, const Command& cmd) {
  StatConfig c;
  c.x = cmd.x;
  c.descriptors = default_descriptors(s.table);
  return c;
}

json source_json(const Source& s, std::uint64_t x) {
  return {{"source", s.table.label},
          {"group", s.sc.group.to_string()},
          {"invariant_factors", factors_json(s.sc.group)},
          {"h", s.sc.h()},
          {"psi", s.table.psi},
          {"x", x}};
}

void emit_json(std::ostream& os, const json& j) { os << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// subcommands

void run_constants(const Command& cmd, std::ostream& os) {
  std::string label;
  StructuralConstants sc;
  if (cmd.field) {
    auto cg = class_group(*cmd.field);
    sc = structural_constants(cg.group());
    label = "Q(sqrt(" + std::to_string(cg.field().d) + "))";
  } else {
    sc = structural_constants(*cmd.group);
    label = sc.group.to_string();
  }
  if (cmd.format == Format::json) {
    json types = json::array(), maximal = json::array();
    for (const auto& t : sc.types) types.push_back(t.t);
    for (const auto& t : sc.maximal_types) maximal.push_back(t.t);
    emit_json(os, {{"source", label},
                   {"group", sc.group.to_string()},
                   {"invariant_factors", factors_json(sc.group)},
                   {"h", sc.h()},
                   {"D", sc.D},
                   {"A", json_rational(sc.A)},
                   {"B_squared", json_rational(sc.B_squared)},
                   {"B", sc.B},
                   {"kappa", rational_array(sc.kappa)},
                   {"types", types},
                   {"maximal_types", maximal}});
    return;
  }
  os << "key,value\n";
  os << "group," << sc.group.to_string() << '\n';
  os << "h," << sc.h() << '\n';
  os << "D," << sc.D << '\n';
  os << "A," << json_rational(sc.A) << '\n';
  os << "B_squared," << json_rational(sc.B_squared) << '\n';
  os << "B," << format_double(sc.B) << '\n';
  for (std::size_t i = 0; i < sc.kappa.size(); ++i) {
    os << "kappa_" << i + 1 << ',' << json_rational(sc.kappa[i]) << '\n';
  }
  os << "types," << sc.types.size() << '\n';
  os << "maximal_types," << sc.maximal_types.size() << '\n';
}

void run_census(const Command& cmd, std::ostream& os) {
  auto s = make_source(cmd);
  const auto rows = enumerate_principal(s->table, s->sc, cmd.x, cmd.threads);
  if (cmd.format == Format::csv) {
    write_census_csv(os, rows, s->sc.h());
    return;
  }
  json j = source_json(*s, cmd.x);
  json arr = json::array();
  for (const auto& row : rows) {
    const auto& r = row.record;
    arr.push_back({{"norm", r.norm},
                   {"class", r.class_index + 1},
                   {"factorization", entries_descriptor(row.factorization.entries)},
                   {"omega", r.omega},
                   {"Omega", r.Omega},
                   {"nu", r.nu},
                   {"delta", r.delta},
                   {"is_irreducible", r.is_irreducible},
                   {"squarefull_norm", r.squarefull_norm}});
  }
  j["rows"] = std::move(arr);
  emit_json(os, j);
}

void run_ek(const Command& cmd, std::ostream& os) {
  auto s = make_source(cmd);
  const auto report = make_report(run_stats(s->table, s->sc, stat_config(*s, cmd), cmd.threads));
  if (cmd.format == Format::csv) {
    write_histogram_csv(os, report.histogram);
    return;
  }
  write_report_json(os, report);
  if (!cmd.out.empty()) {
    std::ostringstream hist;
    write_histogram_csv(hist, report.histogram);
    write_file(histogram_path(cmd.out), hist.str());
  }
}

void run_equidist(const Command& cmd, std::ostream& os) {
  auto s = make_source(cmd);
  auto cfg = stat_config(*s, cmd);
  cfg.moduli = {cmd.m};
  const auto acc = run_stats(s->table, s->sc, cfg, cmd.threads);
  const auto t = equidist(acc, cmd.m);
  const double n = static_cast<double>(acc.n_principal);
  if (cmd.format == Format::csv) {
    os << "residue,count,fraction\n";
    for (std::uint32_t a = 0; a < t.m; ++a) {
      os << a << ',' << t.counts[a] << ',' << format_double(t.counts[a] / n) << '\n';
    }
    return;
  }
  json j = source_json(*s, cmd.x);
  j["n_principal"] = acc.n_principal;
  j["m"] = t.m;
  j["counts"] = t.counts;
  std::vector<double> fractions;
  for (auto c : t.counts) fractions.push_back(c / n);
  j["fractions"] = fractions;
  j["deviation"] = t.deviation;
  emit_json(os, j);
}

void run_moments(const Command& cmd, std::ostream& os) {
  auto s = make_source(cmd);
  const auto acc = run_stats(s->table, s->sc, stat_config(*s, cmd), cmd.threads);
  const auto rows = f_moments(acc, cmd.k);
  if (cmd.format == Format::csv) {
    os << "k,measured,target,ratio\n";
    for (const auto& r : rows) {
      os << r.k << ',' << format_double(r.measured) << ',' << format_double(r.target) << ','
         << format_double(r.ratio) << '\n';
    }
    return;
  }
  json j = source_json(*s, cmd.x);
  j["n_principal"] = acc.n_principal;
  j["L"] = acc.context().L;
  j["kappa"] = rational_array(s->sc.kappa);
  j["kappa_mean"] = json_rational(kappa_mean(s->sc.kappa));
  j["kappa_variance"] = json_rational(kappa_variance(s->sc.kappa));
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"k", r.k}, {"measured", r.measured}, {"target", r.target}, {"ratio", r.ratio}});
  }
  j["moments"] = std::move(arr);
  emit_json(os, j);
}

void run_check(const Command& cmd, std::ostream& os) {
  auto s = make_source(cmd);
  const auto cfg = stat_config(*s, cmd);
  const auto acc = run_stats(s->table, s->sc, cfg, cmd.threads);
  const auto weber = weber_check(acc);
  const auto density = class_densities(acc);
  const auto landau = landau_check(s->table, cmd.x);
  std::vector<GMean> g;
  for (std::size_t i = 0; i < cfg.descriptors.size(); ++i) g.push_back(g_mean_check(acc, i));
  const double h = static_cast<double>(s->sc.h());

  if (cmd.format == Format::csv) {
    os << "check,item,measured,expected\n";
    for (std::size_t i = 0; i < weber.size(); ++i) {
      os << "weber,class_" << i + 1 << ',' << format_double(weber[i]) << ",1\n";
    }
    for (std::size_t i = 0; i < density.size(); ++i) {
      os << "density,class_" << i + 1 << ',' << format_double(density[i]) << ','
         << format_double(s->table.psi / h) << '\n';
    }
    for (std::size_t i = 0; i < landau.size(); ++i) {
      os << "landau,class_" << i + 1 << ',' << format_double(landau[i]) << ",0\n";
    }
    for (const auto& e : g) {
      os << "g_mean," << e.descriptor << ',' << format_double(e.measured) << ','
         << format_double(e.predicted) << '\n';
    }
    return;
  }
  json j = source_json(*s, cmd.x);
  j["n_ideals"] = acc.n_ideals;
  j["n_principal"] = acc.n_principal;
  j["weber_ratios"] = weber;
  j["class_densities"] = density;
  j["landau_deviations"] = landau;
  json arr = json::array();
  for (const auto& e : g) {
    arr.push_back({{"descriptor", e.descriptor},
                   {"norm", e.norm},
                   {"G", json_rational(e.G)},
                   {"measured", e.measured},
                   {"predicted", e.predicted}});
  }
  j["g_mean_table"] = std::move(arr);
  emit_json(os, j);
}

int run_selftest(const Command& cmd, std::ostream& os, std::ostream& err) {
  const auto rows = selftest(kSelftestNorm, cmd.threads);
  std::uint64_t total = 0;
  for (const auto& r : rows) {
    total += r.mismatches;
    err << "selftest d=" << r.d << " ideals=" << r.ideals << " principal=" << r.principal
        << " mismatches=" << r.mismatches << '\n';
  }
  if (cmd.format == Format::csv) {
    os << "field,ideals,principal,mismatches\n";
    for (const auto& r : rows) {
      os << r.d << ',' << r.ideals << ',' << r.principal << ',' << r.mismatches << '\n';
    }
  } else {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"field", r.d},
                     {"ideals", r.ideals},
                     {"principal", r.principal},
                     {"mismatches", r.mismatches}});
    }
    emit_json(os, {{"max_norm", kSelftestNorm}, {"fields", arr}, {"mismatches", total}});
  }
  return total == 0 ? 0 : 1;
}

std::uint64_t binom(std::uint32_t n, std::uint32_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint32_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct Count {
  std::uint64_t n = 0;
  void merge(Count&& o) { n += o.n; }
};

}  // namespace

// ---------------------------------------------------------------------------

std::string subcommand_name(Subcommand s) {
  for (const auto& info : kSubcommands) {
    if (info.sub == s) return info.name;
  }
  return "?";
}

GroupSpec parse_group(const std::string& text) {
  std::vector<std::uint32_t> factors;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    const std::string part = text.substr(pos, comma - pos);
    std::uint32_t v = 0;
    auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc{} || end != part.data() + part.size() || v == 0) {
      throw UsageError("--group: expected invariant factors like 2 or 2,2, got '" + text + "'");
    }
    factors.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (factors == std::vector<std::uint32_t>{1}) return GroupSpec{};
  return GroupSpec(std::move(factors));
}

std::uint64_t parse_bound(const std::string& text) {
  const auto e = text.find_first_of("eE");
  auto digits = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) {
      throw UsageError("--x: expected an integer such as 1000000 or 1e6, got '" + text + "'");
    }
    return v;
  };
  const std::string_view all(text);
  std::uint64_t v = digits(all.substr(0, e));
  if (e != std::string::npos) {
    const auto exp = digits(all.substr(e + 1));
    for (std::uint64_t i = 0; i < exp; ++i) {
      if (v > std::numeric_limits<std::uint64_t>::max() / 10) {
        throw UsageError("--x: value out of range: " + text);
      }
      v *= 10;
    }
  }
  if (v < 1) throw UsageError("--x must be at least 1");
  return v;
}

Command parse(const std::vector<std::string>& args) {
  CLI::App app{"Irreducible-divisor census and statistics for imaginary quadratic fields",
               "irrdiv"};
  app.require_subcommand(1);

  std::int64_t field = 0;
  std::string group, x, out, format;
  std::uint32_t m = 2;
  unsigned k = 8, threads = 1;
  std::uint64_t seed = 0;

  std::vector<std::pair<CLI::App*, const SubcommandInfo*>> subs;
  for (const auto& info : kSubcommands) {
    auto* s = app.add_subcommand(info.name, info.help);
    s->allow_extras();
    if (info.flags & kSource) {
      auto* f = s->add_option("--field", field, "Imaginary quadratic field Q(sqrt(d)), d < 0");
      auto* g = s->add_option("--group", group,
                              "Synthetic stream over a group given by invariant factors, e.g. 2 or 2,2");
      f->excludes(g);
    }
    if (info.flags & kX) s->add_option("--x", x, "Norm bound, e.g. 100000 or 1e5")->required();
    if (info.flags & kSeed) s->add_option("--seed", seed, "Seed for synthetic streams");
    if (info.flags & kM) s->add_option("--m", m, "Modulus")->check(CLI::Range(1u, 1'000'000u));
    if (info.flags & kK) s->add_option("--k", k, "Largest moment (<= 8)")->check(CLI::Range(1u, 8u));
    s->add_option("--out", out, "Output file (default: stdout)");
    s->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    if (info.flags & kThreads) {
      s->add_option("--threads", threads, "Census worker threads")->check(CLI::Range(1u, 1024u));
    }
    subs.push_back({s, &info});
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::ostringstream help;
      app.exit(e, help, help);
      throw HelpRequest{help.str()};
    }
    throw UsageError(e.what());
  }

  Command cmd;
  const SubcommandInfo* info = nullptr;
  CLI::App* sub = nullptr;
  for (const auto& [s, i] : subs) {
    if (s->parsed()) sub = s, info = i;
  }
  if (const auto extra = sub->remaining(); !extra.empty()) {
    std::string list;
    for (const auto& a : extra) list += (list.empty() ? "" : " ") + a;
    throw UsageError(std::string(info->name) + ": unexpected argument(s): " + list);
  }
  cmd.subcommand = info->sub;
  cmd.out = out;
  cmd.threads = threads;
  cmd.m = m;
  cmd.k = k;
  const bool has_format = sub->count("--format") > 0;
  cmd.format = has_format ? (format == "csv" ? Format::csv : Format::json)
                          : (cmd.subcommand == Subcommand::census ? Format::csv : Format::json);

  if (info->flags & kSource) {
    const bool has_field = sub->count("--field") > 0, has_group = sub->count("--group") > 0;
    if (!has_field && !has_group) {
      throw UsageError(std::string(info->name) + ": one of --field or --group is required");
    }
    if (has_field) cmd.field = field;
    if (has_group) cmd.group = parse_group(group);
  }
  if (info->flags & kX) cmd.x = parse_bound(x);
  if (info->flags & kSeed) {
    const bool has_seed = sub->count("--seed") > 0;
    if (cmd.group && !has_seed) {
      throw UsageError("--seed is required for synthetic streams (--group)");
    }
    if (cmd.field && has_seed) throw UsageError("--seed applies only to --group streams");
    if (has_seed) cmd.seed = seed;
  }
  return cmd;
}

int run(const Command& cmd, std::ostream& out, std::ostream& err) {
  Sink sink(cmd.out, out);
  auto& os = sink.stream();
  int status = 0;
  switch (cmd.subcommand) {
    case Subcommand::constants: run_constants(cmd, os); break;
    case Subcommand::census: run_census(cmd, os); break;
    case Subcommand::ek: run_ek(cmd, os); break;
    case Subcommand::equidist: run_equidist(cmd, os); break;
    case Subcommand::moments: run_moments(cmd, os); break;
    case Subcommand::check: run_check(cmd, os); break;
    case Subcommand::selftest: status = run_selftest(cmd, os, err); break;
  }
  sink.finish(cmd.out);
  return status;
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Command cmd;
  try {
    cmd = parse(args);
  } catch (const HelpRequest& h) {
    out << h.text;
    return 0;
  } catch (const UsageError& e) {
    err << "irrdiv: usage error: " << e.what() << "\nRun with --help for more information.\n";
    return 2;
  } catch (const std::exception& e) {
    // domain validation during parsing, e.g. a group that is not a divisor chain
    err << "irrdiv: error: " << e.what() << '\n';
    return 1;
  }
  try {
    return run(cmd, out, err);
  } catch (const std::exception& e) {
    err << "irrdiv: error: " << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// selftest

std::vector<SelftestRow> selftest(std::uint64_t max_norm, unsigned threads) {
  std::vector<SelftestRow> out;
  for (std::int64_t d : {-5, -23, -14}) {
    SelftestRow row;
    row.d = d;
    const auto cg = class_group(d);
    const auto table = field_site_table(cg, max_norm);
    const auto sc = structural_constants(cg.group());
    const auto h = sc.h();

    row.ideals = enumerate_ideals(
                     table, max_norm, threads, [] { return Count{}; },
                     [](Count& c, const FactorView&) { ++c.n; })
                     .n;
    std::int64_t expected = 0;
    for (std::uint64_t n = 1; n <= max_norm; ++n) {
      expected += arith::kronecker(cg.field().disc, static_cast<std::int64_t>(n)) *
                  static_cast<std::int64_t>(max_norm / n);
    }
    if (static_cast<std::int64_t>(row.ideals) != expected) ++row.mismatches;

    const auto rows = enumerate_principal(table, sc, max_norm, threads);
    row.principal = rows.size();
    for (const auto& cr : rows) {
      const auto& f = cr.factorization;
      const auto& r = cr.record;
      bool ok = r.nu == nu_bruteforce(f, sc.group) && r.nu == nu_squarefull_formula(f, sc) &&
                r.delta == delta_bruteforce(f, sc.group);
      std::uint32_t len = 0;
      for (auto e : r.Omega) len += e;
      ok = ok && delta_lower_bound(r, h) <= r.delta && r.delta <= (std::uint64_t{1} << len);
      if (len > 0) ok = ok && r.is_irreducible == (r.delta == 2);
      for (std::size_t ti = 0; ti < sc.types.size(); ++ti) {
        std::uint64_t lower = 1, upper = 1;
        for (std::size_t i = 0; i < h; ++i) {
          lower *= binom(r.omega[i], sc.types[ti].t[i]);
          upper *= binom(r.Omega[i], sc.types[ti].t[i]);
        }
        ok = ok && lower <= r.nu_by_type[ti] && r.nu_by_type[ti] <= upper;
      }
      if (!ok) ++row.mismatches;
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace irrdiv::cli
