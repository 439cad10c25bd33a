#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "irrdiv/abelian.hpp"

namespace irrdiv::cli {

enum class Subcommand { constants, census, ek, equidist, moments, check, selftest };
enum class Format { csv, json };

/// Malformed command line; maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// --help was requested; carries the help text (exit status 0).
struct HelpRequest {
  std::string text;
};

struct Command {
  Subcommand subcommand = Subcommand::selftest;
  std::optional<std::int64_t> field;  // --field d
  std::optional<GroupSpec> group;     // --group: synthetic stream (or a bare group for constants)
  std::uint64_t x = 0;                // --x, 0 when unused
  std::uint32_t m = 2;                // --m (equidist)
  unsigned k = 8;                     // --k (moments)
  std::optional<std::uint64_t> seed;  // --seed (synthetic streams only)
  std::string out;                    // --out, empty for stdout
  Format format = Format::json;
  unsigned threads = 1;
};

std::string subcommand_name(Subcommand s);

/// Parses argv (without the program name). Throws UsageError or HelpRequest.
Command parse(const std::vector<std::string>& args);

/// "2", "2,2", "1" (trivial group).
GroupSpec parse_group(const std::string& text);
/// Decimal integer or "1eN" style power-of-ten shorthand such as "1e6" or "5e4".
std::uint64_t parse_bound(const std::string& text);

/// Executes a parsed command. Output goes to cmd.out or, if empty, to `out`;
/// diagnostics go to `err`. Returns the exit status; domain errors propagate.
int run(const Command& cmd, std::ostream& out, std::ostream& err);

/// parse + run with the exit-status mapping 0 success, 1 domain error,
/// 2 usage error.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct SelftestRow {
  std::int64_t d = 0;
  std::uint64_t ideals = 0;     // all ideals of norm <= max_norm
  std::uint64_t principal = 0;  // principal ones, each checked
  std::uint64_t mismatches = 0;
};

/// Oracle-equivalence sweep over Q(sqrt(-5)), Q(sqrt(-23)), Q(sqrt(-14)) up
/// to `max_norm`: nu three ways, delta exact vs. divisor listing, the
/// per-type omega/Omega sandwich, the delta bounds, irreducible <=> delta = 2,
/// and the ideal count against sum_m chi(m) floor(x/m).
std::vector<SelftestRow> selftest(std::uint64_t max_norm, unsigned threads);

}  // namespace irrdiv::cli
