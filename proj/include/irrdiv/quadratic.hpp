#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <queue>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "irrdiv/abelian.hpp"
#include "irrdiv/arith.hpp"

namespace irrdiv {

/// Imaginary quadratic field Q(sqrt(d)), d < 0 squarefree.
struct FieldSpec {
  std::int64_t d = -1;
  std::int64_t disc = -4;  // fundamental discriminant
  int w = 4;               // roots of unity
  std::uint64_t h = 1;     // class number
  // Weber density Psi = psi_coeff * pi / sqrt(|disc|), psi_coeff = 2 / w.
  mpq_class psi_coeff;
  double psi = 0.0;
  int degree = 2;
  int r1 = 0;
  int r2 = 1;
  double regulator = 1.0;
};

/// Positive definite binary quadratic form a x^2 + b xy + c y^2.
struct QuadForm {
  std::int64_t a = 1, b = 0, c = 1;

  std::int64_t discriminant() const { return b * b - 4 * a * c; }
  bool is_reduced() const;
  auto operator<=>(const QuadForm&) const = default;
};

std::ostream& operator<<(std::ostream& os, const QuadForm& f);

/// Unique reduced form equivalent to f: |b| <= a <= c, b >= 0 if |b| = a or
/// a = c.
QuadForm reduce(QuadForm f);

/// Dirichlet composition of two primitive forms of equal discriminant,
/// followed by reduction.
QuadForm compose(const QuadForm& f, const QuadForm& g);

struct QuadraticLimits {
  std::uint64_t max_abs_disc = 10'000'000;
  std::uint64_t max_norm = 2'000'000'000;
};

/// Class group of an imaginary quadratic field realized on reduced forms,
/// with an isomorphism onto the canonical coordinates of its invariant
/// factor decomposition. The principal form maps to the identity.
class ClassGroup {
 public:
  const FieldSpec& field() const { return field_; }
  const GroupSpec& group() const { return group_; }
  std::span<const QuadForm> forms() const { return forms_; }

  /// Canonical class of any primitive form of this discriminant.
  ClassIndex class_of(const QuadForm& f) const;
  /// Reduced form representing a canonical class.
  const QuadForm& form_of(ClassIndex c) const { return form_of_class_[c]; }

  QuadForm principal_form() const { return forms_.front(); }

 private:
  friend ClassGroup class_group(std::int64_t d, QuadraticLimits limits);

  std::size_t form_position(const QuadForm& reduced) const;

  FieldSpec field_;
  std::vector<QuadForm> forms_;
  GroupSpec group_;
  std::vector<ClassIndex> class_of_form_;  // parallel to forms_
  std::vector<QuadForm> form_of_class_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

ClassGroup class_group(std::int64_t d, QuadraticLimits limits = {});

/// Fundamental discriminant of Q(sqrt(d)).
std::int64_t fundamental_discriminant(std::int64_t d);

enum class Splitting { split, inert, ramified };

std::string_view to_string(Splitting s);

Splitting splitting_type(const FieldSpec& f, std::uint64_t p);

/// A nonzero prime ideal tagged with its norm and ideal class.
struct PrimeSite {
  std::uint64_t id = 0;
  std::uint64_t p = 0;
  std::uint64_t norm = 0;
  Splitting splitting = Splitting::split;
  std::uint64_t conjugate_id = 0;
  ClassIndex class_index = 0;  // canonical position; printed 1-based

  bool operator==(const PrimeSite&) const = default;
};

/// Lazy stream of the prime ideals of norm <= X, sorted by (norm, id). Ids
/// count up from 0 in emission order. A split prime p yields two adjacent
/// sites; the first is built from the root b of b^2 = disc (mod 4p) with the
/// smaller value in [0, 2p), its conjugate from 2p - b.
class PrimeSiteStream {
 public:
  PrimeSiteStream(const ClassGroup& cg, std::uint64_t max_norm,
                  QuadraticLimits limits = {});

  std::optional<PrimeSite> next();

 private:
  struct Pending {
    std::uint64_t norm;
    std::uint64_t p;
    bool operator>(const Pending& o) const { return norm > o.norm; }
  };

  void refill();

  const ClassGroup& cg_;
  std::uint64_t max_norm_;
  arith::PrimeSieve sieve_;
  std::vector<PrimeSite> ready_;
  std::size_t ready_pos_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> inert_;
  std::uint64_t next_id_ = 0;
  bool sieve_done_ = false;
};

std::vector<PrimeSite> prime_sites_up_to(const ClassGroup& cg,
                                         std::uint64_t max_norm,
                                         QuadraticLimits limits = {});

/// CSV with header `id,p,norm,splitting,class_index,conjugate_id`.
void write_sites_csv(std::ostream& os, std::span<const PrimeSite> sites);

}  // namespace irrdiv
