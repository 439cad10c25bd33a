#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "irrdiv/errors.hpp"

namespace irrdiv {

/// Element of a finite abelian group, identified by its position in the
/// canonical ordering. Position 0 is the identity. External surfaces print
/// position + 1 (the identity class is C_1).
using ClassIndex = std::uint32_t;

/// Finite abelian group Z/d_1 x ... x Z/d_r in invariant-factor form,
/// d_1 | d_2 | ... | d_r, every d_i >= 2. The empty list is the trivial group.
///
/// Elements are residue tuples (a_1, ..., a_r), 0 <= a_i < d_i, ordered
/// lexicographically with a_1 most significant. The identity (0, ..., 0) is
/// therefore first, and the ClassIndex of a tuple is its mixed-radix value.
class GroupSpec {
 public:
  GroupSpec() = default;
  explicit GroupSpec(std::vector<std::uint32_t> invariant_factors);

  static GroupSpec cyclic(std::uint32_t n);

  std::span<const std::uint32_t> invariant_factors() const { return factors_; }
  std::size_t rank() const { return factors_.size(); }
  std::uint64_t order() const { return order_; }

  std::vector<std::uint32_t> coordinates(ClassIndex g) const;
  ClassIndex from_coordinates(std::span<const std::uint32_t> coords) const;

  ClassIndex add(ClassIndex a, ClassIndex b) const;
  ClassIndex negate(ClassIndex a) const;
  ClassIndex multiple(ClassIndex a, std::int64_t k) const;
  std::uint64_t element_order(ClassIndex a) const;

  /// "trivial", "Z/6", "Z/2 x Z/2", ...
  std::string to_string() const;

  bool operator==(const GroupSpec&) const = default;

 private:
  std::vector<std::uint32_t> factors_;
  std::uint64_t order_ = 1;
};

/// Fixed enumeration C_1, ..., C_h of a group's elements.
struct ClassOrdering {
  std::vector<std::vector<std::uint32_t>> elements;

  std::size_t size() const { return elements.size(); }
  /// Position of a coordinate tuple; throws InvalidArgument when absent.
  ClassIndex index_of(std::span<const std::uint32_t> coords) const;
};

/// Identity first, then lexicographic coordinate order.
ClassOrdering canonical_ordering(const GroupSpec& g);

/// Class-count vector (t_1, ..., t_h) indexed by canonical position.
struct TypeVector {
  std::vector<std::uint32_t> t;

  std::uint32_t length() const;
  auto operator<=>(const TypeVector&) const = default;
};

/// Sum of t_i * C_i in the group.
ClassIndex type_sum(const GroupSpec& g, const TypeVector& tau);

bool is_minimal_zero_sum(const GroupSpec& g, const ClassOrdering& ord,
                         const TypeVector& tau);

struct SearchLimits {
  std::uint64_t max_order = 64;
};

/// All minimal zero-sum class distributions, sorted ascending.
std::vector<TypeVector> enumerate_types(const GroupSpec& g,
                                        const ClassOrdering& ord,
                                        SearchLimits limits = {});

std::uint32_t davenport_constant(const GroupSpec& g, SearchLimits limits = {});

struct StructuralConstants {
  GroupSpec group;
  std::uint32_t D = 1;
  std::vector<TypeVector> types;
  std::vector<TypeVector> maximal_types;
  std::vector<mpq_class> kappa;
  mpq_class A;
  mpq_class B_squared;
  double B = 0.0;

  std::uint64_t h() const { return group.order(); }
};

StructuralConstants structural_constants(const GroupSpec& g,
                                         SearchLimits limits = {});

/// "p/q" with q > 0, always including the denominator.
std::string rational_string(const mpq_class& q);

}  // namespace irrdiv
