#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace esg::gridfmt {

/// Strided index range; stop is inclusive.
struct Hyperslab {
  std::uint64_t start = 0;
  std::uint64_t stride = 1;
  std::uint64_t stop = 0;

  std::uint64_t count() const { return (stop - start) / stride + 1; }
  bool operator==(const Hyperslab&) const = default;
};

struct Projection {
  std::string variable;
  /// One per leading dimension; omitted trailing dimensions are full range.
  std::vector<Hyperslab> slabs;

  bool operator==(const Projection&) const = default;
};

struct Constraint {
  std::vector<Projection> projections;

  bool operator==(const Constraint&) const = default;
};

/// constraint := proj ("," proj)* ; proj := NAME slab* ;
/// slab := "[" INT ":" INT ":" INT "]". A single trailing comma is accepted
/// and dropped so "PS[0:1:1]," normalizes to "PS[0:1:1]".
Constraint parse_constraint(std::string_view text);

/// Canonical text form; parse_constraint(render(c)) == c.
std::string render(const Constraint& c);

}  // namespace esg::gridfmt
