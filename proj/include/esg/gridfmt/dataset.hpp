#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace esg::gridfmt {

using AttributeValue = std::variant<std::int64_t, double, std::string>;
using Attributes = std::map<std::string, AttributeValue>;

enum class DType { f64, i64 };

std::string_view to_string(DType dtype);

struct Dimension {
  std::string name;
  std::uint64_t size = 0;
  bool unlimited = false;

  bool operator==(const Dimension&) const = default;
};

/// Values are stored row-major, last dimension fastest.
using Values = std::variant<std::vector<double>, std::vector<std::int64_t>>;

struct Variable {
  std::string name;
  std::vector<std::string> dims;
  Attributes attributes;
  Values data = std::vector<double>{};

  DType dtype() const {
    return std::holds_alternative<std::vector<double>>(data) ? DType::f64
                                                             : DType::i64;
  }
  std::size_t element_count() const;

  bool operator==(const Variable&) const = default;
};

/// Self-describing dimensioned array container. A variable named after a
/// dimension is that dimension's coordinate variable.
struct GridDataset {
  std::vector<Dimension> dimensions;
  std::vector<Variable> variables;
  Attributes attributes;

  const Dimension* find_dimension(std::string_view name) const;
  const Variable* find_variable(std::string_view name) const;
  const Dimension* unlimited_dimension() const;
  /// Sizes of the variable's dimensions, in order.
  std::vector<std::uint64_t> shape_of(const Variable& var) const;

  bool operator==(const GridDataset&) const = default;
};

/// Throws Error(invalid_argument) naming the first violated invariant.
void validate(const GridDataset& ds);

}  // namespace esg::gridfmt
