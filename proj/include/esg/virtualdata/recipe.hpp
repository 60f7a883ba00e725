#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "esg/common/record_log.hpp"

namespace esg::virtualdata {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Recipe expression: ref(lfn) | subset(input, constraint) | concat(inputs, axis).
struct Expr {
  enum class Kind { ref, subset, concat };
  Kind kind = Kind::ref;
  std::string name;        // ref
  std::string constraint;  // subset
  std::string axis;        // concat
  std::vector<ExprPtr> inputs;
};

ExprPtr ref(std::string lfn);
ExprPtr subset(ExprPtr input, std::string constraint);
ExprPtr concat(std::vector<ExprPtr> inputs, std::string axis);

/// {"ref":"lfn://..."} | {"subset":{"input":...,"constraint":"..."}} |
/// {"concat":{"inputs":[...],"axis":"time"}}
Json to_json(const Expr& e);
/// Validates structure, LFN syntax and constraint syntax.
ExprPtr expr_from_json(const Json& j);
std::string recipe_text(const Expr& e);
ExprPtr parse_recipe(std::string_view text);

/// Names referenced directly by the expression.
std::set<std::string> references(const Expr& e);

}  // namespace esg::virtualdata
