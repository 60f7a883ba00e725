#include "esg/virtualdata/recipe.hpp"

#include "esg/common/error.hpp"
#include "esg/common/names.hpp"
#include "esg/gridfmt/constraint.hpp"

namespace esg::virtualdata {
namespace {

constexpr int kMaxDepth = 64;

Error bad(const std::string& what) { return Error(Errc::invalid_argument, "bad recipe: " + what); }

ExprPtr from_json(const Json& j, int depth) {
  if (depth > kMaxDepth) throw bad("nesting too deep");
  if (!j.is_object() || j.size() != 1) throw bad("each node needs exactly one of ref, subset, concat");
  auto node = j.begin();
  const std::string kind = node.key();
  const Json& body = node.value();
  if (kind == "ref") {
    if (!body.is_string() || !valid_lfn(body.get<std::string>())) throw bad("ref needs a logical name");
    return ref(body.get<std::string>());
  }
  if (kind == "subset") {
    if (!body.is_object() || !body.contains("input") || !body.contains("constraint") ||
        !body["constraint"].is_string() || body.size() != 2) {
      throw bad("subset needs input and constraint");
    }
    auto c = body["constraint"].get<std::string>();
    gridfmt::parse_constraint(c);
    return subset(from_json(body["input"], depth + 1), c);
  }
  if (kind == "concat") {
    if (!body.is_object() || !body.contains("inputs") || !body["inputs"].is_array() || !body.contains("axis") ||
        !body["axis"].is_string() || body.size() != 2) {
      throw bad("concat needs inputs and axis");
    }
    if (body["inputs"].empty()) throw bad("concat of nothing");
    std::vector<ExprPtr> inputs;
    for (const auto& in : body["inputs"]) inputs.push_back(from_json(in, depth + 1));
    return concat(std::move(inputs), body["axis"].get<std::string>());
  }
  throw bad("unknown node kind " + kind);
}

void collect(const Expr& e, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::ref) out.insert(e.name);
  for (const auto& in : e.inputs) collect(*in, out);
}

}  // namespace

ExprPtr ref(std::string lfn) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::ref;
  e->name = std::move(lfn);
  return e;
}

ExprPtr subset(ExprPtr input, std::string constraint) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::subset;
  e->constraint = std::move(constraint);
  e->inputs.push_back(std::move(input));
  return e;
}

ExprPtr concat(std::vector<ExprPtr> inputs, std::string axis) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::concat;
  e->axis = std::move(axis);
  e->inputs = std::move(inputs);
  return e;
}

Json to_json(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::ref:
      return Json{{"ref", e.name}};
    case Expr::Kind::subset:
      return Json{{"subset", Json{{"input", to_json(*e.inputs.at(0))}, {"constraint", e.constraint}}}};
    case Expr::Kind::concat: {
      Json inputs = Json::array();
      for (const auto& in : e.inputs) inputs.push_back(to_json(*in));
      return Json{{"concat", Json{{"inputs", inputs}, {"axis", e.axis}}}};
    }
  }
  return {};
}

ExprPtr expr_from_json(const Json& j) { return from_json(j, 0); }

std::string recipe_text(const Expr& e) { return to_json(e).dump(); }

ExprPtr parse_recipe(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& ex) {
    throw bad(ex.what());
  }
  return expr_from_json(j);
}

std::set<std::string> references(const Expr& e) {
  std::set<std::string> out;
  collect(e, out);
  return out;
}

}  // namespace esg::virtualdata
