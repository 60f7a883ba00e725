#include "esg/gridfmt/dataset.hpp"

#include <cmath>
#include <set>

#include "esg/common/error.hpp"

namespace esg::gridfmt {
namespace {

bool valid_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto first = name.front();
  if (!(std::isalpha(static_cast<unsigned char>(first)) || first == '_')) {
    return false;
  }
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
          c == '-')) {
      return false;
    }
  }
  return true;
}

void validate_attributes(const Attributes& attrs, const std::string& where) {
  for (const auto& [key, value] : attrs) {
    if (key.empty()) {
      throw Error(Errc::invalid_argument, "empty attribute name on " + where);
    }
    if (auto* d = std::get_if<double>(&value); d && !std::isfinite(*d)) {
      throw Error(Errc::invalid_argument,
                  "non-finite attribute " + key + " on " + where);
    }
  }
}

}  // namespace

std::string_view to_string(DType dtype) {
  return dtype == DType::f64 ? "f64" : "i64";
}

std::size_t Variable::element_count() const {
  return std::visit([](const auto& v) { return v.size(); }, data);
}

const Dimension* GridDataset::find_dimension(std::string_view name) const {
  for (const auto& d : dimensions) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

const Variable* GridDataset::find_variable(std::string_view name) const {
  for (const auto& v : variables) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

const Dimension* GridDataset::unlimited_dimension() const {
  for (const auto& d : dimensions) {
    if (d.unlimited) return &d;
  }
  return nullptr;
}

std::vector<std::uint64_t> GridDataset::shape_of(const Variable& var) const {
  std::vector<std::uint64_t> shape;
  shape.reserve(var.dims.size());
  for (const auto& name : var.dims) {
    const auto* dim = find_dimension(name);
    if (dim == nullptr) {
      throw Error(Errc::invalid_argument,
                  "variable " + var.name + " uses undeclared dimension " + name);
    }
    shape.push_back(dim->size);
  }
  return shape;
}

void validate(const GridDataset& ds) {
  std::set<std::string> dim_names;
  int unlimited = 0;
  for (const auto& dim : ds.dimensions) {
    if (!valid_identifier(dim.name)) {
      throw Error(Errc::invalid_argument, "bad dimension name '" + dim.name + "'");
    }
    if (!dim_names.insert(dim.name).second) {
      throw Error(Errc::invalid_argument, "duplicate dimension " + dim.name);
    }
    if (dim.unlimited) ++unlimited;
  }
  if (unlimited > 1) {
    throw Error(Errc::invalid_argument, "more than one unlimited dimension");
  }

  std::set<std::string> var_names;
  for (const auto& var : ds.variables) {
    if (!valid_identifier(var.name)) {
      throw Error(Errc::invalid_argument, "bad variable name '" + var.name + "'");
    }
    if (!var_names.insert(var.name).second) {
      throw Error(Errc::invalid_argument, "duplicate variable " + var.name);
    }
    std::set<std::string> seen;
    for (const auto& d : var.dims) {
      if (!seen.insert(d).second) {
        throw Error(Errc::invalid_argument,
                    "variable " + var.name + " repeats dimension " + d);
      }
    }
    std::uint64_t expected = 1;
    for (auto n : ds.shape_of(var)) expected *= n;
    if (var.element_count() != expected) {
      throw Error(Errc::invalid_argument,
                  "variable " + var.name + " has " +
                      std::to_string(var.element_count()) + " values, shape needs " +
                      std::to_string(expected));
    }
    if (dim_names.contains(var.name) &&
        (var.dims.size() != 1 || var.dims.front() != var.name)) {
      throw Error(Errc::invalid_argument,
                  "coordinate variable " + var.name + " must be 1-D over its dimension");
    }
    validate_attributes(var.attributes, "variable " + var.name);
  }
  validate_attributes(ds.attributes, "dataset");
}

}  // namespace esg::gridfmt
