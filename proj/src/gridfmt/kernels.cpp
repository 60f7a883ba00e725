#include "esg/gridfmt/kernels.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "esg/common/error.hpp"

namespace esg::gridfmt {
namespace {

using IndexList = std::vector<std::uint64_t>;

IndexList full_range(std::uint64_t size) {
  IndexList out(size);
  for (std::uint64_t i = 0; i < size; ++i) out[i] = i;
  return out;
}

IndexList slab_indices(const Hyperslab& s) {
  IndexList out;
  for (auto i = s.start; i <= s.stop; i += s.stride) {
    out.push_back(i);
    if (s.stop - i < s.stride) break;
  }
  return out;
}

// Row-major gather of the index sets along each dimension.
template <typename T>
std::vector<T> gather(const std::vector<T>& src,
                      const std::vector<std::uint64_t>& shape,
                      const std::vector<const IndexList*>& picks) {
  std::size_t rank = shape.size();
  std::uint64_t total = 1;
  for (const auto* p : picks) total *= p->size();
  std::vector<T> out;
  out.reserve(total);
  if (total == 0) return out;
  if (rank == 0) {
    out.push_back(src.front());
    return out;
  }

  std::vector<std::uint64_t> strides(rank, 1);
  for (std::size_t d = rank - 1; d > 0; --d) strides[d - 1] = strides[d] * shape[d];

  std::vector<std::size_t> cursor(rank, 0);
  while (true) {
    std::uint64_t offset = 0;
    for (std::size_t d = 0; d < rank; ++d) offset += (*picks[d])[cursor[d]] * strides[d];
    out.push_back(src[offset]);
    std::size_t d = rank;
    while (d > 0) {
      --d;
      if (++cursor[d] < picks[d]->size()) break;
      cursor[d] = 0;
      if (d == 0) return out;
    }
  }
}

void check_projection(const GridDataset& ds, const Projection& p) {
  const auto* var = ds.find_variable(p.variable);
  if (var == nullptr) {
    throw Error(Errc::not_found, "unknown variable " + p.variable);
  }
  if (p.slabs.size() > var->dims.size()) {
    throw Error(Errc::invalid_argument,
                "rank mismatch: " + std::to_string(p.slabs.size()) +
                    " slabs for " + std::to_string(var->dims.size()) +
                    "-D variable " + p.variable);
  }
  auto shape = ds.shape_of(*var);
  for (std::size_t d = 0; d < p.slabs.size(); ++d) {
    const auto& s = p.slabs[d];
    if (s.stride == 0 || s.start > s.stop) {
      throw Error(Errc::invalid_argument, "malformed hyperslab on " + p.variable);
    }
    if (s.stop >= shape[d]) {
      throw Error(Errc::invalid_argument,
                  "slab out of bounds: " + p.variable + " dimension " +
                      var->dims[d] + " has size " + std::to_string(shape[d]) +
                      ", stop is " + std::to_string(s.stop));
    }
  }
}

}  // namespace

GridDataset subset(const GridDataset& ds, const Constraint& c) {
  std::map<std::string, IndexList> selection;
  std::set<std::string> wanted;

  auto select = [&](const std::string& dim, IndexList indices) {
    auto [it, inserted] = selection.emplace(dim, indices);
    if (!inserted && it->second != indices) {
      throw Error(Errc::invalid_argument,
                  "conflicting selections on shared dimension " + dim);
    }
  };

  for (const auto& p : c.projections) {
    check_projection(ds, p);
    const auto* var = ds.find_variable(p.variable);
    wanted.insert(var->name);
    for (std::size_t d = 0; d < var->dims.size(); ++d) {
      const auto& dim = var->dims[d];
      select(dim, d < p.slabs.size() ? slab_indices(p.slabs[d])
                                     : full_range(ds.find_dimension(dim)->size));
    }
  }
  // Coordinate variables follow their dimension's selection.
  for (const auto& [dim, _] : selection) {
    if (ds.find_variable(dim) != nullptr) wanted.insert(dim);
  }

  GridDataset out;
  out.attributes = ds.attributes;
  for (const auto& dim : ds.dimensions) {
    auto it = selection.find(dim.name);
    if (it == selection.end()) continue;
    out.dimensions.push_back({dim.name, it->second.size(), dim.unlimited});
  }
  for (const auto& var : ds.variables) {
    if (!wanted.contains(var.name)) continue;
    std::vector<const IndexList*> picks;
    for (const auto& dim : var.dims) picks.push_back(&selection.at(dim));
    auto shape = ds.shape_of(var);
    Variable sliced{var.name, var.dims, var.attributes, {}};
    sliced.data = std::visit(
        [&](const auto& values) -> Values { return gather(values, shape, picks); },
        var.data);
    out.variables.push_back(std::move(sliced));
  }
  return out;
}

GridDataset concat(std::span<const GridDataset> parts, std::string_view axis) {
  if (parts.empty()) throw Error(Errc::invalid_argument, "concat of empty part list");
  const auto& first = parts.front();

  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto* dim = parts[i].find_dimension(axis);
    if (dim == nullptr || !dim->unlimited) {
      throw Error(Errc::invalid_argument,
                  "axis " + std::string(axis) + " is not the unlimited dimension of part " +
                      std::to_string(i));
    }
  }

  auto mismatch = [](std::size_t part, const std::string& what) {
    return Error(Errc::invalid_argument,
                 "schema mismatch in part " + std::to_string(part) + ": " + what);
  };

  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& part = parts[i];
    if (part.dimensions.size() != first.dimensions.size()) {
      throw mismatch(i, "dimension count");
    }
    for (std::size_t d = 0; d < first.dimensions.size(); ++d) {
      const auto& a = first.dimensions[d];
      const auto& b = part.dimensions[d];
      if (a.name != b.name || a.unlimited != b.unlimited ||
          (a.name != axis && a.size != b.size)) {
        throw mismatch(i, "dimension " + b.name);
      }
    }
    if (part.variables.size() != first.variables.size()) {
      throw mismatch(i, "variable count");
    }
    for (std::size_t v = 0; v < first.variables.size(); ++v) {
      const auto& a = first.variables[v];
      const auto& b = part.variables[v];
      if (a.name != b.name || a.dims != b.dims || a.dtype() != b.dtype()) {
        throw mismatch(i, "variable " + b.name);
      }
      if (a.attributes != b.attributes) {
        throw mismatch(i, "conflicting attributes on " + b.name);
      }
      bool on_axis = std::find(a.dims.begin(), a.dims.end(), axis) != a.dims.end();
      if (!on_axis && a.data != b.data) {
        throw mismatch(i, "non-record variable " + b.name + " differs");
      }
    }
  }

  GridDataset out;
  out.attributes = first.attributes;
  out.dimensions = first.dimensions;
  for (auto& dim : out.dimensions) {
    if (dim.name != axis) continue;
    dim.size = 0;
    for (const auto& part : parts) dim.size += part.find_dimension(axis)->size;
  }

  for (std::size_t v = 0; v < first.variables.size(); ++v) {
    const auto& proto = first.variables[v];
    auto pos = std::find(proto.dims.begin(), proto.dims.end(), axis);
    if (pos == proto.dims.end()) {
      out.variables.push_back(proto);
      continue;
    }
    auto axis_index = static_cast<std::size_t>(pos - proto.dims.begin());
    auto shape = first.shape_of(proto);
    std::uint64_t outer = 1;
    std::uint64_t inner = 1;
    for (std::size_t d = 0; d < axis_index; ++d) outer *= shape[d];
    for (std::size_t d = axis_index + 1; d < shape.size(); ++d) inner *= shape[d];

    Variable joined{proto.name, proto.dims, proto.attributes, {}};
    joined.data = std::visit(
        [&](const auto& proto_values) -> Values {
          using Vec = std::decay_t<decltype(proto_values)>;
          Vec values;
          for (std::uint64_t o = 0; o < outer; ++o) {
            for (const auto& part : parts) {
              const auto& src = std::get<Vec>(part.variables[v].data);
              auto block = part.find_dimension(axis)->size * inner;
              auto begin = src.begin() + static_cast<std::ptrdiff_t>(o * block);
              values.insert(values.end(), begin,
                            begin + static_cast<std::ptrdiff_t>(block));
            }
          }
          return values;
        },
        proto.data);
    out.variables.push_back(std::move(joined));
  }
  return out;
}

}  // namespace esg::gridfmt
