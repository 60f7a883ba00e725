#pragma once

#include <optional>
#include <string>
#include <vector>

#include "esg/common/record_log.hpp"
#include "esg/gridfmt/constraint.hpp"
#include "esg/gridfmt/dataset.hpp"

namespace esg::portal {

struct CoordRange {
  double min = 0;
  double max = 0;
};

/// Aggregated data selection: one variable, optional ranges per axis in
/// coordinate units.
struct SelectionRequest {
  std::string dataset;
  std::string variable;
  std::optional<CoordRange> lat;
  std::optional<CoordRange> lon;
  std::optional<CoordRange> time;
  std::optional<CoordRange> level;
};

SelectionRequest selection_from_json(const Json& j);
Json to_json(const SelectionRequest& s);

enum class Axis { lat, lon, time, level };

/// Axis of a dimension judged by its coordinate variable's "axis" attribute
/// (Y, X, T, Z) or by conventional names.
std::optional<Axis> axis_of(const gridfmt::GridDataset& ds, const std::string& dimension);

/// Index window of the coordinates lying inside [range.min, range.max].
/// Errors when the range leaves the coordinate extent or selects nothing.
gridfmt::Hyperslab covering_slab(const std::vector<double>& coords, CoordRange range, const std::string& what);

/// Compiles to a single projection of the requested variable.
gridfmt::Constraint compile_selection(const gridfmt::GridDataset& ds, const SelectionRequest& s);

}  // namespace esg::portal
