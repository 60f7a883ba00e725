#include "esg/portal/selection.hpp"

#include <algorithm>
#include <cmath>

#include "esg/common/error.hpp"

namespace esg::portal {
namespace {

std::optional<CoordRange> range(const Json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  const auto& r = j[key];
  if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
    throw Error(Errc::invalid_argument, std::string(key) + " must be [min, max]");
  }
  return CoordRange{r[0].get<double>(), r[1].get<double>()};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

SelectionRequest selection_from_json(const Json& j) {
  SelectionRequest s;
  try {
    s.dataset = j.at("dataset").get<std::string>();
    s.variable = j.at("variable").get<std::string>();
  } catch (const Json::exception&) {
    throw Error(Errc::invalid_argument, "selection needs dataset and variable");
  }
  s.lat = range(j, "lat");
  s.lon = range(j, "lon");
  s.time = range(j, "time");
  s.level = range(j, "level");
  return s;
}

Json to_json(const SelectionRequest& s) {
  Json j{{"dataset", s.dataset}, {"variable", s.variable}};
  auto put = [&](const char* key, const std::optional<CoordRange>& r) {
    if (r) j[key] = Json::array({r->min, r->max});
  };
  put("lat", s.lat);
  put("lon", s.lon);
  put("time", s.time);
  put("level", s.level);
  return j;
}

std::optional<Axis> axis_of(const gridfmt::GridDataset& ds, const std::string& dimension) {
  if (const auto* coord = ds.find_variable(dimension)) {
    auto it = coord->attributes.find("axis");
    if (it != coord->attributes.end()) {
      if (const auto* a = std::get_if<std::string>(&it->second)) {
        if (*a == "Y") return Axis::lat;
        if (*a == "X") return Axis::lon;
        if (*a == "T") return Axis::time;
        if (*a == "Z") return Axis::level;
      }
    }
  }
  auto name = lower(dimension);
  if (name == "lat" || name == "latitude") return Axis::lat;
  if (name == "lon" || name == "longitude") return Axis::lon;
  if (name == "time" || name == "t") return Axis::time;
  if (name == "lev" || name == "level" || name == "plev" || name == "depth") return Axis::level;
  return std::nullopt;
}

gridfmt::Hyperslab covering_slab(const std::vector<double>& coords, CoordRange range, const std::string& what) {
  if (!(std::isfinite(range.min) && std::isfinite(range.max)) || range.min > range.max) {
    throw Error(Errc::invalid_argument, what + " range is empty or not finite");
  }
  if (coords.empty()) throw Error(Errc::invalid_argument, what + " has no coordinates");
  auto [lo, hi] = std::minmax_element(coords.begin(), coords.end());
  if (range.min < *lo || range.max > *hi) {
    throw Error(Errc::invalid_argument, what + " range out of extent [" + std::to_string(*lo) + ", " +
                                            std::to_string(*hi) + "]");
  }
  std::optional<std::uint64_t> first, last;
  for (std::uint64_t i = 0; i < coords.size(); ++i) {
    if (coords[i] >= range.min && coords[i] <= range.max) {
      if (!first) first = i;
      last = i;
    }
  }
  if (!first) throw Error(Errc::invalid_argument, what + " range falls between grid points");
  return {*first, 1, *last};
}

gridfmt::Constraint compile_selection(const gridfmt::GridDataset& ds, const SelectionRequest& s) {
  const auto* var = ds.find_variable(s.variable);
  if (!var) throw Error(Errc::not_found, "no variable " + s.variable + " in " + s.dataset);
  std::vector<std::pair<Axis, const std::optional<CoordRange>*>> wanted{
      {Axis::lat, &s.lat}, {Axis::lon, &s.lon}, {Axis::time, &s.time}, {Axis::level, &s.level}};
  std::vector<bool> used(wanted.size(), false);

  gridfmt::Projection p;
  p.variable = s.variable;
  for (const auto& dim : var->dims) {
    auto size = ds.find_dimension(dim)->size;
    if (size == 0) throw Error(Errc::invalid_argument, "dimension " + dim + " is empty");
    gridfmt::Hyperslab slab{0, 1, size - 1};
    if (auto axis = axis_of(ds, dim)) {
      for (std::size_t k = 0; k < wanted.size(); ++k) {
        if (wanted[k].first != *axis || !*wanted[k].second) continue;
        const auto* coord = ds.find_variable(dim);
        if (!coord) throw Error(Errc::invalid_argument, "dimension " + dim + " has no coordinate variable");
        std::vector<double> values;
        std::visit([&](const auto& data) { values.assign(data.begin(), data.end()); }, coord->data);
        slab = covering_slab(values, **wanted[k].second, dim);
        used[k] = true;
      }
    }
    p.slabs.push_back(slab);
  }
  for (std::size_t k = 0; k < wanted.size(); ++k) {
    if (*wanted[k].second && !used[k]) {
      static const char* names[] = {"lat", "lon", "time", "level"};
      throw Error(Errc::invalid_argument, s.variable + " has no " + names[k] + " axis");
    }
  }
  gridfmt::Constraint c;
  c.projections.push_back(std::move(p));
  return c;
}

}  // namespace esg::portal
