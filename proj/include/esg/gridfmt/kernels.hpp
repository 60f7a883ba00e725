#pragma once

#include <span>
#include <string_view>

#include "esg/gridfmt/constraint.hpp"
#include "esg/gridfmt/dataset.hpp"

namespace esg::gridfmt {

/// Projects the constrained variables plus the coordinate variables of every
/// dimension they use. Dimensions shared by several projections must receive
/// the same index selection.
GridDataset subset(const GridDataset& ds, const Constraint& c);

/// Joins parts along their unlimited dimension. Variables without the axis
/// must be identical across parts; global attributes come from the first part.
GridDataset concat(std::span<const GridDataset> parts, std::string_view axis);

}  // namespace esg::gridfmt
