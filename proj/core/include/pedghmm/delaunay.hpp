#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "pedghmm/geometry.hpp"

namespace pedghmm {

using IndexEdge = std::pair<std::size_t, std::size_t>;

/// Edges (i < j, sorted, unique) of the Delaunay triangulation of `points`.
///
/// Predicates are evaluated exactly on coordinates snapped to a fixed grid
/// (0.1 mm, coarser only for extents beyond a few kilometers); points that
/// snap together are treated as one, and the later index gets no edges.
/// Points are inserted in index order and cocircular ties keep the existing
/// triangles, so the lowest indices win and the output is reproducible.
/// Collinear input yields the path graph along the line.
///
/// Throws InputError for fewer than two distinct points.
std::vector<IndexEdge> delaunay_edges(std::span<const Vec2> points);

}  // namespace pedghmm
