/**
 * @file svg.hpp
 * @brief Deterministic SVG phase portraits: polyline trajectories, point
 *        markers, shaded cell patches, and a unit reference circle, rendered
 *        into a fixed 1000 x 1000 viewport with a documented affine map.
 */
#pragma once

#include "pflow/linalg.hpp"

namespace pflow {

/// Which data coordinates are plotted and the data window mapped to the
/// viewport: [-half_range, half_range]^2 -> [50, 950]^2 (y axis flipped),
/// i.e. X = 500 + 450 x/R, Y = 500 - 450 y/R.
struct ProjectionSpec {
    int ax = 0;
    int ay = 1;
    double half_range = 1.1;
};

struct PortraitPolyline {
    std::vector<Vec> points;
    std::string color = "#1f77b4";
    double width = 1.5;
};

struct PortraitMarker {
    Vec point;
    std::string color = "#d62728";
    double radius = 5.0; ///< viewport units
};

/// Shaded convex patch (e.g. one grid cell); corners in data coordinates.
struct PortraitPatch {
    std::vector<Vec> corners;
    std::string color = "#2ca02c";
    double opacity = 0.35;
};

struct Portrait {
    std::string title;
    std::vector<PortraitPatch> patches; ///< drawn first (background)
    std::vector<PortraitPolyline> lines;
    std::vector<PortraitMarker> markers;
    bool reference_circle = false; ///< unit circle in data coordinates
};

/**
 * @brief Render the portrait to a complete SVG document.  Byte-identical
 *        across runs for identical inputs (12-significant-digit coordinates,
 *        no timestamps).  Data of dimension > 3 requires an explicit
 *        projection spec; the spec's axes must exist in every datum.
 */
std::string render_portrait(const Portrait& portrait, const ProjectionSpec* spec = nullptr);

} // namespace pflow
