/**
 * @file svg.cpp
 * @brief Implementation of the deterministic SVG portrait renderer.
 */
#include "pflow/svg.hpp"

namespace pflow {

namespace {

constexpr double kView = 1000.0;
constexpr double kCenter = 500.0;
constexpr double kScale = 450.0;

struct Mapper {
    int ax, ay;
    double R;
    double X(const Vec& p) const { return kCenter + kScale * p[ax] / R; }
    double Y(const Vec& p) const { return kCenter - kScale * p[ay] / R; }
};

int max_dim(const Portrait& p) {
    int d = 0;
    for (const auto& l : p.lines) {
        for (const auto& pt : l.points) d = std::max<int>(d, static_cast<int>(pt.size()));
    }
    for (const auto& m : p.markers) d = std::max<int>(d, static_cast<int>(m.point.size()));
    for (const auto& patch : p.patches) {
        for (const auto& pt : patch.corners) d = std::max<int>(d, static_cast<int>(pt.size()));
    }
    return d;
}

} // namespace

std::string render_portrait(const Portrait& portrait, const ProjectionSpec* spec) {
    const int dim = max_dim(portrait);
    ProjectionSpec def;
    if (spec == nullptr) {
        if (dim > 3) {
            throw PreconditionError(
                "render_portrait: data dimension > 3 requires a projection spec");
        }
        spec = &def;
    }
    if (spec->ax < 0 || spec->ay < 0 || spec->ax == spec->ay) {
        throw PreconditionError("render_portrait: projection axes must be distinct and >= 0");
    }
    if (dim > 0 && (spec->ax >= dim || spec->ay >= dim)) {
        throw PreconditionError("render_portrait: projection axis exceeds data dimension");
    }
    if (!(spec->half_range > 0.0)) {
        throw PreconditionError("render_portrait: half_range must be positive");
    }
    const Mapper map{spec->ax, spec->ay, spec->half_range};

    std::string out;
    out.reserve(4096);
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1000\" height=\"1000\" "
           "viewBox=\"0 0 1000 1000\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"1000\" height=\"1000\" fill=\"#ffffff\"/>\n";
    // axes through the data origin
    out += "<line x1=\"50\" y1=\"500\" x2=\"950\" y2=\"500\" stroke=\"#bbbbbb\" "
           "stroke-width=\"1\"/>\n";
    out += "<line x1=\"500\" y1=\"50\" x2=\"500\" y2=\"950\" stroke=\"#bbbbbb\" "
           "stroke-width=\"1\"/>\n";
    if (!portrait.title.empty()) {
        out += "<text x=\"500\" y=\"30\" text-anchor=\"middle\" font-family=\"monospace\" "
               "font-size=\"20\">" + portrait.title + "</text>\n";
    }
    if (portrait.reference_circle) {
        out += "<circle cx=\"500\" cy=\"500\" r=\"" + format_num(kScale / spec->half_range) +
               "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1.5\" "
               "stroke-dasharray=\"6,4\"/>\n";
    }
    for (const auto& patch : portrait.patches) {
        if (patch.corners.empty()) continue;
        out += "<polygon points=\"";
        for (std::size_t i = 0; i < patch.corners.size(); ++i) {
            if (i) out += ' ';
            out += format_num(map.X(patch.corners[i])) + ',' + format_num(map.Y(patch.corners[i]));
        }
        out += "\" fill=\"" + patch.color + "\" fill-opacity=\"" + format_num(patch.opacity) +
               "\" stroke=\"none\"/>\n";
    }
    for (const auto& line : portrait.lines) {
        if (line.points.size() < 2) continue;
        out += "<polyline points=\"";
        for (std::size_t i = 0; i < line.points.size(); ++i) {
            if (i) out += ' ';
            out += format_num(map.X(line.points[i])) + ',' + format_num(map.Y(line.points[i]));
        }
        out += "\" fill=\"none\" stroke=\"" + line.color + "\" stroke-width=\"" +
               format_num(line.width) + "\"/>\n";
    }
    for (const auto& m : portrait.markers) {
        out += "<circle cx=\"" + format_num(map.X(m.point)) + "\" cy=\"" +
               format_num(map.Y(m.point)) + "\" r=\"" + format_num(m.radius) + "\" fill=\"" +
               m.color + "\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace pflow
