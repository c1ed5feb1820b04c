#include "chanstab/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chanstab {

const char* segment_name(Segment s) {
    switch (s) {
        case Segment::Inflow: return "inflow";
        case Segment::Outflow: return "outflow";
        case Segment::Bottom: return "bottom";
        case Segment::Top: return "top";
    }
    return "?";
}

namespace {
double cinf_ramp(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
}  // namespace

double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = cinf_ramp(t);
    const double b = cinf_ramp(1.0 - t);
    return a / (a + b);
}

double smooth_bump(double t, double lo, double hi, double ramp) {
    if (t <= lo || t >= hi) return 0.0;
    return smoothstep((t - lo) / ramp) * smoothstep((hi - t) / ramp);
}

BoundaryFace Geometry::classify_boundary_face(double x, double y, double tol) const {
    const double d = cfg_.d;
    BoundaryFace face{};
    face.position = {x, y};
    face.in_control_zone = false;
    face.weight_m = 0.0;
    const bool on_left = std::abs(x) <= tol;
    const bool on_right = std::abs(x - d) <= tol;
    const bool on_bottom = std::abs(y) <= tol;
    const bool on_top = std::abs(y - 1.0) <= tol;
    // Corners go to the lateral walls; the in/outflow segments are open.
    if (on_bottom && x >= -tol && x <= d + tol) {
        face.segment = Segment::Bottom;
        return face;
    }
    if (on_top && x >= -tol && x <= d + tol) {
        face.segment = Segment::Top;
        return face;
    }
    if (on_left && y > tol && y < 1.0 - tol) {
        face.segment = Segment::Inflow;
        face.in_control_zone = in_control_zone(y);
        face.weight_m = control_weight(y);
        return face;
    }
    if (on_right && y > tol && y < 1.0 - tol) {
        face.segment = Segment::Outflow;
        return face;
    }
    throw std::invalid_argument("point (" + std::to_string(x) + ", " + std::to_string(y) +
                                ") is not on the channel boundary");
}

double Geometry::control_weight(double x2) const {
    return smooth_bump(x2, cfg_.L, 1.0 - cfg_.L, cfg_.plateau_offset());
}

double Geometry::boundary_weight(Segment seg, double arclen_coord) const {
    if (seg != Segment::Inflow) return 0.0;
    return control_weight(arclen_coord);
}

double Geometry::extinction_cutoff(double x, double y) const {
    const double e2 = cfg_.eps / 2.0;
    // Smooth indicator of the enlarged box, 1 on [0,d] x [A1, 1-A1] and 0
    // outside the eps/2-enlargement.
    const double bx = smoothstep((x + e2) / e2) * smoothstep((cfg_.d + e2 - x) / e2);
    const double by =
        smoothstep((y - (cfg_.A1 - e2)) / e2) * smoothstep(((1.0 - cfg_.A1 + e2) - y) / e2);
    return 1.0 - bx * by;
}

}  // namespace chanstab
