#pragma once

#include <array>

#include "chanstab/config.hpp"

namespace chanstab {

enum class Segment { Inflow, Outflow, Bottom, Top };

const char* segment_name(Segment s);

struct BoundaryFace {
    Segment segment;
    std::array<double, 2> position;
    bool in_control_zone;
    double weight_m;  // value of the localization weight at the face center
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// C-infinity transition: 0 for t <= 0, 1 for t >= 1, strictly monotone between.
double smoothstep(double t);

/// Smooth bump in [0,1]: 0 outside (lo, hi), exactly 1 on [lo+ramp, hi-ramp].
double smooth_bump(double t, double lo, double hi, double ramp);

class Geometry {
  public:
    explicit Geometry(const ChannelConfig& cfg) : cfg_(cfg) {}

    const ChannelConfig& config() const { return cfg_; }

    /// Classifies a point of the boundary. Throws std::invalid_argument when
    /// the point is not on the boundary (up to `tol`).
    BoundaryFace classify_boundary_face(double x, double y, double tol = 1e-12) const;

    /// Localization weight m as a function of the x2 coordinate along the
    /// inflow boundary: supported in (L, 1-L), equal to 1 on the plateau.
    double control_weight(double x2) const;

    /// Weight m on the whole boundary: control_weight on the inflow side,
    /// zero on the other segments.
    double boundary_weight(Segment seg, double arclen_coord) const;

    bool in_control_zone(double x2) const { return x2 > cfg_.L && x2 < 1.0 - cfg_.L; }

    /// Poiseuille reference velocity, valid on the closure of the channel.
    Vec2 poiseuille_velocity(double /*x*/, double y) const { return {y * (1.0 - y), 0.0}; }
    double poiseuille_pressure(double x) const { return -2.0 * cfg_.nu * x; }

    /// Poiseuille profile extended to the whole plane: the parabolic profile
    /// inside the horizontal strip 0 < x2 < 1, zero outside.
    Vec2 poiseuille_extended(double /*x*/, double y) const {
        if (y <= 0.0 || y >= 1.0) return {0.0, 0.0};
        return {y * (1.0 - y), 0.0};
    }

    /// Cutoff for the localized-energy functional: 0 on [0,d] x [A1, 1-A1],
    /// 1 outside the eps/2-enlarged box, smooth in between.
    double extinction_cutoff(double x, double y) const;

  private:
    ChannelConfig cfg_;
};

}  // namespace chanstab
