#pragma once

#include <filesystem>
#include <vector>

#include "fbmin/grid.hpp"

namespace fbmin {

/// u_{x,r}(y) = u(x + r y) / r sampled on a target grid.
struct BlowupFrame {
    Vec2 center;
    double radius = 0.0;
    VectorField field;
    double tolerance = 0.0;  ///< bilinear interpolation bound sqrt(2) h_src L / r
};

/// Largest edge quotient |u(a) - u(b)| / |a - b| over the grid.
double lipschitz_bound(const VectorField& u);

/// Throws DomainError when x + r * (target box) leaves the source box.
BlowupFrame rescale(const VectorField& u, Vec2 x, double r, const GridSpec& target);

/// Same, with a precomputed Lipschitz bound of u.
BlowupFrame rescale(const VectorField& u, Vec2 x, double r, const GridSpec& target, double lipschitz);

struct BlowupSequence {
    std::vector<BlowupFrame> frames;
    std::vector<double> distances;  ///< sup |frame_k - frame_{k+1}|
};

/// Frames for decreasing radii around a point within h of the free boundary.
BlowupSequence blowup_sequence(const VectorField& u, double tol, Vec2 x, const std::vector<double>& radii,
                               const GridSpec& target);

struct RegularFit {
    Vec2 nu;                 ///< outer normal of the profile's zero side is -nu
    std::vector<double> e;   ///< e >= 0, |e| = 1
    double residual = 0.0;   ///< sup misfit over target nodes in the closed unit ball
    double l2_misfit = 0.0;  ///< root mean square misfit over the same nodes
};

/// Best half-plane profile q (nu . y)^+ e for a frame.
RegularFit classify_regular(const BlowupFrame& frame, double q);
RegularFit classify_regular(const VectorField& frame, double q);

/// Component files <stem>_u<i>.fbm plus <stem>.json holding {x, r, tolerance}.
void export_frame(const BlowupFrame& frame, const std::filesystem::path& dir, const std::string& stem);

}  // namespace fbmin
