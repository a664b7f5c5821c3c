#pragma once

#include "sfa/linalg.hpp"
#include "sfa/rng.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sfa {

enum class PathKind { Brownian, Rotation, Projection };

const char* to_string(PathKind k);

/// Closed polyline in R^D on which loop integrals are evaluated. The first
/// and last points are bitwise equal by construction; `k` is the schedule
/// index at which a field will be evaluated along the whole path.
struct ClosedPath {
    PathKind kind = PathKind::Brownian;
    int dim = 0;
    int k = 0;
    std::vector<double> pts; // (n()+1) x dim, row-major
    struct Meta {
        double horizon = 0.0;        // Brownian fictitious horizon U
        int anchors = 0;             // projection anchor count
        double radius = 0.0;         // projection shell radius
        std::vector<int> pairing;    // rotation coordinate pairing
        int tie_breaks = 0;          // projection points that hit the center
    } meta;

    int n() const { return static_cast<int>(pts.size()) / dim - 1; }
    const double* point(int m) const { return pts.data() + static_cast<size_t>(m) * dim; }
    double* point(int m) { return pts.data() + static_cast<size_t>(m) * dim; }
    double length() const;
    void validate() const;
};

// Brownian bridge X_u = W_u - (u/U) W_U on n uniform steps of [0, U],
// shifted to start and end at xt
ClosedPath brownian_bridge_path(const Vec& xt, double horizon, int n, Rng& rng);

// rotate randomly paired noise coordinates through a full turn with common
// angular velocity; the path stays inside the corrupted distribution's bulk
ClosedPath rotation_path(const Vec& x0, double t, const Vec& eps, int n, Rng& rng);

// connect corrupted samples by chord interpolation projected radially onto
// the shell of radius `radius` about the decayed mean x0 e^{-t}
ClosedPath projection_path(const Vec& x0, double t, const std::vector<Vec>& anchors,
                           int n_per_segment, double radius);

enum class RadiusMethod { Analytic, MonteCarlo };

// typical-set shell radius sqrt(1-e^{-2t}) * E||eps||; the chi mean is
// evaluated in closed form or by 10^4-draw Monte Carlo
double shell_radius(double t, int dim, RadiusMethod method, Rng& rng);

// one point per row, columns x_0..x_{D-1}
void write_path_csv(const ClosedPath& path, std::ostream& os);

// coarse view for refinement studies: every `stride`-th point, re-closed
ClosedPath subsample_path(const ClosedPath& path, int stride);

} // namespace sfa
