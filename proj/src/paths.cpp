#include "sfa/paths.hpp"

#include "sfa/csv.hpp"
#include "sfa/schedule.hpp"

#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>

namespace sfa {

const char* to_string(PathKind k) {
    switch (k) {
        case PathKind::Brownian: return "brownian";
        case PathKind::Rotation: return "rotation";
        case PathKind::Projection: return "projection";
    }
    return "?";
}

double ClosedPath::length() const {
    double len = 0.0;
    for (int m = 0; m < n(); ++m) len += dist2(point(m), point(m + 1), dim);
    return len;
}

void ClosedPath::validate() const {
    if (dim <= 0 || n() < 3) throw std::invalid_argument("path: need at least 3 segments");
    if (!all_finite(pts.data(), pts.size())) throw std::invalid_argument("path: non-finite point");
    if (std::memcmp(point(0), point(n()), sizeof(double) * dim) != 0)
        throw std::invalid_argument("path: endpoints not bitwise equal");
}

ClosedPath brownian_bridge_path(const Vec& xt, double horizon, int n, Rng& rng) {
    if (n < 3) throw std::invalid_argument("brownian_bridge_path: n must be >= 3");
    if (horizon <= 0.0) throw std::invalid_argument("brownian_bridge_path: horizon must be > 0");
    const int d = static_cast<int>(xt.size());
    ClosedPath p;
    p.kind = PathKind::Brownian;
    p.dim = d;
    p.meta.horizon = horizon;
    p.pts.resize(static_cast<size_t>(n + 1) * d);

    // W on the uniform grid; p temporarily stores W
    const double step_sd = std::sqrt(horizon / n);
    for (int i = 0; i < d; ++i) p.point(0)[i] = 0.0;
    for (int m = 1; m <= n; ++m) {
        double* cur = p.point(m);
        const double* prev = p.point(m - 1);
        for (int i = 0; i < d; ++i) cur[i] = prev[i] + step_sd * rng.normal();
    }
    // bridge: subtract (m/n) W_n, then shift by xt
    const double* wn = p.point(n);
    Vec wend(wn, wn + d);
    for (int m = 0; m <= n; ++m) {
        const double u = static_cast<double>(m) / n;
        double* cur = p.point(m);
        for (int i = 0; i < d; ++i) cur[i] = xt[i] + (cur[i] - u * wend[i]);
    }
    std::memcpy(p.point(n), p.point(0), sizeof(double) * d);
    return p;
}

ClosedPath rotation_path(const Vec& x0, double t, const Vec& eps, int n, Rng& rng) {
    const int d = static_cast<int>(x0.size());
    if (d % 2 != 0) throw std::invalid_argument("rotation_path: dimension must be even");
    if (t <= 0.0) throw std::invalid_argument("rotation_path: t must be > 0");
    if (n < 3) throw std::invalid_argument("rotation_path: n must be >= 3");
    ClosedPath p;
    p.kind = PathKind::Rotation;
    p.dim = d;
    p.pts.resize(static_cast<size_t>(n + 1) * d);

    // seeded shuffle fixes the coordinate pairing for this path
    std::vector<int> perm(d);
    for (int i = 0; i < d; ++i) perm[i] = i;
    for (int i = d - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.below(static_cast<uint64_t>(i) + 1)]);
    p.meta.pairing = perm;

    const double decay = ou_decay(t);
    const double noise = std::sqrt(ou_var(t));
    const double two_pi = 6.28318530717958647692;
    Vec rotated(d);
    for (int m = 0; m < n; ++m) {
        const double u = static_cast<double>(m) / n;
        const double c = std::cos(two_pi * u);
        const double s = std::sin(two_pi * u);
        for (int q = 0; q + 1 < d; q += 2) {
            const int i = perm[q], j = perm[q + 1];
            rotated[i] = c * eps[i] + s * eps[j];
            rotated[j] = -s * eps[i] + c * eps[j];
        }
        double* cur = p.point(m);
        for (int i = 0; i < d; ++i) cur[i] = x0[i] * decay + noise * rotated[i];
    }
    std::memcpy(p.point(n), p.point(0), sizeof(double) * d);
    return p;
}

namespace {
// radial projection onto the sphere; points that land on the center get
// nudged along a deterministic axis (alternating sign per segment) first
void project_radial(const double* q, const Vec& center, double radius, int d, int seg,
                    const double* seg_dir, double* out, int* tie_breaks) {
    Vec dir(d);
    double r = 0.0;
    for (int i = 0; i < d; ++i) {
        dir[i] = q[i] - center[i];
        r += dir[i] * dir[i];
    }
    r = std::sqrt(r);
    if (r < 1e-12 * radius) {
        int axis = 0;
        double best = std::abs(seg_dir[0]);
        for (int i = 1; i < d; ++i)
            if (std::abs(seg_dir[i]) < best) {
                best = std::abs(seg_dir[i]);
                axis = i;
            }
        for (int i = 0; i < d; ++i) dir[i] = 0.0;
        dir[axis] = seg % 2 == 0 ? 1e-8 : -1e-8;
        r = 1e-8;
        ++*tie_breaks;
    }
    for (int i = 0; i < d; ++i) out[i] = center[i] + radius * dir[i] / r;
}
} // namespace

ClosedPath projection_path(const Vec& x0, double t, const std::vector<Vec>& anchors,
                           int n_per_segment, double radius) {
    const int d = static_cast<int>(x0.size());
    const int m = static_cast<int>(anchors.size());
    if (m < 2) throw std::invalid_argument("projection_path: need at least 2 anchors");
    if (t <= 0.0) throw std::invalid_argument("projection_path: t must be > 0");
    if (radius <= 0.0) throw std::invalid_argument("projection_path: radius must be > 0");
    if (n_per_segment < 2) throw std::invalid_argument("projection_path: n_per_segment must be >= 2");

    ClosedPath p;
    p.kind = PathKind::Projection;
    p.dim = d;
    p.meta.anchors = m;
    p.meta.radius = radius;

    Vec center(d);
    const double decay = ou_decay(t);
    for (int i = 0; i < d; ++i) center[i] = x0[i] * decay;

    Vec seg_dir(d);
    std::vector<Vec> on_shell(m, Vec(d));
    for (int a = 0; a < m; ++a) {
        for (int i = 0; i < d; ++i) seg_dir[i] = 1.0; // unused placeholder direction
        project_radial(anchors[a].data(), center, radius, d, 0, seg_dir.data(),
                       on_shell[a].data(), &p.meta.tie_breaks);
    }

    p.pts.resize(static_cast<size_t>(m * n_per_segment + 1) * d);
    Vec chord(d);
    int idx = 0;
    for (int a = 0; a < m; ++a) {
        const Vec& from = on_shell[a];
        const Vec& to = on_shell[(a + 1) % m];
        for (int i = 0; i < d; ++i) seg_dir[i] = to[i] - from[i];
        for (int s = 0; s < n_per_segment; ++s) {
            const double u = static_cast<double>(s) / n_per_segment;
            for (int i = 0; i < d; ++i) chord[i] = from[i] + u * seg_dir[i];
            project_radial(chord.data(), center, radius, d, a, seg_dir.data(), p.point(idx),
                           &p.meta.tie_breaks);
            ++idx;
        }
    }
    std::memcpy(p.point(idx), p.point(0), sizeof(double) * d);
    return p;
}

double shell_radius(double t, int dim, RadiusMethod method, Rng& rng) {
    if (t <= 0.0) throw std::invalid_argument("shell_radius: t must be > 0");
    const double noise = std::sqrt(ou_var(t));
    double chi_mean = 0.0;
    if (method == RadiusMethod::Analytic) {
        chi_mean = std::sqrt(2.0) *
                   std::exp(std::lgamma((dim + 1) / 2.0) - std::lgamma(dim / 2.0));
    } else {
        const int draws = 10000;
        Vec e(dim);
        for (int s = 0; s < draws; ++s) {
            rng.fill_normal(e.data(), dim);
            chi_mean += norm2(e);
        }
        chi_mean /= draws;
    }
    return noise * chi_mean;
}

void write_path_csv(const ClosedPath& path, std::ostream& os) {
    for (int i = 0; i < path.dim; ++i) os << (i ? "," : "") << "x_" << i;
    os << "\n";
    for (int m = 0; m <= path.n(); ++m) {
        const double* p = path.point(m);
        for (int i = 0; i < path.dim; ++i) {
            if (i) os << ",";
            os << fmt_g17(p[i]);
        }
        os << "\n";
    }
}

ClosedPath subsample_path(const ClosedPath& path, int stride) {
    if (stride < 1 || path.n() % stride != 0)
        throw std::invalid_argument("subsample_path: stride must divide the segment count");
    ClosedPath out;
    out.kind = path.kind;
    out.dim = path.dim;
    out.k = path.k;
    out.meta = path.meta;
    const int n = path.n() / stride;
    out.pts.resize(static_cast<size_t>(n + 1) * path.dim);
    for (int m = 0; m <= n; ++m)
        std::memcpy(out.point(m), path.point(m * stride), sizeof(double) * path.dim);
    return out;
}

} // namespace sfa
