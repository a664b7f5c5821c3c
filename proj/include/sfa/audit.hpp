#pragma once

#include "sfa/field.hpp"
#include "sfa/parallel.hpp"
#include "sfa/paths.hpp"

#include <iosfwd>
#include <optional>

namespace sfa {

/// One closed-path evaluation: the loop integral (zero for a true score up to
/// quadrature error), the non-dimensional ratio comparing the circulation to
/// the drift scale, and a refinement-based estimate of the quadrature floor
/// so violations are always read relative to numerical error.
struct AuditRecord {
    std::string field;
    PathKind kind = PathKind::Brownian;
    int k = 0;
    double t = 0.0;
    int seed = 0; // sample index within the run; stream is audit.k<k>.s<seed>
    double loop_integral = 0.0;
    double ratio = 0.0;
    double path_length = 0.0;
    double quad_floor = 0.0;
};

struct AsymmetryRecord {
    std::string field;
    int k = 0;
    double t = 0.0;
    int seed = 0;
    double mean = 0.0;
    double max = 0.0;
    double q05 = 0.0;
    double q50 = 0.0;
    double q95 = 0.0;
    int pairs = 0;
};

struct LoopEval {
    double integral = 0.0;     // trapezoid over the stored points
    double refined = 0.0;      // same rule with chord midpoints added
    double quad_floor = 0.0;   // 2x Richardson error estimate + round-off guard
    double ratio_denom = 0.0;  // sum ||(y+y')/2|| ||dy||
    double path_length = 0.0;
};

// trapezoid quadrature sum_m 1/2 (s(y_m) + s(y_{m+1})) . (y_{m+1} - y_m),
// field evaluated at the path's stored index k
double loop_integral(const Field& field, const ClosedPath& path);

// subdivision controls how finely each chord is re-integrated for the error
// floor; 8 makes the floor sharp for rough (Brownian) paths, 2 is enough when
// only violation detection matters
LoopEval loop_integral_detail(const Field& field, const ClosedPath& path, int subdivision = 8);

// 2 * loop integral / circulation of ||y|| ||dy||; errors on a degenerate path
double nondimensional_ratio(const Field& field, const ClosedPath& path);

// |J_ij - J_ji| statistics at x: exact Jacobian when D <= jac_cap, otherwise
// a random sub-Jacobian by central finite differences
AsymmetryRecord asymmetry_stats(const Field& field, const Vec& x, int k, double t,
                                int pair_budget, Rng& rng, int jac_cap = 64,
                                int fd_indices = 64);

struct AuditSpec {
    std::vector<int> ks{50, 100, 250, 500, 750, 900, 950};
    int samples_per_k = 256;
    bool brownian = true;
    bool rotation = true;
    bool projection = true;
    int brownian_n = 1000;
    double brownian_horizon = 9.0;
    int rotation_n = 1000;
    int proj_anchors = 4;
    int proj_n_per_segment = 256;
    int pair_budget = 4096;
    int jac_cap = 64;
    int fd_indices = 64;
    int floor_subdivision = 8;
    uint64_t master_seed = 0;
};

struct AuditResult {
    std::vector<AuditRecord> records;
    std::vector<AsymmetryRecord> asym;
    int skipped = 0;
};

// full sweep over (k, sample, path kind); deterministic given the master
// seed regardless of execution mode
AuditResult audit_run(const Field& field, const GaussianMixture& gmm, const Schedule& sched,
                      const AuditSpec& spec, Exec mode = Exec::Parallel);

// CSV surfaces; integral.csv carries the per-sample Jacobian columns so one
// row fully describes a (sample, path) audit
void write_integral_csv(const AuditResult& res, std::ostream& os);
void write_differential_csv(const AuditResult& res, std::ostream& os);
void write_summary_csv(const AuditResult& res, std::ostream& os);

} // namespace sfa
