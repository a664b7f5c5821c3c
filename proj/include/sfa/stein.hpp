#pragma once

#include "sfa/field.hpp"
#include "sfa/mlp.hpp"
#include "sfa/parallel.hpp"

#include <iosfwd>

namespace sfa {

/// Per-sample record of the error field e = s - NN and its Stein residual
/// div(e) + s.e; a residual of zero means the error does not perturb density
/// transport even when e itself is large.
struct SteinRecord {
    int k = 0;
    double t = 0.0;
    int seed = 0;
    double e_l2 = 0.0;
    double residual = 0.0;
    double ref_scale = 0.0; // ||x_t||, the magnitude of the decaying drift
};

struct SteinAggregate {
    int k = 0;
    double t = 0.0;
    int count = 0;
    double e_l2_mean = 0.0;
    double e_l2_std = 0.0;
    double resid_mean = 0.0;      // signed; near zero when errors cancel
    double resid_mean_abs = 0.0;  // per-sample magnitude scale
    double resid_std = 0.0;
    double resid_q05 = 0.0;
    double resid_q50 = 0.0;
    double resid_q95 = 0.0;
    double ref_mean = 0.0;
};

// e(x, t(k)) = analytic score - field
Vec error_field(const GaussianMixture& gmm, const Field& field, const Schedule& sched,
                const Vec& x, int k);

// div(e) from exact Jacobian traces plus the score inner product; requires
// the field to expose an exact Jacobian at desk scale
double stein_residual(const GaussianMixture& gmm, const Field& field, const Schedule& sched,
                      const Vec& x, int k, int jac_cap = 64);

struct SteinResult {
    std::vector<SteinRecord> records;
    std::vector<SteinAggregate> aggregates; // one per k, in spec order
};

SteinResult stein_stats(const GaussianMixture& gmm, const Field& field, const Schedule& sched,
                        const std::vector<int>& ks, int samples_per_k, uint64_t master_seed,
                        Exec mode = Exec::Parallel);

void write_stein_csv(const SteinResult& res, std::ostream& os);
void write_stein_agg_csv(const SteinResult& res, std::ostream& os);

} // namespace sfa
