#pragma once

#include "sfa/field.hpp"
#include "sfa/parallel.hpp"

#include <iosfwd>
#include <string>

namespace sfa {

struct SampleBatch {
    std::vector<Vec> points;
    std::string method; // "ode" | "sde"
    int steps = 0;
    std::string field_tag;
    uint64_t seed = 0;
};

/// Deterministic reverse transport dx/dtau = x + field(x, k) integrated with
/// Heun steps on a sub-grid of schedule indices from k = T-1 down to 1, then
/// one drift-only hop t(1) -> 0 with the field frozen at k = 1.
SampleBatch pf_ode_sample(const Field& field, const Schedule& sched, int batch, int steps,
                          uint64_t master_seed, Exec mode = Exec::Parallel);

// Euler-Maruyama on dx = [x + 2 field(x, k)] dtau + sqrt(2) dW over the full
// schedule grid, same endpoint handling as the ODE
SampleBatch reverse_sde_sample(const Field& field, const Schedule& sched, int batch,
                               uint64_t master_seed, Exec mode = Exec::Parallel);

// integrate one trajectory from a given terminal state (test hook)
Vec pf_ode_trajectory(const Field& field, const Schedule& sched, Vec x, int steps);

struct SampleMetrics {
    double mean_err = 0.0;      // || batch mean - mixture mean ||
    double cov_frob_err = 0.0;  // Frobenius gap to the mixture covariance
    double energy_distance = 0.0;
    double weight_err_max = 0.0; // nearest-mean component frequencies vs truth
    std::string to_kv() const;
};

SampleMetrics eval_samples(const SampleBatch& batch, const GaussianMixture& gmm,
                           uint64_t eval_seed, Exec mode = Exec::Parallel);

// energy distance between two point clouds (V-statistic form)
double energy_distance(const std::vector<Vec>& a, const std::vector<Vec>& b,
                       Exec mode = Exec::Parallel);

// null scale for "same distribution": pool the clouds, split in half at
// random `reps` times, take the q-quantile of the resulting distances
double energy_null_quantile(const std::vector<Vec>& a, const std::vector<Vec>& b, int reps,
                            double q, uint64_t seed, Exec mode = Exec::Parallel);

// empirical component frequencies by nearest mixture mean
Vec component_frequencies(const std::vector<Vec>& pts, const GaussianMixture& gmm);

void write_samples_csv(const SampleBatch& batch, std::ostream& os);

} // namespace sfa
