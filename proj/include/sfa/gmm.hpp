#pragma once

#include "sfa/linalg.hpp"
#include "sfa/rng.hpp"

#include <string>

namespace sfa {

/// Gaussian mixture with diagonal per-component covariances. Under the
/// forward OU process every time-t marginal is again a mixture of the same
/// form, so densities, scores and score Jacobians stay closed-form. This is
/// the exactly-conservative ground truth every audit is measured against.
struct GaussianMixture {
    int dim = 0;
    Vec weights;      // simplex, length M
    std::vector<Vec> means;     // M x dim
    std::vector<Vec> variances; // M x dim, strictly positive

    int components() const { return static_cast<int>(weights.size()); }
    void validate() const; // throws std::invalid_argument on broken invariants

    Vec mean() const;     // mixture mean
    Mat covariance() const;
};

// mixture describing the forward marginal rho(., t):
// component means decay by e^{-t}, variances relax toward 1
GaussianMixture marginal_params(const GaussianMixture& gmm, double t);

// log density of the mixture itself (log-sum-exp over components)
double log_density(const GaussianMixture& gmm_t, const double* x);
inline double log_density(const GaussianMixture& gmm_t, const Vec& x) {
    return log_density(gmm_t, x.data());
}

// gradient of log_density of the time-t marginal at x
void score(const GaussianMixture& gmm, const double* x, double t, double* out);
Vec score(const GaussianMixture& gmm, const Vec& x, double t);

// score of a mixture at its own time (no further marginalization)
void score_now(const GaussianMixture& gmm_t, const double* x, double* out);

// exact Jacobian of score_now; symmetric by construction up to round-off
void score_jacobian_now(const GaussianMixture& gmm_t, const double* x, double* jac);

// trace of the score Jacobian, without forming the matrix
double score_divergence_now(const GaussianMixture& gmm_t, const double* x);

// v = -x - score(x, t), the steepest-descent transport velocity
Vec wgf_velocity(const GaussianMixture& gmm, const Vec& x, double t);

Vec sample_data(const GaussianMixture& gmm, Rng& rng);

// named presets; "default" is the D=8, M=4 target used by all the shipped
// numbers, "stdnormal" is N(0, I) in the requested dimension
GaussianMixture make_preset(const std::string& name, int dim = 8);

// mixture.* config section describing the mixture; parses back to an
// identical object through the run-config loader
std::string mixture_to_config(const GaussianMixture& gmm);

} // namespace sfa
