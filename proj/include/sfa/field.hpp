#pragma once

#include "sfa/gmm.hpp"
#include "sfa/schedule.hpp"

#include <functional>
#include <memory>
#include <string>

namespace sfa {

struct MlpParams;

/// Evaluatable vector field (x, k) -> R^D with provenance tag. Evaluation is
/// pure and thread-safe; `jac` (row-major D x D, exact) may be absent, in
/// which case audits fall back to finite differences.
struct Field {
    std::string tag; // analytic-score | neural | curl-perturbed
    int dim = 0;
    std::function<void(const double* x, int k, double* out)> eval;
    std::function<void(const double* x, int k, double* jac)> jac;

    Vec operator()(const Vec& x, int k) const {
        Vec out(dim);
        eval(x.data(), k, out.data());
        return out;
    }
};

// analytic score of the forward marginals; per-k mixtures precomputed once
Field make_score_field(const GaussianMixture& gmm, const Schedule& sched);

// analytic score plus amplitude * R(x), R rotating coordinate pairs
// (0,1), (2,3), ...: (a, b) -> (-b, a). Known non-conservative control.
Field make_curl_field(const GaussianMixture& gmm, const Schedule& sched, double amplitude);

Field make_mlp_field(std::shared_ptr<const MlpParams> params);

// time-independent wrapper around an arbitrary function, for tests
Field make_static_field(int dim, std::function<void(const double*, double*)> f,
                        std::string tag = "static");

} // namespace sfa
