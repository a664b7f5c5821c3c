#include "sfa/field.hpp"

#include "sfa/mlp.hpp"

#include <stdexcept>

namespace sfa {

namespace {
// one marginal mixture per schedule index, built once and shared read-only
struct MarginalTable {
    std::vector<GaussianMixture> at;
};

std::shared_ptr<const MarginalTable> make_marginals(const GaussianMixture& gmm,
                                                    const Schedule& sched) {
    auto tab = std::make_shared<MarginalTable>();
    tab->at.reserve(sched.T + 1);
    for (int k = 0; k <= sched.T; ++k) tab->at.push_back(marginal_params(gmm, sched.at(k)));
    return tab;
}
} // namespace

Field make_score_field(const GaussianMixture& gmm, const Schedule& sched) {
    gmm.validate();
    auto tab = make_marginals(gmm, sched);
    const int dim = gmm.dim;
    const int T = sched.T;
    auto check = [T](int k) {
        if (k < 0 || k > T) throw std::invalid_argument("field: index out of schedule range");
    };
    Field f;
    f.tag = "analytic-score";
    f.dim = dim;
    f.eval = [tab, check](const double* x, int k, double* out) {
        check(k);
        score_now(tab->at[static_cast<size_t>(k)], x, out);
    };
    f.jac = [tab, check](const double* x, int k, double* jac) {
        check(k);
        score_jacobian_now(tab->at[static_cast<size_t>(k)], x, jac);
    };
    return f;
}

Field make_curl_field(const GaussianMixture& gmm, const Schedule& sched, double amplitude) {
    if (gmm.dim % 2 != 0)
        throw std::invalid_argument("curl field needs an even dimension to pair coordinates");
    Field base = make_score_field(gmm, sched);
    const int dim = gmm.dim;
    const double a = amplitude;
    Field f;
    f.tag = "curl-perturbed";
    f.dim = dim;
    f.eval = [base, dim, a](const double* x, int k, double* out) {
        base.eval(x, k, out);
        for (int m = 0; m + 1 < dim; m += 2) {
            out[m] += -a * x[m + 1];
            out[m + 1] += a * x[m];
        }
    };
    f.jac = [base, dim, a](const double* x, int k, double* jac) {
        base.jac(x, k, jac);
        for (int m = 0; m + 1 < dim; m += 2) {
            jac[static_cast<size_t>(m) * dim + m + 1] += -a;
            jac[static_cast<size_t>(m + 1) * dim + m] += a;
        }
    };
    return f;
}

Field make_mlp_field(std::shared_ptr<const MlpParams> params) {
    params->validate();
    const int dim = params->dim;
    Field f;
    f.tag = "neural";
    f.dim = dim;
    f.eval = [params](const double* x, int k, double* out) {
        thread_local MlpScratch scratch;
        mlp_forward(*params, x, k, out, scratch);
    };
    f.jac = [params](const double* x, int k, double* jac) {
        thread_local MlpScratch scratch;
        mlp_jacobian(*params, x, k, jac, scratch);
    };
    return f;
}

Field make_static_field(int dim, std::function<void(const double*, double*)> fn, std::string tag) {
    Field f;
    f.tag = std::move(tag);
    f.dim = dim;
    f.eval = [fn](const double* x, int, double* out) { fn(x, out); };
    return f;
}

} // namespace sfa
