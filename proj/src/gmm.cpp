#include "sfa/gmm.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sfa {

namespace {
constexpr double kLog2Pi = 1.83787706640934548356;

// log N(x | mean, diag(var)) for one component
double log_gauss(const double* x, const Vec& mean, const Vec& var, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double z = x[i] - mean[i];
        s += z * z / var[i] + std::log(var[i]);
    }
    return -0.5 * (s + d * kLog2Pi);
}
} // namespace

void GaussianMixture::validate() const {
    const int m = components();
    if (dim <= 0 || m <= 0) throw std::invalid_argument("gmm: empty mixture");
    if (static_cast<int>(means.size()) != m || static_cast<int>(variances.size()) != m)
        throw std::invalid_argument("gmm: component count mismatch");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("gmm: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("gmm: weights must sum to 1");
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(means[i].size()) != dim || static_cast<int>(variances[i].size()) != dim)
            throw std::invalid_argument("gmm: component dimension mismatch");
        for (double v : variances[i])
            if (!(v > 0.0)) throw std::invalid_argument("gmm: variances must be positive");
    }
}

Vec GaussianMixture::mean() const {
    Vec m(dim, 0.0);
    for (int i = 0; i < components(); ++i)
        for (int d = 0; d < dim; ++d) m[d] += weights[i] * means[i][d];
    return m;
}

Mat GaussianMixture::covariance() const {
    const Vec m = mean();
    Mat c(dim, dim);
    for (int i = 0; i < components(); ++i) {
        for (int r = 0; r < dim; ++r) {
            for (int s = 0; s < dim; ++s)
                c(r, s) += weights[i] * (means[i][r] - m[r]) * (means[i][s] - m[s]);
            c(r, r) += weights[i] * variances[i][r];
        }
    }
    return c;
}

GaussianMixture marginal_params(const GaussianMixture& gmm, double t) {
    if (t < 0.0) throw std::invalid_argument("marginal_params: t must be >= 0");
    GaussianMixture out = gmm;
    const double a = std::exp(-t);
    const double a2 = a * a;
    const double noise = -std::expm1(-2.0 * t); // 1 - e^{-2t}
    for (int i = 0; i < out.components(); ++i)
        for (int d = 0; d < out.dim; ++d) {
            out.means[i][d] *= a;
            out.variances[i][d] = gmm.variances[i][d] * a2 + noise;
        }
    return out;
}

double log_density(const GaussianMixture& g, const double* x) {
    const int m = g.components();
    double best = -1e300;
    Vec lp(m);
    for (int i = 0; i < m; ++i) {
        lp[i] = std::log(g.weights[i]) + log_gauss(x, g.means[i], g.variances[i], g.dim);
        if (lp[i] > best) best = lp[i];
    }
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += std::exp(lp[i] - best);
    return best + std::log(acc);
}

namespace {
// responsibilities in log space with max-subtraction
void responsibilities(const GaussianMixture& g, const double* x, double* r) {
    const int m = g.components();
    double best = -1e300;
    for (int i = 0; i < m; ++i) {
        r[i] = std::log(g.weights[i]) + log_gauss(x, g.means[i], g.variances[i], g.dim);
        if (r[i] > best) best = r[i];
    }
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        r[i] = std::exp(r[i] - best);
        acc += r[i];
    }
    for (int i = 0; i < m; ++i) r[i] /= acc;
}
} // namespace

void score_now(const GaussianMixture& g, const double* x, double* out) {
    const int m = g.components();
    const int d = g.dim;
    Vec r(m);
    responsibilities(g, x, r.data());
    for (int i = 0; i < d; ++i) out[i] = 0.0;
    for (int c = 0; c < m; ++c)
        for (int i = 0; i < d; ++i) out[i] -= r[c] * (x[i] - g.means[c][i]) / g.variances[c][i];
}

void score(const GaussianMixture& gmm, const double* x, double t, double* out) {
    const GaussianMixture g = marginal_params(gmm, t);
    score_now(g, x, out);
}

Vec score(const GaussianMixture& gmm, const Vec& x, double t) {
    Vec out(gmm.dim);
    score(gmm, x.data(), t, out.data());
    return out;
}

void score_jacobian_now(const GaussianMixture& g, const double* x, double* jac) {
    const int m = g.components();
    const int d = g.dim;
    Vec r(m);
    responsibilities(g, x, r.data());
    Vec sc(d, 0.0);       // mixture score
    Mat si(m, d);         // per-component scores
    for (int c = 0; c < m; ++c)
        for (int i = 0; i < d; ++i) {
            si(c, i) = -(x[i] - g.means[c][i]) / g.variances[c][i];
            sc[i] += r[c] * si(c, i);
        }
    // J = -sum_c r_c diag(1/v_c) + sum_c r_c s_c s_c^T - s s^T
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double acc = -sc[i] * sc[j];
            for (int c = 0; c < m; ++c) acc += r[c] * si(c, i) * si(c, j);
            if (i == j)
                for (int c = 0; c < m; ++c) acc -= r[c] / g.variances[c][i];
            jac[static_cast<size_t>(i) * d + j] = acc;
        }
}

double score_divergence_now(const GaussianMixture& g, const double* x) {
    const int m = g.components();
    const int d = g.dim;
    Vec r(m);
    responsibilities(g, x, r.data());
    Vec sc(d, 0.0);
    double acc = 0.0;
    for (int c = 0; c < m; ++c) {
        double s2 = 0.0;
        for (int i = 0; i < d; ++i) {
            const double sci = -(x[i] - g.means[c][i]) / g.variances[c][i];
            sc[i] += r[c] * sci;
            s2 += sci * sci;
            acc -= r[c] / g.variances[c][i];
        }
        acc += r[c] * s2;
    }
    return acc - dot(sc.data(), sc.data(), d);
}

Vec wgf_velocity(const GaussianMixture& gmm, const Vec& x, double t) {
    Vec v = score(gmm, x, t);
    for (int i = 0; i < gmm.dim; ++i) v[i] = -x[i] - v[i];
    return v;
}

Vec sample_data(const GaussianMixture& gmm, Rng& rng) {
    const double u = rng.uniform();
    int c = gmm.components() - 1;
    double acc = 0.0;
    for (int i = 0; i < gmm.components(); ++i) {
        acc += gmm.weights[i];
        if (u <= acc) {
            c = i;
            break;
        }
    }
    Vec x(gmm.dim);
    for (int i = 0; i < gmm.dim; ++i)
        x[i] = gmm.means[c][i] + std::sqrt(gmm.variances[c][i]) * rng.normal();
    return x;
}

std::string mixture_to_config(const GaussianMixture& g) {
    g.validate();
    std::ostringstream os;
    os << "mixture.d = " << g.dim << "\n";
    os << "mixture.weights =";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << ' ' << buf;
    };
    for (double w : g.weights) put(w);
    os << "\n";
    for (int c = 0; c < g.components(); ++c) {
        os << "mixture.mean." << c << " =";
        for (double v : g.means[static_cast<size_t>(c)]) put(v);
        os << "\nmixture.var." << c << " =";
        for (double v : g.variances[static_cast<size_t>(c)]) put(v);
        os << "\n";
    }
    return os.str();
}

GaussianMixture make_preset(const std::string& name, int dim) {
    GaussianMixture g;
    if (name == "stdnormal") {
        g.dim = dim;
        g.weights = {1.0};
        g.means = {Vec(dim, 0.0)};
        g.variances = {Vec(dim, 1.0)};
    } else if (name == "default") {
        // D=8, M=4: equal weights, means on the radius-4 sphere from a fixed
        // stream, per-coordinate variances in [0.3, 1.5]
        const int d = 8, m = 4;
        g.dim = d;
        g.weights.assign(m, 1.0 / m);
        Rng rng(0x5fa0u, "preset.default");
        for (int c = 0; c < m; ++c) {
            Vec mu(d);
            rng.fill_normal(mu.data(), d);
            const double r = norm2(mu);
            for (double& v : mu) v *= 4.0 / r;
            g.means.push_back(std::move(mu));
            Vec var(d);
            for (double& v : var) v = rng.uniform(0.3, 1.5);
            g.variances.push_back(std::move(var));
        }
    } else {
        throw std::invalid_argument("unknown mixture preset: " + name);
    }
    g.validate();
    return g;
}

} // namespace sfa
