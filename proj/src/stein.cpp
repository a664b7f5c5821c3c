#include "sfa/stein.hpp"

#include "sfa/csv.hpp"
#include "sfa/schedule.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace sfa {

Vec error_field(const GaussianMixture& gmm, const Field& field, const Schedule& sched,
                const Vec& x, int k) {
    if (k < 1) throw std::invalid_argument("error_field: k must be >= 1");
    const GaussianMixture g = marginal_params(gmm, sched.at(k));
    Vec e(gmm.dim), nn(gmm.dim);
    score_now(g, x.data(), e.data());
    field.eval(x.data(), k, nn.data());
    for (int i = 0; i < gmm.dim; ++i) e[i] -= nn[i];
    return e;
}

double stein_residual(const GaussianMixture& gmm, const Field& field, const Schedule& sched,
                      const Vec& x, int k, int jac_cap) {
    if (k < 1) throw std::invalid_argument("stein_residual: k must be >= 1");
    if (gmm.dim > jac_cap)
        throw std::invalid_argument("stein_residual: dimension exceeds the exact-Jacobian cap");
    if (!field.jac) throw std::invalid_argument("stein_residual: field lacks an exact Jacobian");
    const int d = gmm.dim;
    const GaussianMixture g = marginal_params(gmm, sched.at(k));

    Vec s(d), nn(d);
    score_now(g, x.data(), s.data());
    field.eval(x.data(), k, nn.data());

    // div(e) = tr(J_s) - tr(J_field); both traces are summed in the same
    // order so a zero error field yields exactly zero
    Mat js(d, d), jf(d, d);
    score_jacobian_now(g, x.data(), js.a.data());
    field.jac(x.data(), k, jf.a.data());
    double div_score = 0.0, div_field = 0.0;
    for (int i = 0; i < d; ++i) div_score += js(i, i);
    for (int i = 0; i < d; ++i) div_field += jf(i, i);
    const double div_e = div_score - div_field;

    double inner = 0.0;
    for (int i = 0; i < d; ++i) inner += s[i] * (s[i] - nn[i]);
    return div_e + inner;
}

SteinResult stein_stats(const GaussianMixture& gmm, const Field& field, const Schedule& sched,
                        const std::vector<int>& ks, int samples_per_k, uint64_t master_seed,
                        Exec mode) {
    if (ks.empty() || samples_per_k < 1)
        throw std::invalid_argument("stein_stats: empty spec");
    const int nk = static_cast<int>(ks.size());
    const int tasks = nk * samples_per_k;
    SteinResult out;
    out.records.resize(static_cast<size_t>(tasks));
    for_each_task(tasks, mode, [&](int task) {
        const int ki = task / samples_per_k;
        const int s = task % samples_per_k;
        const int k = ks[static_cast<size_t>(ki)];
        const double t = sched.at(k);
        std::ostringstream name;
        name << "stein.k" << k << ".s" << s;
        Rng rng(master_seed, name.str());
        const Vec x0 = sample_data(gmm, rng);
        const ForwardSample fs = forward_sample(x0, t, rng);
        SteinRecord rec;
        rec.k = k;
        rec.t = t;
        rec.seed = s;
        rec.e_l2 = norm2(error_field(gmm, field, sched, fs.xt, k));
        rec.residual = stein_residual(gmm, field, sched, fs.xt, k);
        rec.ref_scale = norm2(fs.xt);
        out.records[static_cast<size_t>(task)] = rec;
    });

    out.aggregates.reserve(static_cast<size_t>(nk));
    for (int ki = 0; ki < nk; ++ki) {
        SteinAggregate agg;
        agg.k = ks[static_cast<size_t>(ki)];
        agg.t = sched.at(agg.k);
        agg.count = samples_per_k;
        std::vector<double> resid;
        resid.reserve(static_cast<size_t>(samples_per_k));
        double e_mean = 0.0, r_mean = 0.0, r_abs = 0.0, ref = 0.0;
        for (int s = 0; s < samples_per_k; ++s) {
            const auto& rec = out.records[static_cast<size_t>(ki * samples_per_k + s)];
            e_mean += rec.e_l2;
            r_mean += rec.residual;
            r_abs += std::abs(rec.residual);
            ref += rec.ref_scale;
            resid.push_back(rec.residual);
        }
        const double n = samples_per_k;
        agg.e_l2_mean = e_mean / n;
        agg.resid_mean = r_mean / n;
        agg.resid_mean_abs = r_abs / n;
        agg.ref_mean = ref / n;
        double ev = 0.0, rv = 0.0;
        for (int s = 0; s < samples_per_k; ++s) {
            const auto& rec = out.records[static_cast<size_t>(ki * samples_per_k + s)];
            ev += (rec.e_l2 - agg.e_l2_mean) * (rec.e_l2 - agg.e_l2_mean);
            rv += (rec.residual - agg.resid_mean) * (rec.residual - agg.resid_mean);
        }
        agg.e_l2_std = samples_per_k > 1 ? std::sqrt(ev / (n - 1.0)) : 0.0;
        agg.resid_std = samples_per_k > 1 ? std::sqrt(rv / (n - 1.0)) : 0.0;
        agg.resid_q05 = quantile(resid, 0.05);
        agg.resid_q50 = quantile(resid, 0.50);
        agg.resid_q95 = quantile(resid, 0.95);
        out.aggregates.push_back(agg);
    }
    return out;
}

void write_stein_csv(const SteinResult& res, std::ostream& os) {
    os << "k,t,seed,e_l2,residual,ref_scale\n";
    for (const auto& r : res.records)
        os << r.k << ',' << fmt_g17(r.t) << ',' << r.seed << ',' << fmt_g17(r.e_l2) << ','
           << fmt_g17(r.residual) << ',' << fmt_g17(r.ref_scale) << "\n";
}

void write_stein_agg_csv(const SteinResult& res, std::ostream& os) {
    os << "k,t,count,e_l2_mean,e_l2_std,resid_mean,resid_mean_abs,resid_std,resid_q05,resid_q50,"
          "resid_q95,ref_mean\n";
    for (const auto& a : res.aggregates)
        os << a.k << ',' << fmt_g17(a.t) << ',' << a.count << ',' << fmt_g17(a.e_l2_mean) << ','
           << fmt_g17(a.e_l2_std) << ',' << fmt_g17(a.resid_mean) << ','
           << fmt_g17(a.resid_mean_abs) << ',' << fmt_g17(a.resid_std) << ','
           << fmt_g17(a.resid_q05) << ',' << fmt_g17(a.resid_q50) << ',' << fmt_g17(a.resid_q95)
           << ',' << fmt_g17(a.ref_mean) << "\n";
}

} // namespace sfa
