#include "sfa/sampler.hpp"

#include "sfa/csv.hpp"
#include "sfa/schedule.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace sfa {

namespace {
// schedule indices T-1 = k_0 > k_1 > ... > k_steps = 1, evenly spaced in k
std::vector<int> index_grid(int T, int steps) {
    if (steps < 1) throw std::invalid_argument("sampler: steps must be >= 1");
    if (steps > T - 2) steps = T - 2;
    std::vector<int> ks(static_cast<size_t>(steps) + 1);
    for (int j = 0; j <= steps; ++j) {
        const double v = (T - 1) - static_cast<double>(j) * (T - 2) / steps;
        ks[static_cast<size_t>(j)] = static_cast<int>(std::lround(v));
    }
    ks.front() = T - 1;
    ks.back() = 1;
    return ks;
}

void check_state(const Vec& x, const char* what, int step, uint64_t seed) {
    if (!all_finite(x)) {
        std::ostringstream msg;
        msg << what << ": non-finite state at step " << step << " (trajectory seed " << seed
            << ")";
        throw NumericalError(msg.str());
    }
}

void ode_integrate(const Field& field, const Schedule& sched, const std::vector<int>& ks, Vec& x,
                   uint64_t traj_seed) {
    const int d = field.dim;
    Vec g0(d), g1(d), x1(d);
    auto drift = [&](const Vec& y, int k, Vec& out) {
        field.eval(y.data(), k, out.data());
        for (int i = 0; i < d; ++i) out[i] += y[i];
    };
    for (size_t j = 0; j + 1 < ks.size(); ++j) {
        const int ka = ks[j], kb = ks[j + 1];
        const double h = sched.at(ka) - sched.at(kb);
        drift(x, ka, g0);
        for (int i = 0; i < d; ++i) x1[i] = x[i] + h * g0[i];
        drift(x1, kb, g1);
        for (int i = 0; i < d; ++i) x[i] += 0.5 * h * (g0[i] + g1[i]);
        check_state(x, "pf_ode_sample", static_cast<int>(j), traj_seed);
    }
    // last hop t(1) -> 0, field frozen at k = 1
    const double h = sched.at(1);
    drift(x, 1, g0);
    for (int i = 0; i < d; ++i) x1[i] = x[i] + h * g0[i];
    drift(x1, 1, g1);
    for (int i = 0; i < d; ++i) x[i] += 0.5 * h * (g0[i] + g1[i]);
    check_state(x, "pf_ode_sample", static_cast<int>(ks.size()), traj_seed);
}
} // namespace

Vec pf_ode_trajectory(const Field& field, const Schedule& sched, Vec x, int steps) {
    const auto ks = index_grid(sched.T, steps);
    ode_integrate(field, sched, ks, x, 0);
    return x;
}

SampleBatch pf_ode_sample(const Field& field, const Schedule& sched, int batch, int steps,
                          uint64_t master_seed, Exec mode) {
    if (batch < 1) throw std::invalid_argument("pf_ode_sample: batch must be >= 1");
    const auto ks = index_grid(sched.T, steps);
    SampleBatch out;
    out.method = "ode";
    out.steps = static_cast<int>(ks.size()); // field steps + final hop
    out.field_tag = field.tag;
    out.seed = master_seed;
    out.points.assign(static_cast<size_t>(batch), Vec());
    for_each_task(batch, mode, [&](int i) {
        std::ostringstream name;
        name << "sample.ode.i" << i;
        Rng rng(master_seed, name.str());
        Vec x(field.dim);
        rng.fill_normal(x.data(), field.dim);
        ode_integrate(field, sched, ks, x, static_cast<uint64_t>(i));
        out.points[static_cast<size_t>(i)] = std::move(x);
    });
    return out;
}

SampleBatch reverse_sde_sample(const Field& field, const Schedule& sched, int batch,
                               uint64_t master_seed, Exec mode) {
    if (batch < 1) throw std::invalid_argument("reverse_sde_sample: batch must be >= 1");
    const int d = field.dim;
    SampleBatch out;
    out.method = "sde";
    out.steps = sched.T - 1;
    out.field_tag = field.tag;
    out.seed = master_seed;
    out.points.assign(static_cast<size_t>(batch), Vec());
    for_each_task(batch, mode, [&](int i) {
        std::ostringstream name;
        name << "sample.sde.i" << i;
        Rng rng(master_seed, name.str());
        Vec x(d), s(d);
        rng.fill_normal(x.data(), d);
        for (int k = sched.T - 1; k >= 2; --k) {
            const double h = sched.at(k) - sched.at(k - 1);
            field.eval(x.data(), k, s.data());
            const double noise = std::sqrt(2.0 * h);
            for (int q = 0; q < d; ++q) x[q] += h * (x[q] + 2.0 * s[q]) + noise * rng.normal();
            if (k % 128 == 0) check_state(x, "reverse_sde_sample", k, static_cast<uint64_t>(i));
        }
        // drift-only hop t(1) -> 0
        const double h = sched.at(1);
        field.eval(x.data(), 1, s.data());
        for (int q = 0; q < d; ++q) x[q] += h * (x[q] + 2.0 * s[q]);
        check_state(x, "reverse_sde_sample", 0, static_cast<uint64_t>(i));
        out.points[static_cast<size_t>(i)] = std::move(x);
    });
    return out;
}

namespace {
// contiguous copy so the O(n^2) pair scans stay cache-friendly
struct Flat {
    int n = 0;
    int d = 0;
    Vec data;
    const double* row(int i) const { return data.data() + static_cast<size_t>(i) * d; }
};

Flat flatten(const std::vector<Vec>& pts) {
    Flat f;
    f.n = static_cast<int>(pts.size());
    f.d = static_cast<int>(pts.front().size());
    f.data.resize(static_cast<size_t>(f.n) * f.d);
    for (int i = 0; i < f.n; ++i)
        std::copy(pts[static_cast<size_t>(i)].begin(), pts[static_cast<size_t>(i)].end(),
                  f.data.begin() + static_cast<size_t>(i) * f.d);
    return f;
}

// deterministic two-pass reduction: per-row sums in parallel, then an
// index-ordered serial sum, so thread count never changes the bits
double pair_sum(const Flat& a, const Flat& b, Exec mode) {
    Vec row(static_cast<size_t>(a.n), 0.0);
    for_each_task(a.n, mode, [&](int i) {
        const double* x = a.row(i);
        double acc = 0.0;
        for (int j = 0; j < b.n; ++j) acc += dist2(x, b.row(j), a.d);
        row[static_cast<size_t>(i)] = acc;
    });
    double total = 0.0;
    for (double v : row) total += v;
    return total;
}

double energy_distance_flat(const Flat& a, const Flat& b, Exec mode) {
    const double n = a.n, m = b.n;
    const double cross = pair_sum(a, b, mode) / (n * m);
    const double within_a = pair_sum(a, a, mode) / (n * n);
    const double within_b = pair_sum(b, b, mode) / (m * m);
    return 2.0 * cross - within_a - within_b;
}
} // namespace

double energy_distance(const std::vector<Vec>& a, const std::vector<Vec>& b, Exec mode) {
    if (a.empty() || b.empty()) throw std::invalid_argument("energy_distance: empty batch");
    return energy_distance_flat(flatten(a), flatten(b), mode);
}

double energy_null_quantile(const std::vector<Vec>& a, const std::vector<Vec>& b, int reps,
                            double q, uint64_t seed, Exec mode) {
    if (a.empty() || b.empty()) throw std::invalid_argument("energy_null_quantile: empty batch");
    const Flat pool_a = flatten(a);
    const Flat pool_b = flatten(b);
    const int d = pool_a.d;
    const int total = pool_a.n + pool_b.n;
    const int half = total / 2;
    Vec dist(static_cast<size_t>(reps));
    std::vector<int> idx(static_cast<size_t>(total));
    Flat ha, hb;
    ha.d = hb.d = d;
    for (int r = 0; r < reps; ++r) {
        std::ostringstream name;
        name << "eval.null.r" << r;
        Rng rng(seed, name.str());
        for (int i = 0; i < total; ++i) idx[static_cast<size_t>(i)] = i;
        for (int i = total - 1; i > 0; --i)
            std::swap(idx[static_cast<size_t>(i)],
                      idx[rng.below(static_cast<uint64_t>(i) + 1)]);
        auto source_row = [&](int j) {
            return j < pool_a.n ? pool_a.row(j) : pool_b.row(j - pool_a.n);
        };
        ha.n = half;
        hb.n = total - half;
        ha.data.resize(static_cast<size_t>(ha.n) * d);
        hb.data.resize(static_cast<size_t>(hb.n) * d);
        for (int i = 0; i < half; ++i)
            std::copy_n(source_row(idx[static_cast<size_t>(i)]), d,
                        ha.data.begin() + static_cast<size_t>(i) * d);
        for (int i = half; i < total; ++i)
            std::copy_n(source_row(idx[static_cast<size_t>(i)]), d,
                        hb.data.begin() + static_cast<size_t>(i - half) * d);
        dist[static_cast<size_t>(r)] = energy_distance_flat(ha, hb, mode);
    }
    return quantile(dist, q);
}

Vec component_frequencies(const std::vector<Vec>& pts, const GaussianMixture& gmm) {
    Vec freq(static_cast<size_t>(gmm.components()), 0.0);
    for (const auto& p : pts) {
        int best = 0;
        double bd = 1e300;
        for (int c = 0; c < gmm.components(); ++c) {
            const double d2 = dist2(p.data(), gmm.means[static_cast<size_t>(c)].data(), gmm.dim);
            if (d2 < bd) {
                bd = d2;
                best = c;
            }
        }
        freq[static_cast<size_t>(best)] += 1.0;
    }
    for (double& f : freq) f /= static_cast<double>(pts.size());
    return freq;
}

SampleMetrics eval_samples(const SampleBatch& batch, const GaussianMixture& gmm,
                           uint64_t eval_seed, Exec mode) {
    if (batch.points.empty()) throw std::invalid_argument("eval_samples: empty batch");
    const int d = gmm.dim;
    const int n = static_cast<int>(batch.points.size());
    SampleMetrics mtr;

    Vec mean(static_cast<size_t>(d), 0.0);
    for (const auto& p : batch.points)
        for (int i = 0; i < d; ++i) mean[static_cast<size_t>(i)] += p[static_cast<size_t>(i)];
    for (double& v : mean) v /= n;
    const Vec target_mean = gmm.mean();
    mtr.mean_err = dist2(mean.data(), target_mean.data(), d);

    Mat cov(d, d);
    for (const auto& p : batch.points)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                cov(i, j) += (p[static_cast<size_t>(i)] - mean[static_cast<size_t>(i)]) *
                             (p[static_cast<size_t>(j)] - mean[static_cast<size_t>(j)]);
    for (double& v : cov.a) v /= n;
    const Mat target_cov = gmm.covariance();
    double frob = 0.0;
    for (size_t i = 0; i < cov.a.size(); ++i) {
        const double g = cov.a[i] - target_cov.a[i];
        frob += g * g;
    }
    mtr.cov_frob_err = std::sqrt(frob);

    Rng rng(eval_seed, "eval.ref");
    std::vector<Vec> ref;
    ref.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) ref.push_back(sample_data(gmm, rng));
    mtr.energy_distance = energy_distance(batch.points, ref, mode);

    const Vec freq = component_frequencies(batch.points, gmm);
    double werr = 0.0;
    for (int c = 0; c < gmm.components(); ++c)
        werr = std::max(werr, std::abs(freq[static_cast<size_t>(c)] -
                                       gmm.weights[static_cast<size_t>(c)]));
    mtr.weight_err_max = werr;
    return mtr;
}

std::string SampleMetrics::to_kv() const {
    std::ostringstream os;
    os << "mean_err=" << fmt_g17(mean_err) << "\ncov_frob_err=" << fmt_g17(cov_frob_err)
       << "\nenergy_distance=" << fmt_g17(energy_distance)
       << "\nweight_err_max=" << fmt_g17(weight_err_max) << "\n";
    return os.str();
}

void write_samples_csv(const SampleBatch& batch, std::ostream& os) {
    if (batch.points.empty()) return;
    const int d = static_cast<int>(batch.points.front().size());
    for (int i = 0; i < d; ++i) os << (i ? "," : "") << "x_" << i;
    os << "\n";
    for (const auto& p : batch.points) {
        for (int i = 0; i < d; ++i) {
            if (i) os << ",";
            os << fmt_g17(p[static_cast<size_t>(i)]);
        }
        os << "\n";
    }
}

} // namespace sfa
