#include "sfa/audit.hpp"

#include "sfa/csv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace sfa {

namespace {
void eval_checked(const Field& field, const double* x, int k, double* out, int m) {
    field.eval(x, k, out);
    if (!all_finite(out, static_cast<size_t>(field.dim))) {
        std::ostringstream msg;
        msg << "non-finite field value on path point " << m << " (field " << field.tag
            << ", k=" << k << ")";
        throw NumericalError(msg.str());
    }
}
} // namespace

LoopEval loop_integral_detail(const Field& field, const ClosedPath& path, int subdivision) {
    // Each chord is also integrated with a finer trapezoid. The fine sum is
    // only used for the error floor: err(I) = (I - I_fine) k^2/(k^2-1) once
    // the per-chord rule is in its order-2 regime, and whenever the fine
    // value is below half the coarse one the bound 2 |I - I_fine| >= |I|
    // holds unconditionally. A field with true circulation keeps I_fine ~ I,
    // so the floor stays far below |I| and the violation is visible.
    if (subdivision < 2) throw std::invalid_argument("loop_integral_detail: subdivision >= 2");
    const int kSub = subdivision;
    const int d = path.dim;
    const int n = path.n();
    LoopEval ev;
    Vec s_cur(d), s_next(d), s_sub(d), s_prev(d), q(d);
    double abs_line = 0.0;
    eval_checked(field, path.point(0), path.k, s_cur.data(), 0);
    for (int m = 0; m < n; ++m) {
        const double* a = path.point(m);
        const double* b = path.point(m + 1);
        if (m + 1 == n) {
            // closed: reuse the first evaluation bit-for-bit
            eval_checked(field, path.point(0), path.k, s_next.data(), 0);
        } else {
            eval_checked(field, b, path.k, s_next.data(), m + 1);
        }
        double seg_dot = 0.0, mid_norm2 = 0.0, seg_len2 = 0.0;
        for (int i = 0; i < d; ++i) {
            const double dy = b[i] - a[i];
            seg_dot += 0.5 * (s_cur[i] + s_next[i]) * dy;
            const double mid = 0.5 * (a[i] + b[i]);
            mid_norm2 += mid * mid;
            seg_len2 += dy * dy;
        }
        const double seg_len = std::sqrt(seg_len2);
        ev.integral += seg_dot;
        ev.path_length += seg_len;
        ev.ratio_denom += std::sqrt(mid_norm2) * seg_len;
        abs_line += 0.5 * (norm2(s_cur.data(), d) + norm2(s_next.data(), d)) * seg_len;

        double fine = 0.0;
        s_prev = s_cur;
        for (int j = 1; j <= kSub; ++j) {
            const double* sj;
            if (j == kSub) {
                sj = s_next.data();
            } else {
                const double u = static_cast<double>(j) / kSub;
                for (int i = 0; i < d; ++i) q[i] = a[i] + u * (b[i] - a[i]);
                eval_checked(field, q.data(), path.k, s_sub.data(), m);
                sj = s_sub.data();
            }
            for (int i = 0; i < d; ++i)
                fine += 0.5 * (s_prev[i] + sj[i]) * (b[i] - a[i]) / kSub;
            if (j < kSub) s_prev = s_sub;
        }
        ev.refined += fine;
        std::swap(s_cur, s_next);
    }
    const double k2 = static_cast<double>(kSub) * kSub;
    ev.quad_floor =
        2.0 * (k2 / (k2 - 1.0)) * std::abs(ev.integral - ev.refined) + 1e-14 * abs_line;
    return ev;
}

double loop_integral(const Field& field, const ClosedPath& path) {
    const int d = path.dim;
    const int n = path.n();
    double acc = 0.0;
    Vec s_cur(d), s_next(d);
    eval_checked(field, path.point(0), path.k, s_cur.data(), 0);
    Vec s_first = s_cur;
    for (int m = 0; m < n; ++m) {
        const double* a = path.point(m);
        const double* b = path.point(m + 1);
        if (m + 1 == n)
            s_next = s_first;
        else
            eval_checked(field, b, path.k, s_next.data(), m + 1);
        for (int i = 0; i < d; ++i) acc += 0.5 * (s_cur[i] + s_next[i]) * (b[i] - a[i]);
        std::swap(s_cur, s_next);
    }
    return acc;
}

double nondimensional_ratio(const Field& field, const ClosedPath& path) {
    const LoopEval ev = loop_integral_detail(field, path);
    if (ev.ratio_denom == 0.0)
        throw std::domain_error("nondimensional_ratio: degenerate path at the origin");
    return 2.0 * ev.integral / ev.ratio_denom;
}

namespace {
AsymmetryRecord stats_from_diffs(std::vector<double>& diffs, const std::string& tag, int k,
                                 double t, int seed) {
    AsymmetryRecord rec;
    rec.field = tag;
    rec.k = k;
    rec.t = t;
    rec.seed = seed;
    rec.pairs = static_cast<int>(diffs.size());
    double acc = 0.0, mx = 0.0;
    for (double v : diffs) {
        acc += v;
        mx = std::max(mx, v);
    }
    rec.mean = acc / static_cast<double>(diffs.size());
    rec.max = mx;
    rec.q05 = quantile(diffs, 0.05);
    rec.q50 = quantile(diffs, 0.50);
    rec.q95 = quantile(diffs, 0.95);
    return rec;
}
} // namespace

AsymmetryRecord asymmetry_stats(const Field& field, const Vec& x, int k, double t,
                                int pair_budget, Rng& rng, int jac_cap, int fd_indices) {
    const int d = field.dim;
    if (pair_budget < 1) throw std::invalid_argument("asymmetry_stats: pair budget must be >= 1");
    std::vector<double> diffs;
    if (d <= jac_cap && field.jac) {
        Mat j(d, d);
        field.jac(x.data(), k, j.a.data());
        diffs.reserve(static_cast<size_t>(d) * (d - 1) / 2);
        for (int i = 0; i < d; ++i)
            for (int jj = i + 1; jj < d; ++jj) diffs.push_back(std::abs(j(i, jj) - j(jj, i)));
    } else {
        // sample a common index set for rows and columns so both J_ij and J_ji
        // exist in the sub-Jacobian; central differences per sampled column
        const int ns = std::min(fd_indices, d);
        std::vector<int> idx(d);
        for (int i = 0; i < d; ++i) idx[i] = i;
        for (int i = 0; i < ns; ++i)
            std::swap(idx[i], idx[i + static_cast<int>(rng.below(static_cast<uint64_t>(d - i)))]);
        idx.resize(ns);
        std::sort(idx.begin(), idx.end());
        Mat sub(ns, ns);
        Vec xp = x, fp(d), fm(d);
        for (int c = 0; c < ns; ++c) {
            const int j = idx[c];
            const double h = 1e-4 * std::max(1.0, std::abs(x[j]));
            xp[j] = x[j] + h;
            field.eval(xp.data(), k, fp.data());
            xp[j] = x[j] - h;
            field.eval(xp.data(), k, fm.data());
            xp[j] = x[j];
            for (int r = 0; r < ns; ++r) sub(r, c) = (fp[idx[r]] - fm[idx[r]]) / (2.0 * h);
        }
        diffs.reserve(static_cast<size_t>(ns) * (ns - 1) / 2);
        for (int r = 0; r < ns; ++r)
            for (int c = r + 1; c < ns; ++c) diffs.push_back(std::abs(sub(r, c) - sub(c, r)));
    }
    if (static_cast<int>(diffs.size()) > pair_budget) {
        // keep a seeded subset when the pair budget is tighter than D(D-1)/2
        for (int i = 0; i < pair_budget; ++i) {
            const size_t pick = i + rng.below(diffs.size() - i);
            std::swap(diffs[i], diffs[pick]);
        }
        diffs.resize(pair_budget);
    }
    return stats_from_diffs(diffs, field.tag, k, t, -1);
}

AuditResult audit_run(const Field& field, const GaussianMixture& gmm, const Schedule& sched,
                      const AuditSpec& spec, Exec mode) {
    gmm.validate();
    if (spec.samples_per_k < 1 || spec.ks.empty())
        throw std::invalid_argument("audit_run: empty audit spec");
    for (int k : spec.ks)
        if (k < 1 || k > sched.T)
            throw std::invalid_argument("audit_run: k outside {1..T}");

    const int nk = static_cast<int>(spec.ks.size());
    const int per = spec.samples_per_k;
    const int kinds = (spec.brownian ? 1 : 0) + (spec.rotation ? 1 : 0) + (spec.projection ? 1 : 0);
    const int tasks = nk * per;

    // analytic shell radius per k (projection paths)
    Vec radius(nk, 0.0);
    if (spec.projection) {
        Rng dummy(0);
        for (int i = 0; i < nk; ++i)
            radius[i] = shell_radius(sched.at(spec.ks[i]), gmm.dim, RadiusMethod::Analytic, dummy);
    }

    std::vector<std::optional<AuditRecord>> rec_slots(static_cast<size_t>(tasks) * kinds);
    std::vector<std::optional<AsymmetryRecord>> asym_slots(tasks);
    std::atomic<int> skipped{0};

    auto body = [&](int task) {
        const int ki = task / per;
        const int s = task % per;
        const int k = spec.ks[ki];
        const double t = sched.at(k);
        std::ostringstream name;
        name << "audit.k" << k << ".s" << s;
        Rng rng(spec.master_seed, name.str());
        try {
            const Vec x0 = sample_data(gmm, rng);
            const ForwardSample fs = forward_sample(x0, t, rng);
            int slot = task * kinds;
            auto push = [&](ClosedPath&& path) {
                path.k = k;
                const LoopEval ev = loop_integral_detail(field, path, spec.floor_subdivision);
                AuditRecord r;
                r.field = field.tag;
                r.kind = path.kind;
                r.k = k;
                r.t = t;
                r.seed = s;
                r.loop_integral = ev.integral;
                r.ratio = ev.ratio_denom > 0.0 ? 2.0 * ev.integral / ev.ratio_denom
                                               : std::numeric_limits<double>::quiet_NaN();
                r.path_length = ev.path_length;
                r.quad_floor = ev.quad_floor;
                rec_slots[static_cast<size_t>(slot++)] = std::move(r);
            };
            if (spec.brownian)
                push(brownian_bridge_path(fs.xt, spec.brownian_horizon, spec.brownian_n, rng));
            if (spec.rotation) push(rotation_path(x0, t, fs.eps, spec.rotation_n, rng));
            if (spec.projection) {
                std::vector<Vec> anchors;
                anchors.push_back(fs.xt);
                for (int a = 1; a < spec.proj_anchors; ++a)
                    anchors.push_back(forward_sample(x0, t, rng).xt);
                push(projection_path(x0, t, anchors, spec.proj_n_per_segment, radius[ki]));
            }
            AsymmetryRecord ar = asymmetry_stats(field, fs.xt, k, t, spec.pair_budget, rng,
                                                 spec.jac_cap, spec.fd_indices);
            ar.seed = s;
            asym_slots[static_cast<size_t>(task)] = std::move(ar);
        } catch (const std::exception&) {
            skipped.fetch_add(1, std::memory_order_relaxed);
        }
    };
    for_each_task(tasks, mode, body);

    AuditResult out;
    out.records.reserve(rec_slots.size());
    for (auto& r : rec_slots)
        if (r) out.records.push_back(std::move(*r));
    out.asym.reserve(asym_slots.size());
    for (auto& r : asym_slots)
        if (r) out.asym.push_back(std::move(*r));
    out.skipped = skipped.load();
    return out;
}

void write_integral_csv(const AuditResult& res, std::ostream& os) {
    os << "field,kind,k,t,seed,loop_integral,ratio,path_length,asym_mean,asym_max,asym_q50\n";
    // per-sample asymmetry columns are joined on (k, seed)
    std::map<std::pair<int, int>, const AsymmetryRecord*> by_sample;
    for (const auto& a : res.asym) by_sample[{a.k, a.seed}] = &a;
    for (const auto& r : res.records) {
        const auto it = by_sample.find({r.k, r.seed});
        const AsymmetryRecord* a = it == by_sample.end() ? nullptr : it->second;
        os << r.field << ',' << to_string(r.kind) << ',' << r.k << ',' << fmt_g17(r.t) << ','
           << r.seed << ',' << fmt_g17(r.loop_integral) << ',' << fmt_g17(r.ratio) << ','
           << fmt_g17(r.path_length) << ',' << (a ? fmt_g17(a->mean) : "nan") << ','
           << (a ? fmt_g17(a->max) : "nan") << ',' << (a ? fmt_g17(a->q50) : "nan") << "\n";
    }
}

void write_differential_csv(const AuditResult& res, std::ostream& os) {
    os << "field,k,t,seed,asym_mean,asym_max,asym_q05,asym_q50,asym_q95,pairs\n";
    for (const auto& a : res.asym)
        os << a.field << ',' << a.k << ',' << fmt_g17(a.t) << ',' << a.seed << ','
           << fmt_g17(a.mean) << ',' << fmt_g17(a.max) << ',' << fmt_g17(a.q05) << ','
           << fmt_g17(a.q50) << ',' << fmt_g17(a.q95) << ',' << a.pairs << "\n";
}

namespace {
void summary_rows(std::ostream& os, const std::string& field, const std::string& kind, int k,
                  double t, const std::string& quantity, const std::vector<double>& v) {
    if (v.empty()) return;
    double mean = 0.0, mn = v[0], mx = v[0];
    for (double x : v) {
        mean += x;
        mn = std::min(mn, x);
        mx = std::max(mx, x);
    }
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / (static_cast<double>(v.size()) - 1.0)) : 0.0;
    os << field << ',' << kind << ',' << k << ',' << fmt_g17(t) << ',' << quantity << ','
       << v.size() << ',' << fmt_g17(mean) << ',' << fmt_g17(sd) << ',' << fmt_g17(mn) << ','
       << fmt_g17(mx) << ',' << fmt_g17(quantile(v, 0.05)) << ',' << fmt_g17(quantile(v, 0.50))
       << ',' << fmt_g17(quantile(v, 0.95)) << "\n";
}
} // namespace

void write_summary_csv(const AuditResult& res, std::ostream& os) {
    os << "field,kind,k,t,quantity,count,mean,std,min,max,q05,q50,q95\n";
    std::map<std::tuple<std::string, PathKind, int>, std::vector<const AuditRecord*>> groups;
    for (const auto& r : res.records) groups[{r.field, r.kind, r.k}].push_back(&r);
    for (const auto& [key, rows] : groups) {
        std::vector<double> loop_abs, ratio_abs, floor;
        for (const auto* r : rows) {
            loop_abs.push_back(std::abs(r->loop_integral));
            ratio_abs.push_back(std::abs(r->ratio));
            floor.push_back(r->quad_floor);
        }
        const double t = rows.front()->t;
        const auto& [field, kind, k] = key;
        summary_rows(os, field, to_string(kind), k, t, "loop_abs", loop_abs);
        summary_rows(os, field, to_string(kind), k, t, "ratio_abs", ratio_abs);
        summary_rows(os, field, to_string(kind), k, t, "quad_floor", floor);
    }
    std::map<std::pair<std::string, int>, std::vector<const AsymmetryRecord*>> agroups;
    for (const auto& a : res.asym) agroups[{a.field, a.k}].push_back(&a);
    for (const auto& [key, rows] : agroups) {
        std::vector<double> mean, mx;
        for (const auto* a : rows) {
            mean.push_back(a->mean);
            mx.push_back(a->max);
        }
        const auto& [field, k] = key;
        const double t = rows.front()->t;
        summary_rows(os, field, "jacobian", k, t, "asym_mean", mean);
        summary_rows(os, field, "jacobian", k, t, "asym_max", mx);
    }
}

} // namespace sfa
