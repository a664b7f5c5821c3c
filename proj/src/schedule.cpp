#include "sfa/schedule.hpp"

#include "sfa/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace sfa {

double Schedule::at(int k) const {
    if (k < 0 || k > T) throw std::invalid_argument("schedule index out of range");
    return t[static_cast<size_t>(k)];
}

Schedule make_schedule(int T, double offset, double t_max_clamp) {
    if (T <= 0) throw std::invalid_argument("schedule T must be positive");
    if (t_max_clamp <= 0.0) throw std::invalid_argument("t_max_clamp must be positive");
    Schedule s;
    s.T = T;
    s.offset = offset;
    s.t_max_clamp = t_max_clamp;
    s.t.resize(static_cast<size_t>(T) + 1);
    const double half_pi = 1.57079632679489661923;
    const double f0 = std::cos(offset / (1.0 + offset) * half_pi);
    s.t[0] = 0.0;
    for (int k = 1; k <= T; ++k) {
        const double f = std::cos((static_cast<double>(k) / T + offset) / (1.0 + offset) * half_pi);
        double tk = t_max_clamp;
        if (f > 0.0) {
            tk = -0.5 * std::log(f / f0);
            if (!std::isfinite(tk) || tk > t_max_clamp) tk = t_max_clamp;
        }
        s.t[static_cast<size_t>(k)] = tk;
    }
    return s;
}

double cosine_time(int k, const Schedule& s) { return s.at(k); }

ForwardSample forward_sample(const Vec& x0, double t, Rng& rng) {
    if (t < 0.0) throw std::invalid_argument("forward_sample: t must be >= 0");
    if (!all_finite(x0)) throw std::invalid_argument("forward_sample: x0 must be finite");
    const int d = static_cast<int>(x0.size());
    ForwardSample fs;
    fs.x0 = x0;
    fs.t = t;
    fs.eps.resize(d);
    rng.fill_normal(fs.eps.data(), d);
    fs.xt.resize(d);
    const double a = ou_decay(t);
    const double b = std::sqrt(ou_var(t));
    for (int i = 0; i < d; ++i) fs.xt[i] = x0[i] * a + b * fs.eps[i];
    return fs;
}

Vec conditional_score(const Vec& xt, const Vec& x0, double t) {
    if (t <= 0.0) throw std::domain_error("conditional_score: degenerate kernel at t <= 0");
    const double a = ou_decay(t);
    const double v = ou_var(t);
    Vec out(xt.size());
    for (size_t i = 0; i < xt.size(); ++i) out[i] = -(xt[i] - x0[i] * a) / v;
    return out;
}

} // namespace sfa
