#pragma once

#include "sfa/linalg.hpp"
#include "sfa/rng.hpp"

namespace sfa {

/// Discrete-index view of the forward Ornstein-Uhlenbeck process: index k in
/// {0..T} maps to continuous time t(k) through the cosine schedule. The whole
/// table is precomputed at construction; downstream code only ever indexes it.
struct Schedule {
    int T = 0;
    double offset = 0.008;
    double t_max_clamp = 10.0;
    Vec t; // size T+1, t[0] == 0, strictly increasing below the clamp

    double at(int k) const;
};

Schedule make_schedule(int T, double offset = 0.008, double t_max_clamp = 10.0);

// t(k) = -1/2 log(f(k)/f(0)), f(k) = cos(((k/T + offset)/(1 + offset)) * pi/2),
// clamped where the cosine vanishes (k = T) or the value exceeds the ceiling.
double cosine_time(int k, const Schedule& s);

struct ForwardSample {
    Vec x0;
    double t = 0.0;
    Vec eps;
    Vec xt; // x0 e^{-t} + sqrt(1 - e^{-2t}) eps
};

ForwardSample forward_sample(const Vec& x0, double t, Rng& rng);

// gradient of the OU transition log-density in its endpoint:
// -(xt - x0 e^{-t}) / (1 - e^{-2t}); requires t > 0
Vec conditional_score(const Vec& xt, const Vec& x0, double t);

// decay/noise coefficients of the transition kernel
inline double ou_decay(double t) { return std::exp(-t); }
inline double ou_var(double t) { return -std::expm1(-2.0 * t); }

} // namespace sfa
