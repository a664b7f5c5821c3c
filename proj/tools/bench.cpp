// Times the data-parallel kernels against their serial reference paths and
// checks that both produce identical bits. Run with OMP_NUM_THREADS to vary
// the thread count; the outputs must not change.

#include "sfa/audit.hpp"
#include "sfa/sampler.hpp"
#include "sfa/stein.hpp"
#include "sfa/train.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>

using namespace sfa;

namespace {

double seconds(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

template <class F>
double timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return seconds(t0, std::chrono::steady_clock::now());
}

void report(const char* name, double serial, double parallel, bool identical) {
    std::printf("%-28s %9.3fs %9.3fs %7.2fx  %s\n", name, serial, parallel,
                serial / parallel, identical ? "bitwise equal" : "MISMATCH");
}

} // namespace

int main() {
    const GaussianMixture gmm = make_preset("default");
    const Schedule sched = make_schedule(1000);
    const Field field = make_score_field(gmm, sched);
    const uint64_t seed = 17;

    std::printf("%-28s %10s %10s %8s\n", "kernel", "serial", "parallel", "speedup");

    {
        AuditSpec spec;
        spec.ks = {250, 500, 750};
        spec.samples_per_k = 64;
        spec.master_seed = seed;
        AuditResult a, b;
        const double ts = timed([&] { a = audit_run(field, gmm, sched, spec, Exec::Serial); });
        const double tp = timed([&] { b = audit_run(field, gmm, sched, spec, Exec::Parallel); });
        bool same = a.records.size() == b.records.size();
        for (size_t i = 0; same && i < a.records.size(); ++i)
            same = std::memcmp(&a.records[i].loop_integral, &b.records[i].loop_integral,
                               sizeof(double)) == 0 &&
                   a.records[i].ratio == b.records[i].ratio;
        report("audit_run", ts, tp, same);
    }

    {
        SampleBatch a, b;
        const double ts =
            timed([&] { a = pf_ode_sample(field, sched, 2000, 499, seed, Exec::Serial); });
        const double tp =
            timed([&] { b = pf_ode_sample(field, sched, 2000, 499, seed, Exec::Parallel); });
        report("pf_ode_sample", ts, tp, a.points == b.points);
    }

    {
        SampleBatch a, b;
        const double ts =
            timed([&] { a = reverse_sde_sample(field, sched, 2000, seed, Exec::Serial); });
        const double tp =
            timed([&] { b = reverse_sde_sample(field, sched, 2000, seed, Exec::Parallel); });
        report("reverse_sde_sample", ts, tp, a.points == b.points);
    }

    {
        Rng rng(seed, "bench.energy");
        std::vector<Vec> xs, ys;
        for (int i = 0; i < 4000; ++i) {
            xs.push_back(sample_data(gmm, rng));
            ys.push_back(sample_data(gmm, rng));
        }
        double a = 0, b = 0;
        const double ts = timed([&] { a = energy_distance(xs, ys, Exec::Serial); });
        const double tp = timed([&] { b = energy_distance(xs, ys, Exec::Parallel); });
        report("energy_distance", ts, tp, std::memcmp(&a, &b, sizeof(double)) == 0);
    }

    {
        SteinResult a, b;
        const std::vector<int> ks = {250, 500, 750};
        const double ts =
            timed([&] { a = stein_stats(gmm, field, sched, ks, 128, seed, Exec::Serial); });
        const double tp =
            timed([&] { b = stein_stats(gmm, field, sched, ks, 128, seed, Exec::Parallel); });
        bool same = a.records.size() == b.records.size();
        for (size_t i = 0; same && i < a.records.size(); ++i)
            same = a.records[i].residual == b.records[i].residual &&
                   a.records[i].e_l2 == b.records[i].e_l2;
        report("stein_stats", ts, tp, same);
    }

    {
        TrainConfig cfg;
        cfg.steps = 60;
        cfg.batch = 256;
        cfg.hidden = {128, 128, 128};
        cfg.master_seed = seed;
        TrainResult a, b;
        const double ts = timed([&] { a = train(gmm, sched, cfg, Exec::Serial); });
        const double tp = timed([&] { b = train(gmm, sched, cfg, Exec::Parallel); });
        report("train (60 steps)", ts, tp, a.params.checksum() == b.params.checksum());
    }

    return 0;
}
