#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfa/errors.hpp"
#include "sfa/train.hpp"

#include <cmath>

using namespace sfa;

namespace {

// explicit tiny dataset for gradient checks
struct TinyBatch {
    std::vector<Vec> xs;
    std::vector<int> ks;
    std::vector<Vec> targets;
};

TinyBatch make_batch(const GaussianMixture& gmm, const Schedule& sched, int n, uint64_t seed) {
    TinyBatch b;
    Rng rng(seed, "test.batch");
    for (int i = 0; i < n; ++i) {
        const int k = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(sched.T)));
        const double t = sched.at(k);
        const Vec x0 = sample_data(gmm, rng);
        const ForwardSample fs = forward_sample(x0, t, rng);
        b.xs.push_back(fs.xt);
        b.ks.push_back(k);
        b.targets.push_back(conditional_score(fs.xt, x0, t));
    }
    return b;
}

} // namespace

TEST_CASE("loss gradient matches central finite differences on a tiny net") {
    const GaussianMixture gmm = make_preset("stdnormal", 2);
    const Schedule sched = make_schedule(50);
    MlpParams p = make_mlp(2, {8, 6}, 4, sched);
    Rng rng(3, "test.gradcheck");
    init_params(p, rng);
    // the default head starts at zero; randomize it so every layer's
    // gradient is nontrivial under the check
    for (double& v : p.w.back().a) v = 0.3 * rng.normal();
    for (double& v : p.b.back()) v = 0.1 * rng.normal();
    const TinyBatch batch = make_batch(gmm, sched, 8, 5);

    // the trainer's objective carries the 1 - e^{-2t} sample weights
    Vec weights(batch.xs.size());
    for (size_t i = 0; i < weights.size(); ++i)
        weights[i] = ou_var(sched.at(batch.ks[i]));

    Grads g = make_grads(p);
    const double base = batch_loss_grad(p, batch.xs, batch.ks, batch.targets, g, &weights);
    CHECK(std::isfinite(base));

    Grads dummy = make_grads(p);
    const double h = 1e-6;
    auto check_param = [&](double& theta, double analytic) {
        const double keep = theta;
        theta = keep + h;
        const double lp = batch_loss_grad(p, batch.xs, batch.ks, batch.targets, dummy, &weights);
        theta = keep - h;
        const double lm = batch_loss_grad(p, batch.xs, batch.ks, batch.targets, dummy, &weights);
        theta = keep;
        const double fd = (lp - lm) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-6});
        CHECK(std::abs(fd - analytic) / scale < 1e-4);
    };
    for (int l = 0; l < p.layers(); ++l) {
        for (size_t i = 0; i < p.w[l].a.size(); ++i) check_param(p.w[l].a[i], g.w[l].a[i]);
        for (size_t i = 0; i < p.b[l].size(); ++i) check_param(p.b[l][i], g.b[l][i]);
    }
    // unweighted surface stays available and consistent
    Grads g2 = make_grads(p);
    const double plain = batch_loss_grad(p, batch.xs, batch.ks, batch.targets, g2);
    CHECK(plain >= base); // weights are all < 1 here
}

TEST_CASE("training is deterministic and mode-independent") {
    const GaussianMixture gmm = make_preset("stdnormal", 2);
    const Schedule sched = make_schedule(100);
    TrainConfig cfg;
    cfg.steps = 25;
    cfg.batch = 32;
    cfg.hidden = {16, 16};
    cfg.emb_dim = 8;
    cfg.master_seed = 12345;

    const TrainResult a = train(gmm, sched, cfg, Exec::Serial);
    const TrainResult b = train(gmm, sched, cfg, Exec::Serial);
    CHECK(a.params.checksum() == b.params.checksum());
    CHECK(a.loss_trace == b.loss_trace);

    const TrainResult c = train(gmm, sched, cfg, Exec::Parallel);
    CHECK(a.params.checksum() == c.params.checksum());
    CHECK(a.loss_trace == c.loss_trace);

    cfg.master_seed = 54321;
    const TrainResult d = train(gmm, sched, cfg, Exec::Serial);
    CHECK(a.params.checksum() != d.params.checksum());
}

TEST_CASE("short training run reduces the loss") {
    const GaussianMixture gmm = make_preset("stdnormal", 4);
    const Schedule sched = make_schedule(1000);
    TrainConfig cfg;
    cfg.steps = 600;
    cfg.batch = 64;
    cfg.hidden = {32, 32};
    cfg.emb_dim = 8;
    cfg.master_seed = 7;
    const TrainResult r = train(gmm, sched, cfg);
    const int window = cfg.steps / 20; // 5%
    double first = 0.0, last = 0.0;
    for (int i = 0; i < window; ++i) {
        first += r.loss_trace[static_cast<size_t>(i)];
        last += r.loss_trace[static_cast<size_t>(cfg.steps - 1 - i)];
    }
    CHECK(last < first);
}

TEST_CASE("training aborts with a diagnostic when the loss blows up") {
    const GaussianMixture gmm = make_preset("stdnormal", 2);
    const Schedule sched = make_schedule(100);
    TrainConfig cfg;
    cfg.steps = 8;
    cfg.batch = 16;
    cfg.hidden = {8};
    cfg.emb_dim = 4;
    cfg.lr = 1e160; // first update catapults the weights out of range
    cfg.master_seed = 7;
    CHECK_THROWS_AS((void)train(gmm, sched, cfg), NumericalError);
}

TEST_CASE("held-out relative error is zero for a perfectly wired field") {
    // for N(0, I) the score is -x at every time; a single linear layer
    // realizes it exactly, so the metric's floor is exercised end to end
    const GaussianMixture gmm = make_preset("stdnormal", 3);
    const Schedule sched = make_schedule(200);
    MlpParams p = make_mlp(3, {}, 4, sched);
    for (int i = 0; i < 3; ++i) p.w[0](i, i) = -1.0;
    const double rel = heldout_relative_error(p, gmm, sched, 256, 20, 180, 31);
    CHECK(rel < 1e-12);
}

TEST_CASE("config validation rejects nonsense") {
    TrainConfig cfg;
    cfg.lr = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.lr_schedule = "warp";
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.steps = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
