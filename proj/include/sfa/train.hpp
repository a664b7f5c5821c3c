#pragma once

#include "sfa/gmm.hpp"
#include "sfa/mlp.hpp"
#include "sfa/parallel.hpp"

namespace sfa {

struct TrainConfig {
    int steps = 20000;
    int batch = 256;
    double lr = 1e-3;
    std::string lr_schedule = "cosine"; // cosine | constant
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::vector<int> hidden{128, 128, 128};
    int emb_dim = 16;
    uint64_t master_seed = 0;
    // gradient accumulation uses a fixed block count so the reduction order
    // (and hence every bit of the run) is independent of the thread count
    int grad_chunks = 16;

    void validate() const;
};

struct Grads {
    std::vector<Mat> w;
    std::vector<Vec> b;
    void zero();
    void add(const Grads& other);
};

Grads make_grads(const MlpParams& p);

// mean over the batch of w_i || NN(x_t, k) - target ||^2 and its parameter
// gradient; exposed for the finite-difference gradient check. Weights may be
// null for the unweighted objective.
double batch_loss_grad(const MlpParams& p, const std::vector<Vec>& xs,
                       const std::vector<int>& ks, const std::vector<Vec>& targets, Grads& g,
                       const Vec* weights = nullptr);

struct TrainResult {
    MlpParams params;
    Vec loss_trace; // one entry per step, the pre-update batch loss
};

/// Flow-matching regression of NN(x_t, k) onto the conditional score of the
/// forward kernel, k uniform on {1..T}, Adam updates. Each sample's squared
/// error is weighted by 1 - e^{-2 t_k}, which leaves the pointwise minimizer
/// (the true score) untouched but bounds the regression targets: it is the
/// noise-prediction objective expressed for a score-parameterized network.
/// Without the weight the near-singular k ~ 1 targets dominate Adam's second
/// moments and stall learning everywhere. Deterministic given the master
/// seed in both execution modes.
TrainResult train(const GaussianMixture& gmm, const Schedule& sched, const TrainConfig& cfg,
                  Exec mode = Exec::Parallel);

// average of ||NN - s||/||s|| over held-out forward samples with k uniform
// in [k_lo, k_hi]
double heldout_relative_error(const MlpParams& p, const GaussianMixture& gmm,
                              const Schedule& sched, int pairs, int k_lo, int k_hi,
                              uint64_t seed);

} // namespace sfa
