#include "sfa/train.hpp"

#include "sfa/errors.hpp"

#include <cmath>
#include <sstream>

namespace sfa {

void TrainConfig::validate() const {
    if (steps < 1 || batch < 1 || grad_chunks < 1) throw std::invalid_argument("train: counts must be positive");
    if (!(lr > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
    if (lr_schedule != "constant" && lr_schedule != "cosine")
        throw std::invalid_argument("train: unknown lr schedule '" + lr_schedule + "'");
    if (emb_dim <= 0 || emb_dim % 2 != 0) throw std::invalid_argument("train: emb_dim must be even");
    for (int h : hidden)
        if (h < 1) throw std::invalid_argument("train: hidden widths must be positive");
}

Grads make_grads(const MlpParams& p) {
    Grads g;
    for (int l = 0; l < p.layers(); ++l) {
        g.w.emplace_back(p.w[l].rows, p.w[l].cols);
        g.b.emplace_back(p.b[l].size(), 0.0);
    }
    return g;
}

void Grads::zero() {
    for (auto& m : w) std::fill(m.a.begin(), m.a.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
}

void Grads::add(const Grads& o) {
    for (size_t l = 0; l < w.size(); ++l) {
        for (size_t i = 0; i < w[l].a.size(); ++i) w[l].a[i] += o.w[l].a[i];
        for (size_t i = 0; i < b[l].size(); ++i) b[l][i] += o.b[l][i];
    }
}

namespace {
// accumulate loss and gradient of (w/B) ||NN(x,k) - target||^2 for one
// sample; scratch must have been filled by mlp_forward on the same (x, k)
double backprop_sample(const MlpParams& p, const Vec& target, double scale, MlpScratch& s,
                       Grads& g) {
    const int nl = p.layers();
    const int d = p.dim;
    double loss = 0.0;
    for (int i = 0; i < d; ++i) {
        const double r = s.act[static_cast<size_t>(nl)][static_cast<size_t>(i)] -
                         target[static_cast<size_t>(i)];
        loss += r * r;
        s.delta[static_cast<size_t>(i)] = 2.0 * r * scale;
    }
    for (int l = nl - 1; l >= 0; --l) {
        // d pre[l]: accumulate weight/bias grads, then push delta down
        const int rows = p.widths[static_cast<size_t>(l) + 1];
        const int cols = p.widths[static_cast<size_t>(l)];
        const Vec& below = s.act[static_cast<size_t>(l)];
        for (int i = 0; i < rows; ++i) {
            const double di = s.delta[static_cast<size_t>(i)];
            double* grow = g.w[static_cast<size_t>(l)].row(i);
            for (int j = 0; j < cols; ++j) grow[j] += di * below[static_cast<size_t>(j)];
            g.b[static_cast<size_t>(l)][static_cast<size_t>(i)] += di;
        }
        if (l == 0) break;
        const Mat& wl = p.w[static_cast<size_t>(l)];
        for (int j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (int i = 0; i < rows; ++i) acc += wl(i, j) * s.delta[static_cast<size_t>(i)];
            const double a = below[static_cast<size_t>(j)];
            s.delta_next[static_cast<size_t>(j)] = acc * (1.0 - a * a);
        }
        std::swap(s.delta, s.delta_next);
    }
    return loss * scale;
}
} // namespace

double batch_loss_grad(const MlpParams& p, const std::vector<Vec>& xs, const std::vector<int>& ks,
                       const std::vector<Vec>& targets, Grads& g, const Vec* weights) {
    g.zero();
    const double inv_batch = 1.0 / static_cast<double>(xs.size());
    MlpScratch s;
    Vec out(static_cast<size_t>(p.dim));
    double loss = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mlp_forward(p, xs[i].data(), ks[i], out.data(), s);
        const double w = weights ? (*weights)[i] : 1.0;
        loss += backprop_sample(p, targets[i], w * inv_batch, s, g);
    }
    return loss;
}

TrainResult train(const GaussianMixture& gmm, const Schedule& sched, const TrainConfig& cfg,
                  Exec mode) {
    cfg.validate();
    gmm.validate();

    MlpParams p = make_mlp(gmm.dim, cfg.hidden, cfg.emb_dim, sched);
    {
        Rng rng(cfg.master_seed, "train.init");
        init_params(p, rng);
    }

    const int chunks = std::min(cfg.grad_chunks, cfg.batch);
    std::vector<Grads> chunk_grads;
    std::vector<double> chunk_loss(static_cast<size_t>(chunks), 0.0);
    for (int c = 0; c < chunks; ++c) chunk_grads.push_back(make_grads(p));
    Grads grad = make_grads(p);
    Grads m = make_grads(p), v = make_grads(p); // Adam moments

    TrainResult res;
    res.loss_trace.resize(static_cast<size_t>(cfg.steps));
    const double inv_batch = 1.0 / static_cast<double>(cfg.batch);

    for (int step = 0; step < cfg.steps; ++step) {
        for_each_task(chunks, mode, [&](int c) {
            std::ostringstream name;
            name << "train.s" << step << ".c" << c;
            Rng rng(cfg.master_seed, name.str());
            const int lo = static_cast<int>(static_cast<long>(cfg.batch) * c / chunks);
            const int hi = static_cast<int>(static_cast<long>(cfg.batch) * (c + 1) / chunks);
            Grads& g = chunk_grads[static_cast<size_t>(c)];
            g.zero();
            MlpScratch s;
            Vec out(static_cast<size_t>(p.dim));
            double loss = 0.0;
            for (int i = lo; i < hi; ++i) {
                const int k = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(sched.T)));
                const double t = sched.at(k);
                const Vec x0 = sample_data(gmm, rng);
                const ForwardSample fs = forward_sample(x0, t, rng);
                const Vec target = conditional_score(fs.xt, x0, t);
                mlp_forward(p, fs.xt.data(), k, out.data(), s);
                loss += backprop_sample(p, target, ou_var(t) * inv_batch, s, g);
            }
            chunk_loss[static_cast<size_t>(c)] = loss;
        });

        double loss = 0.0;
        grad.zero();
        for (int c = 0; c < chunks; ++c) {
            loss += chunk_loss[static_cast<size_t>(c)];
            grad.add(chunk_grads[static_cast<size_t>(c)]);
        }
        res.loss_trace[static_cast<size_t>(step)] = loss;
        if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "training diverged: non-finite loss at step " << step;
            throw NumericalError(msg.str());
        }

        double lr = cfg.lr;
        if (cfg.lr_schedule == "cosine")
            lr = cfg.lr * 0.5 *
                 (1.0 + std::cos(3.14159265358979323846 * step / std::max(1, cfg.steps - 1)));
        const double bc1 = 1.0 - std::pow(cfg.beta1, step + 1);
        const double bc2 = 1.0 - std::pow(cfg.beta2, step + 1);
        for (int l = 0; l < p.layers(); ++l) {
            auto update = [&](double& theta, double& mi, double& vi, double gi) {
                mi = cfg.beta1 * mi + (1.0 - cfg.beta1) * gi;
                vi = cfg.beta2 * vi + (1.0 - cfg.beta2) * gi * gi;
                theta -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.adam_eps);
            };
            auto& wl = p.w[static_cast<size_t>(l)].a;
            auto& gl = grad.w[static_cast<size_t>(l)].a;
            auto& ml = m.w[static_cast<size_t>(l)].a;
            auto& vl = v.w[static_cast<size_t>(l)].a;
            for (size_t i = 0; i < wl.size(); ++i) update(wl[i], ml[i], vl[i], gl[i]);
            auto& bl = p.b[static_cast<size_t>(l)];
            auto& gb = grad.b[static_cast<size_t>(l)];
            auto& mb = m.b[static_cast<size_t>(l)];
            auto& vb = v.b[static_cast<size_t>(l)];
            for (size_t i = 0; i < bl.size(); ++i) update(bl[i], mb[i], vb[i], gb[i]);
        }
    }
    res.params = std::move(p);
    return res;
}

double heldout_relative_error(const MlpParams& p, const GaussianMixture& gmm,
                              const Schedule& sched, int pairs, int k_lo, int k_hi,
                              uint64_t seed) {
    Rng rng(seed, "train.eval");
    MlpScratch s;
    Vec out(static_cast<size_t>(p.dim)), sc(static_cast<size_t>(p.dim));
    double acc = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const int k = k_lo + static_cast<int>(rng.below(static_cast<uint64_t>(k_hi - k_lo + 1)));
        const double t = sched.at(k);
        const Vec x0 = sample_data(gmm, rng);
        const ForwardSample fs = forward_sample(x0, t, rng);
        mlp_forward(p, fs.xt.data(), k, out.data(), s);
        score(gmm, fs.xt.data(), t, sc.data());
        double diff = 0.0;
        for (int q = 0; q < p.dim; ++q) {
            const double d = out[static_cast<size_t>(q)] - sc[static_cast<size_t>(q)];
            diff += d * d;
        }
        acc += std::sqrt(diff) / norm2(sc);
    }
    return acc / pairs;
}

} // namespace sfa
