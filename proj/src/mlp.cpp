#include "sfa/mlp.hpp"

#include "sfa/errors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sfa {

size_t MlpParams::parameter_count() const {
    size_t n = 0;
    for (int l = 0; l < layers(); ++l) n += w[l].a.size() + b[l].size();
    return n;
}

void MlpParams::validate() const {
    if (dim <= 0) throw std::invalid_argument("mlp: dim must be positive");
    if (emb_dim <= 0 || emb_dim % 2 != 0) throw std::invalid_argument("mlp: emb_dim must be even and positive");
    if (static_cast<int>(freqs.size()) != emb_dim / 2) throw std::invalid_argument("mlp: frequency table size mismatch");
    if (widths.size() < 2) throw std::invalid_argument("mlp: need at least one layer");
    if (widths.front() != dim + emb_dim) throw std::invalid_argument("mlp: first layer width must be D + emb_dim");
    if (widths.back() != dim) throw std::invalid_argument("mlp: last layer width must be D");
    if (w.size() != widths.size() - 1 || b.size() != w.size())
        throw std::invalid_argument("mlp: layer count mismatch");
    for (size_t l = 0; l < w.size(); ++l) {
        if (w[l].rows != widths[l + 1] || w[l].cols != widths[l])
            throw std::invalid_argument("mlp: weight shape breaks the layer chain");
        if (static_cast<int>(b[l].size()) != widths[l + 1])
            throw std::invalid_argument("mlp: bias shape mismatch");
        if (!all_finite(w[l].a.data(), w[l].a.size()) || !all_finite(b[l]))
            throw std::invalid_argument("mlp: non-finite parameter");
    }
    if (sched.T <= 0) throw std::invalid_argument("mlp: missing schedule");
}

uint64_t MlpParams::checksum() const {
    uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&h](const double* p, size_t n) {
        const unsigned char* bytes = reinterpret_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ull;
        }
    };
    for (int l = 0; l < layers(); ++l) {
        feed(w[l].a.data(), w[l].a.size());
        feed(b[l].data(), b[l].size());
    }
    return h;
}

MlpParams make_mlp(int dim, const std::vector<int>& hidden, int emb_dim, const Schedule& sched) {
    MlpParams p;
    p.dim = dim;
    p.emb_dim = emb_dim;
    p.sched = sched;
    const int nf = emb_dim / 2;
    p.freqs.resize(nf);
    for (int j = 0; j < nf; ++j)
        p.freqs[j] = nf > 1 ? std::pow(1000.0, static_cast<double>(j) / (nf - 1)) : 1.0;
    p.widths.push_back(dim + emb_dim);
    for (int h : hidden) p.widths.push_back(h);
    p.widths.push_back(dim);
    for (size_t l = 0; l + 1 < p.widths.size(); ++l) {
        p.w.emplace_back(p.widths[l + 1], p.widths[l]);
        p.b.emplace_back(p.widths[l + 1], 0.0);
    }
    p.validate();
    return p;
}

void init_params(MlpParams& p, Rng& rng) {
    // Xavier for the hidden stack; the output layer starts at zero so the
    // field begins as NN = 0 and the subtle high-noise structure is learned
    // without fighting initialization noise (a random head measurably biases
    // the reverse transport long after the loss has plateaued).
    for (int l = 0; l < p.layers(); ++l) {
        const bool head = l + 1 == p.layers();
        const double bound = std::sqrt(6.0 / (p.w[l].rows + p.w[l].cols));
        for (double& v : p.w[l].a) v = head ? 0.0 : rng.uniform(-bound, bound);
        for (double& v : p.b[l]) v = 0.0;
    }
}

void embed_time(const MlpParams& p, double t, double* out) {
    for (size_t j = 0; j < p.freqs.size(); ++j) {
        out[2 * j] = std::sin(p.freqs[j] * t);
        out[2 * j + 1] = std::cos(p.freqs[j] * t);
    }
}

namespace {
void ensure_scratch(const MlpParams& p, MlpScratch& s) {
    const size_t nl = p.w.size();
    bool ok = s.act.size() == nl + 1;
    for (size_t l = 0; ok && l <= nl; ++l) ok = static_cast<int>(s.act[l].size()) == p.widths[l];
    if (ok) return;
    s.input.resize(p.widths[0]);
    s.act.resize(nl + 1);
    s.pre.resize(nl);
    for (size_t l = 0; l <= nl; ++l) s.act[l].resize(p.widths[l]);
    for (size_t l = 0; l < nl; ++l) s.pre[l].resize(p.widths[l + 1]);
    int wmax = 0;
    for (int wd : p.widths) wmax = std::max(wmax, wd);
    s.delta.resize(wmax);
    s.delta_next.resize(wmax);
}
} // namespace

void mlp_forward(const MlpParams& p, const double* x, int k, double* out, MlpScratch& s) {
    ensure_scratch(p, s);
    const int nl = p.layers();
    for (int i = 0; i < p.dim; ++i) s.act[0][i] = x[i];
    embed_time(p, p.sched.at(k), s.act[0].data() + p.dim);
    for (int l = 0; l < nl; ++l) {
        affine(p.w[l], p.b[l], s.act[l].data(), s.pre[l].data());
        const bool last = l + 1 == nl;
        for (int i = 0; i < p.widths[l + 1]; ++i)
            s.act[l + 1][i] = last ? s.pre[l][i] : std::tanh(s.pre[l][i]);
    }
    std::memcpy(out, s.act[nl].data(), sizeof(double) * p.dim);
}

Vec mlp_forward(const MlpParams& p, const Vec& x, int k) {
    MlpScratch s;
    Vec out(p.dim);
    mlp_forward(p, x.data(), k, out.data(), s);
    return out;
}

void mlp_jacobian(const MlpParams& p, const double* x, int k, double* jac, MlpScratch& s, int cap) {
    if (p.dim > cap)
        throw std::invalid_argument("mlp_jacobian: dimension exceeds the exact-Jacobian cap");
    Vec out(p.dim);
    mlp_forward(p, x, k, out.data(), s); // fills act/pre
    const int nl = p.layers();
    for (int row = 0; row < p.dim; ++row) {
        // seed d out[row] / d pre[last]
        for (int i = 0; i < p.dim; ++i) s.delta[i] = row == i ? 1.0 : 0.0;
        for (int l = nl - 1; l >= 0; --l) {
            // delta currently holds d out[row]/d pre[l]; push through W_l
            for (int j = 0; j < p.widths[l]; ++j) {
                double acc = 0.0;
                for (int i = 0; i < p.widths[l + 1]; ++i) acc += p.w[l](i, j) * s.delta[i];
                s.delta_next[j] = acc;
            }
            if (l > 0) {
                // through the tanh of layer l-1
                for (int j = 0; j < p.widths[l]; ++j) {
                    const double a = s.act[l][j];
                    s.delta[j] = s.delta_next[j] * (1.0 - a * a);
                }
            } else {
                std::swap(s.delta, s.delta_next);
            }
        }
        for (int j = 0; j < p.dim; ++j) jac[static_cast<size_t>(row) * p.dim + j] = s.delta[j];
    }
}

Mat mlp_jacobian(const MlpParams& p, const Vec& x, int k, int cap) {
    MlpScratch s;
    Mat j(p.dim, p.dim);
    mlp_jacobian(p, x.data(), k, j.a.data(), s, cap);
    return j;
}

namespace {
void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void put_f64(std::ostream& os, double v) {
    uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}
} // namespace

void save_checkpoint(const MlpParams& p, const std::string& path) {
    p.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write("SFA1", 4);
    put_u32(os, static_cast<uint32_t>(p.dim));
    put_u32(os, static_cast<uint32_t>(p.layers()));
    for (int wd : p.widths) put_u32(os, static_cast<uint32_t>(wd));
    put_u32(os, static_cast<uint32_t>(p.emb_dim));
    put_u32(os, static_cast<uint32_t>(p.act));
    put_u32(os, static_cast<uint32_t>(p.sched.T));
    put_f64(os, p.sched.offset);
    for (int l = 0; l < p.layers(); ++l) {
        for (double v : p.w[l].a) put_f64(os, v);
        for (double v : p.b[l]) put_f64(os, v);
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

MlpParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MismatchError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SFA1", 4) != 0)
        throw MismatchError("checkpoint magic mismatch: " + path);
    MlpParams p;
    p.dim = static_cast<int>(get_u32(is));
    const uint32_t nl = get_u32(is);
    if (!is || p.dim <= 0 || nl == 0 || nl > 64) throw MismatchError("checkpoint header corrupt");
    p.widths.resize(nl + 1);
    for (auto& wd : p.widths) wd = static_cast<int>(get_u32(is));
    p.emb_dim = static_cast<int>(get_u32(is));
    const uint32_t act = get_u32(is);
    if (act != 0) throw MismatchError("checkpoint: unknown activation tag");
    p.act = Activation::Tanh;
    const uint32_t T = get_u32(is);
    const double offset = get_f64(is);
    if (!is || T == 0) throw MismatchError("checkpoint header corrupt");
    p.sched = make_schedule(static_cast<int>(T), offset);
    const int nf = p.emb_dim / 2;
    if (p.emb_dim <= 0 || p.emb_dim % 2 != 0) throw MismatchError("checkpoint: bad embedding size");
    p.freqs.resize(nf);
    for (int j = 0; j < nf; ++j)
        p.freqs[j] = nf > 1 ? std::pow(1000.0, static_cast<double>(j) / (nf - 1)) : 1.0;
    for (uint32_t l = 0; l < nl; ++l) {
        if (p.widths[l] <= 0 || p.widths[l + 1] <= 0) throw MismatchError("checkpoint: bad width");
        p.w.emplace_back(p.widths[l + 1], p.widths[l]);
        for (double& v : p.w.back().a) v = get_f64(is);
        p.b.emplace_back(p.widths[l + 1], 0.0);
        for (double& v : p.b.back()) v = get_f64(is);
    }
    if (!is) throw MismatchError("checkpoint truncated: " + path);
    is.peek();
    if (!is.eof()) throw MismatchError("checkpoint has trailing bytes: " + path);
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw MismatchError(std::string("checkpoint inconsistent: ") + e.what());
    }
    return p;
}

} // namespace sfa
