#pragma once

#include "sfa/linalg.hpp"
#include "sfa/schedule.hpp"

#include <iosfwd>
#include <string>

namespace sfa {

enum class Activation : uint32_t { Tanh = 0 };

/// Fully-connected vector field NN(x, k): the time index is embedded as
/// sinusoidal features of t(k) and concatenated with x. Hidden layers use a
/// smooth activation so the exact Jacobian (and hence the differential audit)
/// is well-defined everywhere.
struct MlpParams {
    int dim = 0;                  // D, input and output width
    int emb_dim = 0;              // sinusoidal feature count (even)
    Vec freqs;                    // emb_dim/2 frequencies
    Activation act = Activation::Tanh;
    std::vector<int> widths;      // layer sizes: [D+emb_dim, hidden..., D]
    std::vector<Mat> w;           // widths.size()-1 matrices, row-major out x in
    std::vector<Vec> b;
    Schedule sched;               // k -> t map baked into the field

    int layers() const { return static_cast<int>(w.size()); }
    size_t parameter_count() const;
    void validate() const;
    uint64_t checksum() const; // order-sensitive hash of all parameter bytes
};

// zero-initialized network with the given hidden widths; embedding uses
// geometrically spaced frequencies from 1 to 1000
MlpParams make_mlp(int dim, const std::vector<int>& hidden, int emb_dim, const Schedule& sched);

// Xavier-uniform init of all weight matrices, biases zero
void init_params(MlpParams& p, Rng& rng);

void embed_time(const MlpParams& p, double t, double* out);

// deterministic forward evaluation at (x, t(k))
Vec mlp_forward(const MlpParams& p, const Vec& x, int k);

// scratch buffers so hot loops don't allocate; one instance per thread
struct MlpScratch {
    Vec input;
    std::vector<Vec> act;   // post-activation per layer (act[0] = input)
    std::vector<Vec> pre;   // pre-activation per layer
    Vec delta, delta_next;
};

void mlp_forward(const MlpParams& p, const double* x, int k, double* out, MlpScratch& s);

// exact D x D Jacobian d NN_i / d x_j by reverse-mode accumulation, one pass
// per output row; refuses above the configured cap
Mat mlp_jacobian(const MlpParams& p, const Vec& x, int k, int cap = 64);
void mlp_jacobian(const MlpParams& p, const double* x, int k, double* jac, MlpScratch& s,
                  int cap = 64);

// checkpoint file, magic "SFA1": little-endian u32 header
// (D, n_layers, widths[n_layers+1], emb_dim, activation, T), the schedule
// offset as one little-endian IEEE-754 f64, then all parameters layer by
// layer (weights row-major, then bias) as little-endian f64
void save_checkpoint(const MlpParams& p, const std::string& path);
MlpParams load_checkpoint(const std::string& path); // throws MismatchError

} // namespace sfa
