#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoedit/hyperspace.hpp"
#include "autoedit/linalg.hpp"
#include "autoedit/rng.hpp"
#include "autoedit/task.hpp"

namespace autoedit {

struct NetConfig {
    int D = 16;   // latent dim; branch input is [x_t; target] = 2D
    int F = 32;   // encoder branch width
    int Fc = 32;  // fused width
    int E = 32;   // sinusoidal embedding dim, must be even
    int Ft = 32;  // projected time width
    int H = 64;   // trunk width
    std::vector<int> head_sizes;  // N_k per output head

    bool operator==(const NetConfig&) const = default;
};

NetConfig policy_net_config(int D, const HyperSpace& space);
NetConfig value_net_config(int D);

struct LayerParams {
    Matrix w;
    Vec b;
};

// Two prompt-conditioned branches through a shared encoder, fused, joined
// with a projected time embedding, two ReLU trunk layers, linear heads.
struct NetParams {
    NetConfig cfg;
    LayerParams enc1, enc2;   // shared branch encoder, 2D -> F -> F
    LayerParams fuse;         // 2F -> Fc
    LayerParams time_proj;    // E -> Ft
    LayerParams trunk1;       // Fc+Ft -> H
    LayerParams trunk2;       // H -> H
    std::vector<LayerParams> heads;  // H -> N_k
    std::uint64_t version = 0;       // bumped on every optimizer step
};

using PolicyParams = NetParams;
using ValueParams = NetParams;

// Zero-shaped parameter set for the given config (also the gradient shape).
NetParams zero_net(const NetConfig& cfg);

// He-normal hidden layers, zero heads: the initial policy is uniform and the
// initial value is 0.
NetParams init_net(const NetConfig& cfg, std::uint64_t seed);

// All tensors ~ N(0, scale); used by the finite-difference checks.
void randomize_net(NetParams& net, Rng& rng, double scale);

// name/tensor visitation in a fixed order (optimizer, serialization, checks)
template <typename Params, typename Fn>
void for_each_layer(Params& p, Fn&& fn) {
    fn("enc1", p.enc1);
    fn("enc2", p.enc2);
    fn("fuse", p.fuse);
    fn("time_proj", p.time_proj);
    fn("trunk1", p.trunk1);
    fn("trunk2", p.trunk2);
    for (std::size_t k = 0; k < p.heads.size(); ++k)
        fn(("head" + std::to_string(k)).c_str(), p.heads[k]);
}

// sin(t / 10000^{2i/E}) for i = 0..E/2-1, then the matching cosines
Vec time_embed(int t, int E);

struct ForwardCache {
    std::uint64_t version = 0;
    bool complete = false;
    Vec in_src, in_edit;
    Vec a1_src, a2_src, a1_edit, a2_edit;  // post-ReLU activations
    Vec cat_branches;
    Vec a_fuse;
    Vec temb, f_time;
    Vec trunk_in;
    Vec a_t1, a_t2;
    std::vector<Vec> logits;
};

struct PolicyOutput {
    std::vector<Vec> probs;
    std::vector<Vec> log_probs;
};

// Raw head logits; cache is optional and enables net_backward.
std::vector<Vec> net_forward(const NetParams& net, const Vec& x, int t,
                             const Vec& src_target, const Vec& edit_target,
                             ForwardCache* cache);

PolicyOutput policy_forward(const NetParams& net, const Vec& x, int t,
                            const EditTask& task, ForwardCache* cache = nullptr);
double value_forward(const NetParams& net, const Vec& x, int t,
                     const EditTask& task, ForwardCache* cache = nullptr);

// Exact gradients of a scalar loss whose per-head logit gradients are given;
// accumulates into `grads`. Rejects caches from stale or foreign parameters.
void net_backward(const NetParams& net, const ForwardCache& cache,
                  const std::vector<Vec>& dlogits, NetParams& grads);

struct AdamState {
    std::int64_t step = 0;
    std::vector<Vec> m;  // one slot per tensor in for_each_layer order
    std::vector<Vec> v;
};

// Standard Adam with bias correction: beta1=0.9, beta2=0.999, eps=1e-8.
void adam_step(NetParams& params, const NetParams& grads, AdamState& state, double lr);

void zero_grads(NetParams& grads);

}  // namespace autoedit
