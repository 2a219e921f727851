#include "autoedit/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace autoedit {

NetConfig policy_net_config(int D, const HyperSpace& space) {
    validate_space(space);
    NetConfig cfg;
    cfg.D = D;
    for (const auto& head : space.heads)
        cfg.head_sizes.push_back(static_cast<int>(head.values.size()));
    return cfg;
}

NetConfig value_net_config(int D) {
    NetConfig cfg;
    cfg.D = D;
    cfg.head_sizes = {1};
    return cfg;
}

namespace {

LayerParams zero_layer(int out, int in) {
    LayerParams l;
    l.w = Matrix(out, in);
    l.b.assign(out, 0.0);
    return l;
}

void he_init(LayerParams& l, Rng& rng) {
    const double std = std::sqrt(2.0 / l.w.cols);
    for (double& x : l.w.data) x = rng.normal() * std;
    std::fill(l.b.begin(), l.b.end(), 0.0);
}

}  // namespace

NetParams zero_net(const NetConfig& cfg) {
    if (cfg.E % 2 != 0) throw std::invalid_argument("time embedding dim must be even");
    if (cfg.head_sizes.empty()) throw std::invalid_argument("net needs at least one head");
    NetParams net;
    net.cfg = cfg;
    net.enc1 = zero_layer(cfg.F, 2 * cfg.D);
    net.enc2 = zero_layer(cfg.F, cfg.F);
    net.fuse = zero_layer(cfg.Fc, 2 * cfg.F);
    net.time_proj = zero_layer(cfg.Ft, cfg.E);
    net.trunk1 = zero_layer(cfg.H, cfg.Fc + cfg.Ft);
    net.trunk2 = zero_layer(cfg.H, cfg.H);
    for (int n : cfg.head_sizes) net.heads.push_back(zero_layer(n, cfg.H));
    return net;
}

NetParams init_net(const NetConfig& cfg, std::uint64_t seed) {
    NetParams net = zero_net(cfg);
    Rng rng(splitmix64(seed ^ 0x4e375ee4ULL));
    he_init(net.enc1, rng);
    he_init(net.enc2, rng);
    he_init(net.fuse, rng);
    he_init(net.time_proj, rng);
    he_init(net.trunk1, rng);
    he_init(net.trunk2, rng);
    // heads stay zero
    return net;
}

void randomize_net(NetParams& net, Rng& rng, double scale) {
    for_each_layer(net, [&](const char*, LayerParams& l) {
        for (double& x : l.w.data) x = rng.normal() * scale;
        for (double& x : l.b) x = rng.normal() * scale;
    });
    ++net.version;
}

Vec time_embed(int t, int E) {
    if (E % 2 != 0) throw std::invalid_argument("time embedding dim must be even");
    Vec out(E);
    const int half = E / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::pow(10000.0, -2.0 * i / E);
        out[i] = std::sin(t * freq);
        out[half + i] = std::cos(t * freq);
    }
    return out;
}

std::vector<Vec> net_forward(const NetParams& net, const Vec& x, int t,
                             const Vec& src_target, const Vec& edit_target,
                             ForwardCache* cache) {
    const NetConfig& cfg = net.cfg;
    if (static_cast<int>(x.size()) != cfg.D ||
        static_cast<int>(src_target.size()) != cfg.D ||
        static_cast<int>(edit_target.size()) != cfg.D)
        throw std::invalid_argument("net_forward: input dimension mismatch");

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c = ForwardCache{};
    c.version = net.version;

    auto branch_input = [&](const Vec& target) {
        Vec in;
        in.reserve(2 * cfg.D);
        in.insert(in.end(), x.begin(), x.end());
        in.insert(in.end(), target.begin(), target.end());
        return in;
    };
    c.in_src = branch_input(src_target);
    c.in_edit = branch_input(edit_target);

    auto encode = [&](const Vec& in, Vec& a1, Vec& a2) {
        affine(net.enc1.w, net.enc1.b, in, a1);
        relu_inplace(a1);
        affine(net.enc2.w, net.enc2.b, a1, a2);
        relu_inplace(a2);
    };
    encode(c.in_src, c.a1_src, c.a2_src);
    encode(c.in_edit, c.a1_edit, c.a2_edit);

    c.cat_branches.clear();
    c.cat_branches.insert(c.cat_branches.end(), c.a2_src.begin(), c.a2_src.end());
    c.cat_branches.insert(c.cat_branches.end(), c.a2_edit.begin(), c.a2_edit.end());
    affine(net.fuse.w, net.fuse.b, c.cat_branches, c.a_fuse);
    relu_inplace(c.a_fuse);

    c.temb = time_embed(t, cfg.E);
    affine(net.time_proj.w, net.time_proj.b, c.temb, c.f_time);

    c.trunk_in.clear();
    c.trunk_in.insert(c.trunk_in.end(), c.a_fuse.begin(), c.a_fuse.end());
    c.trunk_in.insert(c.trunk_in.end(), c.f_time.begin(), c.f_time.end());
    affine(net.trunk1.w, net.trunk1.b, c.trunk_in, c.a_t1);
    relu_inplace(c.a_t1);
    affine(net.trunk2.w, net.trunk2.b, c.a_t1, c.a_t2);
    relu_inplace(c.a_t2);

    c.logits.resize(net.heads.size());
    for (std::size_t k = 0; k < net.heads.size(); ++k)
        affine(net.heads[k].w, net.heads[k].b, c.a_t2, c.logits[k]);

    c.complete = true;
    return c.logits;
}

PolicyOutput policy_forward(const NetParams& net, const Vec& x, int t,
                            const EditTask& task, ForwardCache* cache) {
    const Vec edit_target = edit_target_vector(task);
    const std::vector<Vec> logits = net_forward(net, x, t, task.i_src, edit_target, cache);

    PolicyOutput out;
    out.probs.resize(logits.size());
    out.log_probs.resize(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const Vec& z = logits[k];
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double zi : z) sum += std::exp(zi - zmax);
        const double log_sum = std::log(sum);
        Vec lp(z.size()), p(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            lp[i] = z[i] - zmax - log_sum;
            p[i] = std::exp(lp[i]);
        }
        out.log_probs[k] = std::move(lp);
        out.probs[k] = std::move(p);
    }
    return out;
}

double value_forward(const NetParams& net, const Vec& x, int t,
                     const EditTask& task, ForwardCache* cache) {
    if (net.cfg.head_sizes.size() != 1 || net.cfg.head_sizes[0] != 1)
        throw std::invalid_argument("value_forward needs a single scalar head");
    const Vec edit_target = edit_target_vector(task);
    const std::vector<Vec> logits = net_forward(net, x, t, task.i_src, edit_target, cache);
    return logits[0][0];
}

void net_backward(const NetParams& net, const ForwardCache& cache,
                  const std::vector<Vec>& dlogits, NetParams& grads) {
    if (!cache.complete) throw std::invalid_argument("backward without a completed forward");
    if (cache.version != net.version)
        throw std::invalid_argument("stale forward cache: parameters changed");
    if (dlogits.size() != net.heads.size())
        throw std::invalid_argument("upstream gradient head count mismatch");

    const NetConfig& cfg = net.cfg;
    Vec dh(cfg.H, 0.0);
    for (std::size_t k = 0; k < net.heads.size(); ++k) {
        if (static_cast<int>(dlogits[k].size()) != cfg.head_sizes[k])
            throw std::invalid_argument("upstream gradient head size mismatch");
        affine_accumulate_grads(dlogits[k], cache.a_t2, grads.heads[k].w, grads.heads[k].b);
        affine_backprop_input(net.heads[k].w, dlogits[k], dh);
    }

    relu_backprop(cache.a_t2, dh);
    affine_accumulate_grads(dh, cache.a_t1, grads.trunk2.w, grads.trunk2.b);
    Vec da1(cfg.H, 0.0);
    affine_backprop_input(net.trunk2.w, dh, da1);

    relu_backprop(cache.a_t1, da1);
    affine_accumulate_grads(da1, cache.trunk_in, grads.trunk1.w, grads.trunk1.b);
    Vec dtrunk_in(cfg.Fc + cfg.Ft, 0.0);
    affine_backprop_input(net.trunk1.w, da1, dtrunk_in);

    Vec d_fuse_out(dtrunk_in.begin(), dtrunk_in.begin() + cfg.Fc);
    Vec d_ftime(dtrunk_in.begin() + cfg.Fc, dtrunk_in.end());

    affine_accumulate_grads(d_ftime, cache.temb, grads.time_proj.w, grads.time_proj.b);

    relu_backprop(cache.a_fuse, d_fuse_out);
    affine_accumulate_grads(d_fuse_out, cache.cat_branches, grads.fuse.w, grads.fuse.b);
    Vec dcat(2 * cfg.F, 0.0);
    affine_backprop_input(net.fuse.w, d_fuse_out, dcat);

    auto branch_backward = [&](Vec db2, const Vec& a2, const Vec& a1, const Vec& in) {
        relu_backprop(a2, db2);
        affine_accumulate_grads(db2, a1, grads.enc2.w, grads.enc2.b);
        Vec da(cfg.F, 0.0);
        affine_backprop_input(net.enc2.w, db2, da);
        relu_backprop(a1, da);
        affine_accumulate_grads(da, in, grads.enc1.w, grads.enc1.b);
    };
    branch_backward(Vec(dcat.begin(), dcat.begin() + cfg.F), cache.a2_src, cache.a1_src,
                    cache.in_src);
    branch_backward(Vec(dcat.begin() + cfg.F, dcat.end()), cache.a2_edit, cache.a1_edit,
                    cache.in_edit);
}

void adam_step(NetParams& params, const NetParams& grads, AdamState& state, double lr) {
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;

    // collect matching tensors in visitation order
    std::vector<Vec*> tensors;
    std::vector<const Vec*> gtensors;
    for_each_layer(params, [&](const char*, LayerParams& l) {
        tensors.push_back(&l.w.data);
        tensors.push_back(&l.b);
    });
    for_each_layer(grads, [&](const char*, const LayerParams& l) {
        gtensors.push_back(&l.w.data);
        gtensors.push_back(&l.b);
    });
    if (tensors.size() != gtensors.size())
        throw std::invalid_argument("adam_step: gradient shape mismatch");

    if (state.step == 0) {
        state.m.resize(tensors.size());
        state.v.resize(tensors.size());
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            state.m[i].assign(tensors[i]->size(), 0.0);
            state.v[i].assign(tensors[i]->size(), 0.0);
        }
    }

    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < tensors.size(); ++i) {
        Vec& p = *tensors[i];
        const Vec& g = *gtensors[i];
        if (p.size() != g.size() || p.size() != state.m[i].size())
            throw std::invalid_argument("adam_step: tensor size mismatch");
        Vec& m = state.m[i];
        Vec& v = state.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
    ++params.version;
}

void zero_grads(NetParams& grads) {
    for_each_layer(grads, [](const char*, LayerParams& l) {
        std::fill(l.w.data.begin(), l.w.data.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    });
}

}  // namespace autoedit
