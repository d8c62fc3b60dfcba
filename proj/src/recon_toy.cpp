#include "atmask/recon_toy.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "atmask/parallel.hpp"
#include "atmask/rng.hpp"

namespace atmask {

namespace {

bool all_finite(const std::vector<float>& v) {
    for (float x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void check_divisible(const Volume3D& v, int patch_size, const char* who) {
    for (int a = 0; a < 3; ++a)
        if (v.dims[a] % patch_size != 0)
            throw std::invalid_argument(std::string(who) + ": dim " + std::to_string(a) + " (" +
                                        std::to_string(v.dims[a]) +
                                        ") not divisible by patch_size " +
                                        std::to_string(patch_size));
}

struct PatchGrid {
    int g0, g1, g2, ps;
    std::int64_t count() const { return static_cast<std::int64_t>(g0) * g1 * g2; }
};

PatchGrid grid_of(const Volume3D& v, int ps) {
    return {v.dims[0] / ps, v.dims[1] / ps, v.dims[2] / ps, ps};
}

// Flatten one patch of `v` into `x` (length ps^3) in local row-major order.
void gather_patch(const Volume3D& v, const PatchGrid& g, std::int64_t pi, double* x) {
    const int p0 = static_cast<int>(pi / (g.g1 * g.g2));
    const int p1 = static_cast<int>((pi / g.g2) % g.g1);
    const int p2 = static_cast<int>(pi % g.g2);
    std::int64_t j = 0;
    for (int i0 = p0 * g.ps; i0 < (p0 + 1) * g.ps; ++i0)
        for (int i1 = p1 * g.ps; i1 < (p1 + 1) * g.ps; ++i1)
            for (int i2 = p2 * g.ps; i2 < (p2 + 1) * g.ps; ++i2)
                x[j++] = v.data[v.index(i0, i1, i2)];
}

bool patch_masked(const Volume3D& mask, const PatchGrid& g, std::int64_t pi) {
    const int p0 = static_cast<int>(pi / (g.g1 * g.g2));
    const int p1 = static_cast<int>((pi / g.g2) % g.g1);
    const int p2 = static_cast<int>(pi % g.g2);
    return mask.data[mask.index(p0 * g.ps, p1 * g.ps, p2 * g.ps)] > 0.5f;
}

// One patch through the model. x (P), a/h (E), y (P) are caller scratch;
// x must already hold the substituted input.
void run_patch(const ToyMaeModel& m, const double* x, double* a, double* h, double* y) {
    const std::int64_t P = m.patch_voxels();
    const std::int64_t E = m.embed_dim;
    for (std::int64_t e = 0; e < E; ++e) a[e] = m.enc_b[static_cast<std::size_t>(e)];
    for (std::int64_t p = 0; p < P; ++p) {
        const double xp = x[p];
        const float* row = m.enc_w.data() + p * E;
        for (std::int64_t e = 0; e < E; ++e) a[e] += static_cast<double>(row[e]) * xp;
    }
    for (std::int64_t e = 0; e < E; ++e) h[e] = a[e] > 0.0 ? a[e] : 0.0;
    for (std::int64_t p = 0; p < P; ++p) y[p] = m.dec_b[static_cast<std::size_t>(p)];
    for (std::int64_t e = 0; e < E; ++e) {
        const double he = h[e];
        const float* row = m.dec_w.data() + e * P;
        for (std::int64_t p = 0; p < P; ++p) y[p] += static_cast<double>(row[p]) * he;
    }
}

void fill_input(const ToyMaeModel& m, const ReconBatch& batch, const PatchGrid& g,
                std::int64_t pi, double* x) {
    const std::int64_t P = m.patch_voxels();
    if (patch_masked(batch.mask, g, pi)) {
        if (m.masked_input == MaskedInput::mask_token) {
            for (std::int64_t p = 0; p < P; ++p)
                x[p] = static_cast<double>(m.mask_token[static_cast<std::size_t>(p)]);
        } else {
            for (std::int64_t p = 0; p < P; ++p) x[p] = 0.0;
        }
    } else {
        gather_patch(batch.input, g, pi, x);
    }
}

}  // namespace

void ToyMaeModel::validate() const {
    if (patch_size <= 0) throw std::invalid_argument("toy model: patch_size must be positive");
    if (embed_dim <= 0) throw std::invalid_argument("toy model: embed_dim must be positive");
    const std::size_t P = static_cast<std::size_t>(patch_voxels());
    const std::size_t E = static_cast<std::size_t>(embed_dim);
    if (enc_w.size() != P * E || enc_b.size() != E || dec_w.size() != E * P ||
        dec_b.size() != P || mask_token.size() != P)
        throw std::invalid_argument("toy model: weight shapes inconsistent with patch_size/embed_dim");
    if (!(all_finite(enc_w) && all_finite(enc_b) && all_finite(dec_w) && all_finite(dec_b) &&
          all_finite(mask_token)))
        throw std::invalid_argument("toy model: non-finite weight");
}

ToyMaeModel init_toy_model(int patch_size, int embed_dim, std::uint64_t seed,
                           MaskedInput masked_input) {
    if (patch_size <= 0 || embed_dim <= 0)
        throw std::invalid_argument("init_toy_model: patch_size and embed_dim must be positive");
    ToyMaeModel m;
    m.patch_size = patch_size;
    m.embed_dim = embed_dim;
    m.masked_input = masked_input;
    const std::size_t P = static_cast<std::size_t>(m.patch_voxels());
    const std::size_t E = static_cast<std::size_t>(embed_dim);
    const float b_in = 1.0f / std::sqrt(static_cast<float>(P));
    const float b_emb = 1.0f / std::sqrt(static_cast<float>(E));
    SplitMix64 rng(seed);
    auto draw = [&](std::vector<float>& w, std::size_t n, float bound) {
        w.resize(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = rng.uniform(-bound, bound);
    };
    draw(m.enc_w, P * E, b_in);
    draw(m.enc_b, E, b_in);
    draw(m.dec_w, E * P, b_emb);
    draw(m.dec_b, P, b_emb);
    draw(m.mask_token, P, b_in);
    return m;
}

void TrainConfig::validate() const {
    if (!std::isfinite(learning_rate) || learning_rate < 0.0f)
        throw std::invalid_argument("train config: learning_rate must be finite and non-negative");
    if (steps < 0) throw std::invalid_argument("train config: steps must be non-negative");
    if (embed_dim <= 0) throw std::invalid_argument("train config: embed_dim must be positive");
    if (!(loss_eps > 0.0f) || !std::isfinite(loss_eps))
        throw std::invalid_argument("train config: loss_eps must be positive");
    if (!(adamw.beta1 >= 0.0f && adamw.beta1 < 1.0f && adamw.beta2 >= 0.0f && adamw.beta2 < 1.0f))
        throw std::invalid_argument("train config: adamw betas must be in [0, 1)");
    if (!(adamw.eps > 0.0f) || adamw.weight_decay < 0.0f)
        throw std::invalid_argument("train config: adamw eps must be positive, weight_decay non-negative");
}

Volume3D forward(const ToyMaeModel& model, const ReconBatch& batch) {
    model.validate();
    if (!batch.input.same_dims(batch.mask) || !batch.input.same_dims(batch.target))
        throw std::invalid_argument("forward: batch volume dims mismatch");
    check_divisible(batch.input, model.patch_size, "forward");

    const PatchGrid g = grid_of(batch.input, model.patch_size);
    const std::int64_t P = model.patch_voxels();
    const std::int64_t E = model.embed_dim;
    Volume3D pred = make_volume(batch.input.dims, batch.input.spacing);

    parallel_for(g.count(), [&](std::int64_t pi) {
        std::vector<double> x(static_cast<std::size_t>(P)), a(static_cast<std::size_t>(E)),
            h(static_cast<std::size_t>(E)), y(static_cast<std::size_t>(P));
        fill_input(model, batch, g, pi, x.data());
        run_patch(model, x.data(), a.data(), h.data(), y.data());
        const int p0 = static_cast<int>(pi / (g.g1 * g.g2));
        const int p1 = static_cast<int>((pi / g.g2) % g.g1);
        const int p2 = static_cast<int>(pi % g.g2);
        std::int64_t j = 0;
        for (int i0 = p0 * g.ps; i0 < (p0 + 1) * g.ps; ++i0)
            for (int i1 = p1 * g.ps; i1 < (p1 + 1) * g.ps; ++i1)
                for (int i2 = p2 * g.ps; i2 < (p2 + 1) * g.ps; ++i2)
                    pred.data[pred.index(i0, i1, i2)] = static_cast<float>(y[j++]);
    });
    return pred;
}

double masked_mse(const Volume3D& prediction, const Volume3D& target, const Volume3D& mask,
                  double eps) {
    if (!prediction.same_dims(target) || !prediction.same_dims(mask))
        throw std::invalid_argument("masked_mse: dims mismatch");
    if (!(eps > 0.0)) throw std::invalid_argument("masked_mse: eps must be positive");
    double num = 0.0, den = 0.0;
    const std::size_t n = prediction.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double m = mask.data[i];
        const double d = static_cast<double>(prediction.data[i]) - target.data[i];
        num += m * d * d;
        den += m;
    }
    return num / (den + eps);
}

ToyMaeGrads backward(const ToyMaeModel& model, const ReconBatch& batch, double eps) {
    model.validate();
    if (!batch.input.same_dims(batch.mask) || !batch.input.same_dims(batch.target))
        throw std::invalid_argument("backward: batch volume dims mismatch");
    check_divisible(batch.input, model.patch_size, "backward");
    if (!(eps > 0.0)) throw std::invalid_argument("backward: eps must be positive");

    const PatchGrid g = grid_of(batch.input, model.patch_size);
    const std::int64_t P = model.patch_voxels();
    const std::int64_t E = model.embed_dim;

    ToyMaeGrads grads;
    grads.enc_w.assign(static_cast<std::size_t>(P * E), 0.0);
    grads.enc_b.assign(static_cast<std::size_t>(E), 0.0);
    grads.dec_w.assign(static_cast<std::size_t>(E * P), 0.0);
    grads.dec_b.assign(static_cast<std::size_t>(P), 0.0);
    grads.mask_token.assign(static_cast<std::size_t>(P), 0.0);

    double den = eps;
    for (float mv : batch.mask.data) den += mv;

    std::vector<double> x(static_cast<std::size_t>(P)), a(static_cast<std::size_t>(E)),
        h(static_cast<std::size_t>(E)), y(static_cast<std::size_t>(P)),
        gy(static_cast<std::size_t>(P)), ga(static_cast<std::size_t>(E)),
        t(static_cast<std::size_t>(P)), mw(static_cast<std::size_t>(P));

    double num = 0.0;
    const std::int64_t n_patches = g.count();
    for (std::int64_t pi = 0; pi < n_patches; ++pi) {
        fill_input(model, batch, g, pi, x.data());
        run_patch(model, x.data(), a.data(), h.data(), y.data());
        gather_patch(batch.target, g, pi, t.data());
        gather_patch(batch.mask, g, pi, mw.data());

        // Prediction is float in the forward contract; differentiate the
        // same rounded values so the reported loss matches masked_mse.
        for (std::int64_t p = 0; p < P; ++p) {
            const double yp = static_cast<double>(static_cast<float>(y[p]));
            const double d = yp - t[p];
            num += mw[p] * d * d;
            gy[p] = 2.0 * mw[p] * d / den;
        }

        for (std::int64_t p = 0; p < P; ++p) grads.dec_b[static_cast<std::size_t>(p)] += gy[p];
        for (std::int64_t e = 0; e < E; ++e) {
            const double he = h[e];
            const float* row = model.dec_w.data() + e * P;
            double acc = 0.0;
            double* gw = grads.dec_w.data() + e * P;
            for (std::int64_t p = 0; p < P; ++p) {
                gw[p] += he * gy[p];
                acc += static_cast<double>(row[p]) * gy[p];
            }
            ga[e] = a[e] > 0.0 ? acc : 0.0;
        }
        for (std::int64_t e = 0; e < E; ++e) grads.enc_b[static_cast<std::size_t>(e)] += ga[e];
        const bool masked = patch_masked(batch.mask, g, pi);
        for (std::int64_t p = 0; p < P; ++p) {
            const double xp = x[p];
            const float* row = model.enc_w.data() + p * E;
            double* gw = grads.enc_w.data() + p * E;
            double tok = 0.0;
            for (std::int64_t e = 0; e < E; ++e) {
                gw[e] += xp * ga[e];
                tok += static_cast<double>(row[e]) * ga[e];
            }
            if (masked && model.masked_input == MaskedInput::mask_token)
                grads.mask_token[static_cast<std::size_t>(p)] += tok;
        }
    }
    grads.loss = num / den;
    return grads;
}

namespace {

struct AdamState {
    std::vector<double> m, v;
};

void adamw_update(std::vector<float>& w, const std::vector<double>& g, AdamState& st,
                  const TrainConfig& cfg, std::int64_t t, bool decay) {
    const double b1 = cfg.adamw.beta1, b2 = cfg.adamw.beta2;
    const double lr = cfg.learning_rate, eps = cfg.adamw.eps;
    const double wd = decay ? cfg.adamw.weight_decay : 0.0;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < w.size(); ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = st.m[i] / c1;
        const double vhat = st.v[i] / c2;
        w[i] = static_cast<float>(w[i] - lr * (mhat / (std::sqrt(vhat) + eps) + wd * w[i]));
    }
}

void sgd_update(std::vector<float>& w, const std::vector<double>& g, double lr) {
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = static_cast<float>(w[i] - lr * g[i]);
}

}  // namespace

PretrainResult pretrain_toy(const std::vector<Volume3D>& volumes, const TvmConfig& tvm_cfg,
                            const MaskConfig& mask_cfg, const TrainConfig& train_cfg) {
    tvm_cfg.validate();
    mask_cfg.validate();
    train_cfg.validate();
    if (volumes.empty()) throw std::invalid_argument("pretrain_toy: need at least one volume");
    for (const Volume3D& v : volumes) check_divisible(v, mask_cfg.patch_size, "pretrain_toy");

    std::vector<PatchScores> scores;
    scores.reserve(volumes.size());
    for (const Volume3D& v : volumes) {
        const VariationMap map = compute_variation_map(v, tvm_cfg);
        scores.push_back(patch_scores(map, mask_cfg.patch_size));
    }

    const SplitMix64 base(train_cfg.seed);
    PretrainResult res;
    res.model = init_toy_model(mask_cfg.patch_size, train_cfg.embed_dim, base.split(0).key(),
                               train_cfg.masked_input);
    res.trace.reserve(static_cast<std::size_t>(train_cfg.steps));

    AdamState s_enc_w, s_enc_b, s_dec_w, s_dec_b, s_tok;
    if (train_cfg.optimizer == Optimizer::adamw_like) {
        auto init = [](AdamState& st, std::size_t n) {
            st.m.assign(n, 0.0);
            st.v.assign(n, 0.0);
        };
        init(s_enc_w, res.model.enc_w.size());
        init(s_enc_b, res.model.enc_b.size());
        init(s_dec_w, res.model.dec_w.size());
        init(s_dec_b, res.model.dec_b.size());
        init(s_tok, res.model.mask_token.size());
    }

    for (int t = 0; t < train_cfg.steps; ++t) {
        const std::size_t vi = static_cast<std::size_t>(t) % volumes.size();
        MaskConfig mc = mask_cfg;
        mc.seed = base.split(1 + static_cast<std::uint64_t>(t)).key();
        const PatchMask pm = generate_mask(scores[vi], mc);

        ReconBatch batch;
        batch.mask = expand_mask(pm, mask_cfg.patch_size, volumes[vi].spacing);
        batch.target = volumes[vi];
        batch.input = apply_mask(volumes[vi], batch.mask);

        const ToyMaeGrads g = backward(res.model, batch, train_cfg.loss_eps);
        if (!std::isfinite(g.loss))
            throw std::runtime_error("pretrain_toy: non-finite loss at step " + std::to_string(t));
        res.trace.push_back(g.loss);

        if (train_cfg.optimizer == Optimizer::sgd) {
            const double lr = train_cfg.learning_rate;
            sgd_update(res.model.enc_w, g.enc_w, lr);
            sgd_update(res.model.enc_b, g.enc_b, lr);
            sgd_update(res.model.dec_w, g.dec_w, lr);
            sgd_update(res.model.dec_b, g.dec_b, lr);
            sgd_update(res.model.mask_token, g.mask_token, lr);
        } else {
            const std::int64_t step1 = t + 1;
            adamw_update(res.model.enc_w, g.enc_w, s_enc_w, train_cfg, step1, true);
            adamw_update(res.model.enc_b, g.enc_b, s_enc_b, train_cfg, step1, false);
            adamw_update(res.model.dec_w, g.dec_w, s_dec_w, train_cfg, step1, true);
            adamw_update(res.model.dec_b, g.dec_b, s_dec_b, train_cfg, step1, false);
            adamw_update(res.model.mask_token, g.mask_token, s_tok, train_cfg, step1, false);
        }
    }
    return res;
}

}  // namespace atmask
