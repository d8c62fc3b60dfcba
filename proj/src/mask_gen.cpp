#include "atmask/mask_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "atmask/rng.hpp"

namespace atmask {

void MaskConfig::validate() const {
    if (patch_size <= 0)
        throw std::invalid_argument("mask config: patch_size must be positive");
    if (!(mask_ratio_r >= 0.0f && mask_ratio_r <= 1.0f))
        throw std::invalid_argument("mask config: mask_ratio_r must be in [0, 1]");
    if (!(high_var_fraction_beta >= 0.0f && high_var_fraction_beta <= 1.0f))
        throw std::invalid_argument("mask config: high_var_fraction_beta must be in [0, 1]");
    if (tau_mode == TauMode::quantile &&
        !(threshold_tau >= 0.0f && threshold_tau <= 1.0f))
        throw std::invalid_argument("mask config: quantile threshold_tau must be in [0, 1]");
    if (!std::isfinite(threshold_tau))
        throw std::invalid_argument("mask config: threshold_tau must be finite");
}

std::int64_t PatchScores::count_high(float tau) const {
    std::int64_t n = 0;
    for (float s : scores) n += (s > tau) ? 1 : 0;
    return n;
}

std::int64_t PatchMask::popcount() const {
    std::int64_t n = 0;
    for (std::uint8_t b : bits) n += b;
    return n;
}

PatchScores patch_scores(const VariationMap& map, int patch_size) {
    if (patch_size <= 0) throw std::invalid_argument("patch_scores: patch_size must be positive");
    static const char* axis_name[3] = {"0", "1", "2"};
    for (int a = 0; a < 3; ++a) {
        if (map.dims[a] % patch_size != 0)
            throw std::invalid_argument(
                "patch_scores: dim " + std::string(axis_name[a]) + " (" +
                std::to_string(map.dims[a]) + ") not divisible by patch_size " +
                std::to_string(patch_size));
    }

    PatchScores ps;
    ps.grid_dims = {map.dims[0] / patch_size, map.dims[1] / patch_size,
                    map.dims[2] / patch_size};
    ps.scores.assign(static_cast<std::size_t>(ps.n_patches()), 0.0f);

    const int g1 = ps.grid_dims[1], g2 = ps.grid_dims[2];
    const double inv_n = 1.0 / (static_cast<double>(patch_size) * patch_size * patch_size);
    for (int p0 = 0; p0 < ps.grid_dims[0]; ++p0)
        for (int p1 = 0; p1 < g1; ++p1)
            for (int p2 = 0; p2 < g2; ++p2) {
                double acc = 0.0;
                for (int i0 = p0 * patch_size; i0 < (p0 + 1) * patch_size; ++i0)
                    for (int i1 = p1 * patch_size; i1 < (p1 + 1) * patch_size; ++i1)
                        for (int i2 = p2 * patch_size; i2 < (p2 + 1) * patch_size; ++i2)
                            acc += map.at(i0, i1, i2);
                ps.scores[static_cast<std::size_t>((p0 * g1 + p1) * g2 + p2)] =
                    static_cast<float>(acc * inv_n);
            }
    return ps;
}

float effective_tau(const PatchScores& scores, const MaskConfig& cfg) {
    if (cfg.tau_mode == TauMode::absolute) return cfg.threshold_tau;
    if (scores.scores.empty())
        throw std::invalid_argument("effective_tau: no patches");
    // Nearest-rank quantile: k-th smallest with k = ceil(q * n), clamped to [1, n].
    std::vector<float> sorted(scores.scores);
    std::sort(sorted.begin(), sorted.end());
    const std::int64_t n = static_cast<std::int64_t>(sorted.size());
    std::int64_t k = static_cast<std::int64_t>(
        std::ceil(static_cast<double>(cfg.threshold_tau) * static_cast<double>(n)));
    k = std::max<std::int64_t>(1, std::min(k, n));
    return sorted[static_cast<std::size_t>(k - 1)];
}

PatchMask generate_mask(const PatchScores& scores, const MaskConfig& cfg) {
    cfg.validate();
    const std::int64_t n_p = scores.n_patches();
    if (n_p <= 0) throw std::invalid_argument("generate_mask: no patches");
    if (static_cast<std::int64_t>(scores.scores.size()) != n_p)
        throw std::invalid_argument("generate_mask: scores length mismatch");

    const float tau = effective_tau(scores, cfg);

    PatchMask pm;
    pm.grid_dims = scores.grid_dims;
    pm.bits.assign(static_cast<std::size_t>(n_p), 0);

    pm.m = static_cast<std::int64_t>(
        std::floor(static_cast<double>(cfg.mask_ratio_r) * static_cast<double>(n_p)));
    if (pm.m == 0) return pm;

    std::vector<std::int64_t> high;
    high.reserve(static_cast<std::size_t>(n_p));
    for (std::int64_t i = 0; i < n_p; ++i)
        if (scores.scores[static_cast<std::size_t>(i)] > tau) high.push_back(i);
    const std::int64_t n_h = static_cast<std::int64_t>(high.size());

    pm.m_h = std::min(static_cast<std::int64_t>(std::floor(
                          static_cast<double>(cfg.high_var_fraction_beta) *
                          static_cast<double>(pm.m))),
                      n_h);
    pm.m_r = pm.m - pm.m_h;

    SplitMix64 rng(cfg.seed);
    rng.shuffle(high);
    for (std::int64_t i = 0; i < pm.m_h; ++i)
        pm.bits[static_cast<std::size_t>(high[static_cast<std::size_t>(i)])] = 1;

    // Remainder pool: every still-unmasked patch, high-variation or not.
    std::vector<std::int64_t> rest;
    rest.reserve(static_cast<std::size_t>(n_p - pm.m_h));
    for (std::int64_t i = 0; i < n_p; ++i)
        if (!pm.bits[static_cast<std::size_t>(i)]) rest.push_back(i);
    rng.shuffle(rest);
    for (std::int64_t i = 0; i < pm.m_r; ++i)
        pm.bits[static_cast<std::size_t>(rest[static_cast<std::size_t>(i)])] = 1;

    return pm;
}

Volume3D expand_mask(const PatchMask& pm, int patch_size, std::array<float, 3> spacing) {
    if (patch_size <= 0) throw std::invalid_argument("expand_mask: patch_size must be positive");
    Volume3D out = make_volume({pm.grid_dims[0] * patch_size, pm.grid_dims[1] * patch_size,
                                pm.grid_dims[2] * patch_size},
                               spacing);
    const int g1 = pm.grid_dims[1], g2 = pm.grid_dims[2];
    for (int i0 = 0; i0 < out.dims[0]; ++i0) {
        const int p0 = i0 / patch_size;
        for (int i1 = 0; i1 < out.dims[1]; ++i1) {
            const int p1 = i1 / patch_size;
            for (int i2 = 0; i2 < out.dims[2]; ++i2) {
                const int p2 = i2 / patch_size;
                out.data[out.index(i0, i1, i2)] = static_cast<float>(
                    pm.bits[static_cast<std::size_t>((p0 * g1 + p1) * g2 + p2)]);
            }
        }
    }
    return out;
}

Volume3D apply_mask(const Volume3D& v, const Volume3D& mask) {
    if (!v.same_dims(mask))
        throw std::invalid_argument("apply_mask: volume/mask dims mismatch");
    Volume3D out = v;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] *= 1.0f - mask.data[i];
    return out;
}

CoverageStats mask_coverage_stats(const PatchMask& pm, const PatchScores& scores, float tau) {
    if (pm.grid_dims != scores.grid_dims)
        throw std::invalid_argument("mask_coverage_stats: grid dims mismatch");
    CoverageStats st;
    const std::int64_t n_p = scores.n_patches();
    std::int64_t n_masked = 0;
    double sum_masked = 0.0, sum_unmasked = 0.0;
    for (std::int64_t i = 0; i < n_p; ++i) {
        const float u = scores.scores[static_cast<std::size_t>(i)];
        const bool masked = pm.bits[static_cast<std::size_t>(i)] != 0;
        const bool high = u > tau;
        st.n_high += high ? 1 : 0;
        if (masked) {
            ++n_masked;
            sum_masked += u;
            st.n_masked_high += high ? 1 : 0;
        } else {
            sum_unmasked += u;
        }
    }
    if (n_masked > 0) {
        st.frac_masked_high = static_cast<double>(st.n_masked_high) / static_cast<double>(n_masked);
        st.mean_u_masked = sum_masked / static_cast<double>(n_masked);
    }
    if (st.n_high > 0)
        st.frac_high_masked = static_cast<double>(st.n_masked_high) / static_cast<double>(st.n_high);
    if (n_p - n_masked > 0)
        st.mean_u_unmasked = sum_unmasked / static_cast<double>(n_p - n_masked);
    return st;
}

}  // namespace atmask
