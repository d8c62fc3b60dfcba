// mask_gen.hpp
// Texture-guided patch masking: pool a variation map to a patch grid,
// allocate a fraction of the mask budget to high-variation patches, fill
// the rest uniformly at random, and expand back to voxel resolution.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "atmask/texture_map.hpp"
#include "atmask/volume.hpp"

namespace atmask {

/// How threshold_tau is interpreted: an absolute score threshold, or a
/// per-volume quantile of the patch scores (nearest rank).
enum class TauMode { absolute, quantile };

struct MaskConfig {
    int patch_size = 16;                  // cubic patch edge, voxels
    float mask_ratio_r = 0.75f;           // overall masking ratio in [0, 1]
    float high_var_fraction_beta = 0.65f; // mask budget share for high-variation patches
    float threshold_tau = 0.5f;           // high-variation threshold (or quantile)
    TauMode tau_mode = TauMode::absolute;
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

/// Per-patch mean variation scores on the non-overlapping patch grid,
/// enumerated axis-0-major: index = (p0 * g1 + p1) * g2 + p2.
struct PatchScores {
    std::array<int, 3> grid_dims{0, 0, 0};
    std::vector<float> scores;

    std::int64_t n_patches() const {
        return static_cast<std::int64_t>(grid_dims[0]) * grid_dims[1] * grid_dims[2];
    }
    /// Number of patches with score strictly above tau.
    std::int64_t count_high(float tau) const;
};

/// Patch-level binary mask plus its allocation bookkeeping. m patches are
/// masked in total; m_h of them were assigned in the high-variation phase
/// and m_r in the uniform remainder phase.
struct PatchMask {
    std::array<int, 3> grid_dims{0, 0, 0};
    std::vector<std::uint8_t> bits;  // 1 = masked
    std::int64_t m = 0;
    std::int64_t m_h = 0;
    std::int64_t m_r = 0;

    std::int64_t popcount() const;
};

struct CoverageStats {
    double frac_masked_high = 0.0;  // fraction of masked patches that are high-variation
    double frac_high_masked = 0.0;  // fraction of high-variation patches that are masked
    double mean_u_masked = 0.0;
    double mean_u_unmasked = 0.0;
    std::int64_t n_high = 0;
    std::int64_t n_masked_high = 0;
};

/// Mean of the map over each non-overlapping cubic patch. Every map dim
/// must be divisible by patch_size; the error names the offending axis.
PatchScores patch_scores(const VariationMap& map, int patch_size);

/// Resolve the effective threshold: the config value itself in absolute
/// mode, or the nearest-rank quantile of `scores` in quantile mode.
float effective_tau(const PatchScores& scores, const MaskConfig& cfg);

/// Draw the patch mask. m = floor(r * N_p) patches are masked:
/// m_h = min(floor(beta * m), N_h) drawn uniformly without replacement from
/// the patches scoring above tau, then m_r = m - m_h drawn uniformly from
/// all patches still unmasked (high-variation ones included). Sampling is a
/// single SplitMix64 stream seeded with cfg.seed: shuffle the high-variation
/// index list and take the first m_h, then shuffle the remaining index list
/// and take the first m_r. Bit-identical for a fixed (scores, cfg).
PatchMask generate_mask(const PatchScores& scores, const MaskConfig& cfg);

/// Upsample a patch mask to voxel resolution: 1 inside masked patches,
/// 0 elsewhere. `spacing` is carried through to the output volume.
Volume3D expand_mask(const PatchMask& pm, int patch_size,
                     std::array<float, 3> spacing = {1.0f, 1.0f, 1.0f});

/// Zero out masked voxels: v * (1 - mask).
Volume3D apply_mask(const Volume3D& v, const Volume3D& mask);

/// Coverage summary of a mask against the scores that produced it.
CoverageStats mask_coverage_stats(const PatchMask& pm, const PatchScores& scores, float tau);

}  // namespace atmask
