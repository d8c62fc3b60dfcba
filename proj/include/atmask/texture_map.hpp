// texture_map.hpp
// 3D texture-variation map: per-slice gradient-magnitude and local-variance
// cues, combined per slice, group-maxed across consecutive slices along
// axis 0, Gaussian-smoothed, and normalized to [0, 1].

#pragma once

#include <array>
#include <vector>

#include "atmask/volume.hpp"

namespace atmask {

/// What to do with a trailing slice group shorter than the stride:
/// zero_remainder leaves those slices at zero, process_remainder treats
/// them as a smaller group.
enum class PartialGroupMode { zero_remainder, process_remainder };

/// Scope of the min-max normalization applied to the gradient and variance
/// cues before they are combined. Per-slice is the default; global uses one
/// min/max per cue across all processed slices of the volume.
enum class CueNormScope { per_slice, global };

struct TvmConfig {
    float alpha = 0.6f;          // gradient weight in [0, 1]
    int stride_s = 4;            // slice-group size, >= 1
    int var_window_w = 5;        // mean-filter window, odd, >= 3
    float gaussian_sigma = 1.0f; // voxels, >= 0; 0 disables smoothing
    PartialGroupMode partial_group_mode = PartialGroupMode::zero_remainder;
    CueNormScope cue_norm = CueNormScope::per_slice;

    void validate() const;  // throws std::invalid_argument
};

/// 2D float map; rows run along volume axis 1, columns along axis 2.
struct Slice2D {
    int rows = 0, cols = 0;
    std::vector<float> data;  // row-major

    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c);
    }
    float& at(int r, int c) { return data[index(r, c)]; }
    float at(int r, int c) const { return data[index(r, c)]; }
};

/// Raw and normalized per-slice cues.
struct SliceCues {
    Slice2D grad;       // Sobel gradient magnitude, >= 0
    Slice2D var;        // local variance, >= 0
    Slice2D grad_norm;  // min-max normalized to [0, 1]
    Slice2D var_norm;
};

/// Per-voxel texture score with the same dims as the source volume.
struct VariationMap {
    std::array<int, 3> dims{0, 0, 0};
    std::vector<float> data;
    bool normalized = false;

    std::size_t size() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t index(int i0, int i1, int i2) const {
        return (static_cast<std::size_t>(i0) * dims[1] + i1) * dims[2] + i2;
    }
    float at(int i0, int i1, int i2) const { return data[index(i0, i1, i2)]; }
};

/// Copy slice z (plane along axes 1 and 2) out of a volume.
Slice2D extract_slice(const Volume3D& v, int z);

/// Sobel gradient magnitude with the standard 3x3 kernels and replicate
/// padding. A degenerate 1x1 slice returns 0.
Slice2D slice_gradient(const Slice2D& slice);

/// Local variance E[x^2] - E[x]^2 over a w x w mean-filter window with
/// replicate padding; w odd >= 3. Negative rounding residue is clamped to 0.
Slice2D slice_variance(const Slice2D& slice, int w);

/// Min-max normalize a map to [0, 1]; a constant map comes back all zero.
Slice2D min_max_normalize(const Slice2D& m);

/// Gradient and variance cues for one slice, raw and normalized.
SliceCues compute_slice_cues(const Slice2D& slice, const TvmConfig& cfg);

/// Weighted combination alpha * grad_norm + (1 - alpha) * var_norm, with
/// both cues min-max normalized over this slice.
Slice2D slice_variation(const Slice2D& slice, const TvmConfig& cfg);

/// Separable 3D Gaussian blur: kernel radius ceil(3 sigma), kernel
/// normalized to sum 1 per axis, replicate padding. sigma = 0 is the
/// identity. `dims` gives the shape of `map` (axis-0-major).
std::vector<float> gaussian_blur_3d(const std::vector<float>& map, std::array<int, 3> dims,
                                    float sigma);

/// Full texture-variation map: iterate slice groups of stride_s along
/// axis 0, take the element-wise maximum of the slice variations within
/// each group, broadcast the group map to every slice of the group, smooth
/// with a Gaussian when sigma > 0, then divide by the global maximum when
/// positive. Groups are processed in parallel; the output is bitwise
/// independent of the schedule.
VariationMap compute_variation_map(const Volume3D& v, const TvmConfig& cfg);

}  // namespace atmask
