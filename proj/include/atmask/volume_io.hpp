// volume_io.hpp
// Load, preprocess, resample and persist 3D volumes.
//
// Two on-disk formats, both bit-exact for float32 round trips:
//  * raw:   little-endian float32 payload in axis-0-major order, plus a
//           structured-text sidecar "<path>.hdr" with keys dims, dtype,
//           spacing. Loading also accepts int16/uint16 payloads.
//  * NIfTI: a deliberately minimal single-file uncompressed NIfTI-1 subset
//           (extension .nii): 348-byte header, vox_offset honored,
//           scl_slope/scl_inter applied when slope is nonzero, scalar dtype
//           int16/uint16/float32. Anything else errors loudly.

#pragma once

#include <string>
#include <vector>

#include "atmask/volume.hpp"

namespace atmask {

enum class Normalization { unit_range, zero_mean_unit_var };

struct PreprocessConfig {
    float hu_lo = -1000.0f;  // clip window, lo < hi
    float hu_hi = 500.0f;
    Normalization normalization = Normalization::unit_range;
    float target_spacing = 0.5f;  // mm; consumed by resample_isotropic callers
};

/// Read a volume from `path`. Format is chosen by extension: ".nii" selects
/// the NIfTI-1 subset, anything else the raw format with sidecar header.
/// Values are widened to float32. Throws std::runtime_error with the path
/// and offending field on malformed input.
Volume3D load_volume(const std::string& path);

/// Write `v` to `path` (format by extension, as in load_volume). The payload
/// is always float32, so load_volume(save_volume(v)) is the identity.
/// Throws if `v` contains non-finite values or on I/O failure.
void save_volume(const Volume3D& v, const std::string& path);

/// Clip values to [hu_lo, hu_hi], then normalize. unit_range maps the window
/// affinely onto [0, 1]; zero_mean_unit_var subtracts the mean and divides by
/// the population standard deviation. A constant volume under
/// zero_mean_unit_var comes back all zero and appends a note to `warnings`.
Volume3D preprocess(const Volume3D& v, const PreprocessConfig& cfg,
                    std::vector<std::string>* warnings = nullptr);

/// Trilinear resampling to isotropic spacing. Output dims along axis i are
/// round(dim_i * spacing_i / target_spacing), at least 1. Sample positions
/// use voxel-center alignment ((j + 0.5) * t / s - 0.5 in input index space)
/// clamped to the valid range, so constants are preserved exactly and output
/// values never leave the input min/max.
Volume3D resample_isotropic(const Volume3D& v, float target_spacing);

}  // namespace atmask
