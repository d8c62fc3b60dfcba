#include "atmask/texture_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "atmask/parallel.hpp"

namespace atmask {

void TvmConfig::validate() const {
    if (!(alpha >= 0.0f && alpha <= 1.0f))
        throw std::invalid_argument("TvmConfig: alpha must be in [0, 1]");
    if (stride_s < 1) throw std::invalid_argument("TvmConfig: stride_s must be >= 1");
    if (var_window_w < 3 || var_window_w % 2 == 0)
        throw std::invalid_argument("TvmConfig: var_window_w must be odd and >= 3");
    if (!(gaussian_sigma >= 0.0f))
        throw std::invalid_argument("TvmConfig: gaussian_sigma must be >= 0");
}

Slice2D extract_slice(const Volume3D& v, int z) {
    Slice2D s;
    s.rows = v.dims[1];
    s.cols = v.dims[2];
    const std::size_t plane = static_cast<std::size_t>(s.rows) * s.cols;
    s.data.assign(v.data.begin() + static_cast<std::ptrdiff_t>(z * plane),
                  v.data.begin() + static_cast<std::ptrdiff_t>((z + 1) * plane));
    return s;
}

namespace {

inline int clampi(int i, int lo, int hi) { return i < lo ? lo : (i > hi ? hi : i); }

}  // namespace

Slice2D slice_gradient(const Slice2D& slice) {
    const int R = slice.rows, C = slice.cols;
    Slice2D out;
    out.rows = R;
    out.cols = C;
    out.data.resize(slice.data.size());

    // S_x = [-1 0 1; -2 0 2; -1 0 1], S_y = S_x transposed; replicate padding.
    for (int r = 0; r < R; ++r) {
        const int rm = clampi(r - 1, 0, R - 1), rp = clampi(r + 1, 0, R - 1);
        for (int c = 0; c < C; ++c) {
            const int cm = clampi(c - 1, 0, C - 1), cp = clampi(c + 1, 0, C - 1);
            const float a = slice.at(rm, cm), b = slice.at(rm, c), d = slice.at(rm, cp);
            const float e = slice.at(r, cm), g = slice.at(r, cp);
            const float h = slice.at(rp, cm), i = slice.at(rp, c), j = slice.at(rp, cp);
            const float gx = (d + 2.0f * g + j) - (a + 2.0f * e + h);
            const float gy = (h + 2.0f * i + j) - (a + 2.0f * b + d);
            out.at(r, c) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

Slice2D slice_variance(const Slice2D& slice, int w) {
    if (w < 3 || w % 2 == 0)
        throw std::invalid_argument("slice_variance: window must be odd and >= 3");
    const int R = slice.rows, C = slice.cols;
    const int h = w / 2;
    const double inv_n = 1.0 / (static_cast<double>(w) * w);
    Slice2D out;
    out.rows = R;
    out.cols = C;
    out.data.resize(slice.data.size());

    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            double s1 = 0.0, s2 = 0.0;
            for (int dr = -h; dr <= h; ++dr) {
                const int rr = clampi(r + dr, 0, R - 1);
                for (int dc = -h; dc <= h; ++dc) {
                    const double x = slice.at(rr, clampi(c + dc, 0, C - 1));
                    s1 += x;
                    s2 += x * x;
                }
            }
            const double mean = s1 * inv_n;
            const double var = s2 * inv_n - mean * mean;
            out.at(r, c) = static_cast<float>(std::max(var, 0.0));
        }
    }
    return out;
}

Slice2D min_max_normalize(const Slice2D& m) {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (float x : m.data) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    Slice2D out;
    out.rows = m.rows;
    out.cols = m.cols;
    out.data.resize(m.data.size());
    if (hi > lo) {
        // Divide rather than multiply by a reciprocal so the max maps to 1
        // exactly and nothing leaves [0, 1].
        const float range = hi - lo;
        for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = (m.data[i] - lo) / range;
    }  // constant map -> all zeros
    return out;
}

SliceCues compute_slice_cues(const Slice2D& slice, const TvmConfig& cfg) {
    SliceCues cues;
    cues.grad = slice_gradient(slice);
    cues.var = slice_variance(slice, cfg.var_window_w);
    cues.grad_norm = min_max_normalize(cues.grad);
    cues.var_norm = min_max_normalize(cues.var);
    return cues;
}

Slice2D slice_variation(const Slice2D& slice, const TvmConfig& cfg) {
    cfg.validate();
    SliceCues cues = compute_slice_cues(slice, cfg);
    Slice2D out;
    out.rows = slice.rows;
    out.cols = slice.cols;
    out.data.resize(slice.data.size());
    const float a = cfg.alpha;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = a * cues.grad_norm.data[i] + (1.0f - a) * cues.var_norm.data[i];
    return out;
}

namespace {

std::vector<double> gaussian_kernel_1d(float sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    const double denom = 2.0 * static_cast<double>(sigma) * sigma;
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-(static_cast<double>(i) * i) / denom);
        k[i + radius] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

// One replicate-padded separable pass along `axis`.
void blur_axis(const std::vector<float>& in, std::vector<float>& out, std::array<int, 3> dims,
               const std::vector<double>& kernel, int axis) {
    const int radius = static_cast<int>(kernel.size() / 2);
    const int d0 = dims[0], d1 = dims[1], d2 = dims[2];
    const std::int64_t stride[3] = {static_cast<std::int64_t>(d1) * d2, d2, 1};
    const int extent = dims[axis];
    const std::int64_t ax_stride = stride[axis];

    parallel_for(d0, [&](std::int64_t i0) {
        for (int i1 = 0; i1 < d1; ++i1) {
            for (int i2 = 0; i2 < d2; ++i2) {
                const int idx3[3] = {static_cast<int>(i0), i1, i2};
                const std::int64_t base = i0 * stride[0] + i1 * stride[1] + i2;
                const int p = idx3[axis];
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int q = clampi(p + k, 0, extent - 1);
                    acc += kernel[k + radius] * in[base + static_cast<std::int64_t>(q - p) * ax_stride];
                }
                out[base] = static_cast<float>(acc);
            }
        }
    });
}

}  // namespace

std::vector<float> gaussian_blur_3d(const std::vector<float>& map, std::array<int, 3> dims,
                                    float sigma) {
    if (!(sigma >= 0.0f)) throw std::invalid_argument("gaussian_blur_3d: sigma must be >= 0");
    if (sigma == 0.0f) return map;
    const std::vector<double> kernel = gaussian_kernel_1d(sigma);
    std::vector<float> a = map, b(map.size());
    blur_axis(a, b, dims, kernel, 0);
    blur_axis(b, a, dims, kernel, 1);
    blur_axis(a, b, dims, kernel, 2);
    return b;
}

VariationMap compute_variation_map(const Volume3D& v, const TvmConfig& cfg) {
    cfg.validate();
    const int D = v.dims[0];
    const std::size_t plane = static_cast<std::size_t>(v.dims[1]) * v.dims[2];

    VariationMap map;
    map.dims = v.dims;
    map.data.assign(v.size(), 0.0f);

    // Starts of the groups that actually get processed.
    std::vector<int> group_start;
    for (int z = 0; z < D; z += cfg.stride_s) {
        if (z + cfg.stride_s <= D || cfg.partial_group_mode == PartialGroupMode::process_remainder)
            group_start.push_back(z);
    }

    if (cfg.cue_norm == CueNormScope::per_slice) {
        parallel_for(static_cast<std::int64_t>(group_start.size()), [&](std::int64_t gi) {
            const int z0 = group_start[gi];
            const int z1 = std::min(z0 + cfg.stride_s, D);
            std::vector<float> group_max(plane, 0.0f);
            for (int z = z0; z < z1; ++z) {
                Slice2D var = slice_variation(extract_slice(v, z), cfg);
                for (std::size_t i = 0; i < plane; ++i)
                    group_max[i] = std::max(group_max[i], var.data[i]);
            }
            for (int z = z0; z < z1; ++z)
                std::copy(group_max.begin(), group_max.end(), map.data.begin() + z * plane);
        });
    } else {
        // Global cue normalization: one min/max per cue over all processed
        // slices, then the same group-max/broadcast pass.
        std::vector<int> slices;
        for (int z0 : group_start)
            for (int z = z0; z < std::min(z0 + cfg.stride_s, D); ++z) slices.push_back(z);

        std::vector<Slice2D> grads(slices.size()), vars(slices.size());
        parallel_for(static_cast<std::int64_t>(slices.size()), [&](std::int64_t si) {
            Slice2D s = extract_slice(v, slices[si]);
            grads[si] = slice_gradient(s);
            vars[si] = slice_variance(s, cfg.var_window_w);
        });
        float glo = std::numeric_limits<float>::infinity(), ghi = -glo;
        float vlo = glo, vhi = -glo;
        for (std::size_t si = 0; si < slices.size(); ++si) {
            for (float x : grads[si].data) { glo = std::min(glo, x); ghi = std::max(ghi, x); }
            for (float x : vars[si].data) { vlo = std::min(vlo, x); vhi = std::max(vhi, x); }
        }
        const float ginv = ghi > glo ? 1.0f / (ghi - glo) : 0.0f;
        const float vinv = vhi > vlo ? 1.0f / (vhi - vlo) : 0.0f;
        const float a = cfg.alpha;

        parallel_for(static_cast<std::int64_t>(group_start.size()), [&](std::int64_t gi) {
            const int z0 = group_start[gi];
            const int z1 = std::min(z0 + cfg.stride_s, D);
            std::vector<float> group_max(plane, 0.0f);
            for (int z = z0; z < z1; ++z) {
                // Index of slice z within the flat slice list: group starts are
                // ordered and contiguous, so it is its position in `slices`.
                const std::size_t si =
                    static_cast<std::size_t>(std::lower_bound(slices.begin(), slices.end(), z) -
                                             slices.begin());
                for (std::size_t i = 0; i < plane; ++i) {
                    const float gn = (grads[si].data[i] - glo) * ginv;
                    const float vn = (vars[si].data[i] - vlo) * vinv;
                    group_max[i] = std::max(group_max[i], a * gn + (1.0f - a) * vn);
                }
            }
            for (int z = z0; z < z1; ++z)
                std::copy(group_max.begin(), group_max.end(), map.data.begin() + z * plane);
        });
    }

    if (cfg.gaussian_sigma > 0.0f)
        map.data = gaussian_blur_3d(map.data, map.dims, cfg.gaussian_sigma);

    float global_max = 0.0f;
    for (float x : map.data) global_max = std::max(global_max, x);
    if (global_max > 0.0f) {
        for (float& x : map.data) x /= global_max;
    }
    map.normalized = true;
    return map;
}

}  // namespace atmask
