#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace oracles {

namespace {

int clampi(int i, int lo, int hi) { return i < lo ? lo : (i > hi ? hi : i); }

double at2d(const std::vector<float>& s, int rows, int cols, int r, int c) {
    r = clampi(r, 0, rows - 1);
    c = clampi(c, 0, cols - 1);
    return static_cast<double>(s[static_cast<std::size_t>(r) * cols + c]);
}

}  // namespace

std::vector<double> sobel2d(const std::vector<float>& slice, int rows, int cols) {
    static const int sx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static const int sy[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    std::vector<double> out(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double gx = 0.0, gy = 0.0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const double x = at2d(slice, rows, cols, r + dr, c + dc);
                    gx += sx[dr + 1][dc + 1] * x;
                    gy += sy[dr + 1][dc + 1] * x;
                }
            out[static_cast<std::size_t>(r) * cols + c] = std::sqrt(gx * gx + gy * gy);
        }
    return out;
}

std::vector<double> variance2d(const std::vector<float>& slice, int rows, int cols, int w) {
    const int h = w / 2;
    std::vector<double> out(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double sum = 0.0;
            for (int dr = -h; dr <= h; ++dr)
                for (int dc = -h; dc <= h; ++dc) sum += at2d(slice, rows, cols, r + dr, c + dc);
            const double mean = sum / (static_cast<double>(w) * w);
            double acc = 0.0;
            for (int dr = -h; dr <= h; ++dr)
                for (int dc = -h; dc <= h; ++dc) {
                    const double d = at2d(slice, rows, cols, r + dr, c + dc) - mean;
                    acc += d * d;
                }
            double var = acc / (static_cast<double>(w) * w);
            out[static_cast<std::size_t>(r) * cols + c] = var < 0.0 ? 0.0 : var;
        }
    return out;
}

namespace {

void minmax_normalize(std::vector<double>& m) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : m) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi > lo) {
        for (double& x : m) x = (x - lo) / (hi - lo);
    } else {
        std::fill(m.begin(), m.end(), 0.0);
    }
}

std::vector<double> gauss_kernel(float sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * static_cast<std::size_t>(radius) + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w =
            std::exp(-(static_cast<double>(i) * i) / (2.0 * static_cast<double>(sigma) * sigma));
        k[static_cast<std::size_t>(i + radius)] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

}  // namespace

std::vector<double> tvm(const atmask::Volume3D& v, float alpha, int stride, int window,
                        float sigma, bool process_remainder, bool global_cue_norm) {
    const int D = v.dims[0], H = v.dims[1], W = v.dims[2];
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::vector<double> map(static_cast<std::size_t>(D) * plane, 0.0);
    const double a = static_cast<double>(alpha);

    std::vector<std::vector<double>> grads(static_cast<std::size_t>(D)),
        vars(static_cast<std::size_t>(D));
    std::vector<bool> processed(static_cast<std::size_t>(D), false);
    for (int z0 = 0; z0 < D; z0 += stride) {
        if (!(z0 + stride <= D || process_remainder)) continue;
        const int z1 = std::min(z0 + stride, D);
        for (int z = z0; z < z1; ++z) {
            std::vector<float> slice(v.data.begin() + static_cast<std::ptrdiff_t>(z * plane),
                                     v.data.begin() + static_cast<std::ptrdiff_t>((z + 1) * plane));
            grads[static_cast<std::size_t>(z)] = sobel2d(slice, H, W);
            vars[static_cast<std::size_t>(z)] = variance2d(slice, H, W, window);
            processed[static_cast<std::size_t>(z)] = true;
        }
    }

    if (global_cue_norm) {
        double glo = std::numeric_limits<double>::infinity(), ghi = -glo;
        double vlo = glo, vhi = -glo;
        for (int z = 0; z < D; ++z) {
            if (!processed[static_cast<std::size_t>(z)]) continue;
            for (double x : grads[static_cast<std::size_t>(z)]) {
                glo = std::min(glo, x);
                ghi = std::max(ghi, x);
            }
            for (double x : vars[static_cast<std::size_t>(z)]) {
                vlo = std::min(vlo, x);
                vhi = std::max(vhi, x);
            }
        }
        for (int z = 0; z < D; ++z) {
            if (!processed[static_cast<std::size_t>(z)]) continue;
            auto& g = grads[static_cast<std::size_t>(z)];
            auto& vv = vars[static_cast<std::size_t>(z)];
            for (double& x : g) x = ghi > glo ? (x - glo) / (ghi - glo) : 0.0;
            for (double& x : vv) x = vhi > vlo ? (x - vlo) / (vhi - vlo) : 0.0;
        }
    } else {
        for (int z = 0; z < D; ++z) {
            if (!processed[static_cast<std::size_t>(z)]) continue;
            minmax_normalize(grads[static_cast<std::size_t>(z)]);
            minmax_normalize(vars[static_cast<std::size_t>(z)]);
        }
    }

    for (int z0 = 0; z0 < D; z0 += stride) {
        if (!(z0 + stride <= D || process_remainder)) continue;
        const int z1 = std::min(z0 + stride, D);
        std::vector<double> gmax(plane, 0.0);
        for (int z = z0; z < z1; ++z)
            for (std::size_t i = 0; i < plane; ++i) {
                const double u = a * grads[static_cast<std::size_t>(z)][i] +
                                 (1.0 - a) * vars[static_cast<std::size_t>(z)][i];
                gmax[i] = std::max(gmax[i], u);
            }
        for (int z = z0; z < z1; ++z)
            std::copy(gmax.begin(), gmax.end(), map.begin() + static_cast<std::ptrdiff_t>(z * plane));
    }

    if (sigma > 0.0f) {
        const std::vector<double> k = gauss_kernel(sigma);
        const int radius = static_cast<int>(k.size() / 2);
        const int dims[3] = {D, H, W};
        const std::int64_t strides[3] = {static_cast<std::int64_t>(plane), W, 1};
        for (int axis = 0; axis < 3; ++axis) {
            std::vector<double> next(map.size());
            for (int i0 = 0; i0 < D; ++i0)
                for (int i1 = 0; i1 < H; ++i1)
                    for (int i2 = 0; i2 < W; ++i2) {
                        const int idx3[3] = {i0, i1, i2};
                        const std::int64_t base =
                            i0 * strides[0] + i1 * strides[1] + i2;
                        double acc = 0.0;
                        for (int t = -radius; t <= radius; ++t) {
                            const int q = clampi(idx3[axis] + t, 0, dims[axis] - 1);
                            acc += k[static_cast<std::size_t>(t + radius)] *
                                   map[static_cast<std::size_t>(
                                       base + static_cast<std::int64_t>(q - idx3[axis]) *
                                                  strides[axis])];
                        }
                        next[static_cast<std::size_t>(base)] = acc;
                    }
            map.swap(next);
        }
    }

    double gmax = 0.0;
    for (double x : map) gmax = std::max(gmax, x);
    if (gmax > 0.0)
        for (double& x : map) x /= gmax;
    return map;
}

namespace {

std::vector<std::array<int, 3>> brute_surface(const atmask::Volume3D& v) {
    std::vector<std::array<int, 3>> out;
    auto pos = [&](int i0, int i1, int i2) {
        if (i0 < 0 || i0 >= v.dims[0] || i1 < 0 || i1 >= v.dims[1] || i2 < 0 || i2 >= v.dims[2])
            return false;
        return v.data[v.index(i0, i1, i2)] > 0.5f;
    };
    for (int i0 = 0; i0 < v.dims[0]; ++i0)
        for (int i1 = 0; i1 < v.dims[1]; ++i1)
            for (int i2 = 0; i2 < v.dims[2]; ++i2) {
                if (!pos(i0, i1, i2)) continue;
                if (!pos(i0 - 1, i1, i2) || !pos(i0 + 1, i1, i2) || !pos(i0, i1 - 1, i2) ||
                    !pos(i0, i1 + 1, i2) || !pos(i0, i1, i2 - 1) || !pos(i0, i1, i2 + 1))
                    out.push_back({i0, i1, i2});
            }
    return out;
}

double brute_directed(const std::vector<std::array<int, 3>>& from,
                      const std::vector<std::array<int, 3>>& to,
                      std::array<float, 3> spacing) {
    std::vector<double> ds;
    ds.reserve(from.size());
    for (const auto& p : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to) {
            const double d0 = (p[0] - q[0]) * static_cast<double>(spacing[0]);
            const double d1 = (p[1] - q[1]) * static_cast<double>(spacing[1]);
            const double d2 = (p[2] - q[2]) * static_cast<double>(spacing[2]);
            best = std::min(best, d0 * d0 + d1 * d1 + d2 * d2);
        }
        ds.push_back(std::sqrt(best));
    }
    std::sort(ds.begin(), ds.end());
    const std::size_t n = ds.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    if (k < 1) k = 1;
    if (k > n) k = n;
    return ds[k - 1];
}

}  // namespace

bool hd95_brute(const atmask::Volume3D& pred, const atmask::Volume3D& gt, double& out_mm) {
    const auto sp = brute_surface(pred);
    const auto sg = brute_surface(gt);
    if (sp.empty() || sg.empty()) return false;
    out_mm = std::max(brute_directed(sp, sg, pred.spacing), brute_directed(sg, sp, pred.spacing));
    return true;
}

namespace {

void poke16(std::vector<unsigned char>& b, int off, std::int16_t v) {
    std::memcpy(b.data() + off, &v, 2);
}

void poke32f(std::vector<unsigned char>& b, int off, float v) {
    std::memcpy(b.data() + off, &v, 4);
}

}  // namespace

void write_nifti_reference(const std::string& path, std::array<int, 3> nifti_dims,
                           std::int16_t datatype, std::array<float, 3> pixdims,
                           float scl_slope, float scl_inter, int vox_offset,
                           const std::vector<unsigned char>& payload) {
    std::vector<unsigned char> hdr(static_cast<std::size_t>(vox_offset), 0);
    const std::int32_t three48 = 348;
    std::memcpy(hdr.data(), &three48, 4);               // sizeof_hdr
    poke16(hdr, 40, 3);                                 // dim[0]
    poke16(hdr, 42, static_cast<std::int16_t>(nifti_dims[0]));
    poke16(hdr, 44, static_cast<std::int16_t>(nifti_dims[1]));
    poke16(hdr, 46, static_cast<std::int16_t>(nifti_dims[2]));
    for (int i = 4; i < 8; ++i) poke16(hdr, 40 + 2 * i, 1);
    poke16(hdr, 70, datatype);
    const std::int16_t bitpix = datatype == 16 ? 32 : 16;
    poke16(hdr, 72, bitpix);
    poke32f(hdr, 76, 1.0f);                             // pixdim[0]
    poke32f(hdr, 80, pixdims[0]);
    poke32f(hdr, 84, pixdims[1]);
    poke32f(hdr, 88, pixdims[2]);
    poke32f(hdr, 108, static_cast<float>(vox_offset));  // vox_offset
    poke32f(hdr, 112, scl_slope);
    poke32f(hdr, 116, scl_inter);
    hdr[344] = 'n';
    hdr[345] = '+';
    hdr[346] = '1';
    hdr[347] = 0;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(hdr.data()), static_cast<std::streamsize>(hdr.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error(path + ": write failure");
}

std::vector<double> toy_forward(const ToyParams& p, const atmask::Volume3D& input,
                                const atmask::Volume3D& mask) {
    const int ps = p.patch_size;
    const int g0 = input.dims[0] / ps, g1 = input.dims[1] / ps, g2 = input.dims[2] / ps;
    const std::int64_t P = static_cast<std::int64_t>(ps) * ps * ps;
    const std::int64_t E = p.embed_dim;

    std::vector<double> pred(input.data.size(), 0.0);
    std::vector<double> x(static_cast<std::size_t>(P)), a(static_cast<std::size_t>(E)),
        y(static_cast<std::size_t>(P));
    for (int p0 = 0; p0 < g0; ++p0)
        for (int p1 = 0; p1 < g1; ++p1)
            for (int p2 = 0; p2 < g2; ++p2) {
                const bool masked =
                    mask.data[mask.index(p0 * ps, p1 * ps, p2 * ps)] > 0.5f;
                std::int64_t j = 0;
                for (int i0 = p0 * ps; i0 < (p0 + 1) * ps; ++i0)
                    for (int i1 = p1 * ps; i1 < (p1 + 1) * ps; ++i1)
                        for (int i2 = p2 * ps; i2 < (p2 + 1) * ps; ++i2) {
                            if (masked)
                                x[static_cast<std::size_t>(j)] =
                                    p.use_token ? p.mask_token[static_cast<std::size_t>(j)] : 0.0;
                            else
                                x[static_cast<std::size_t>(j)] =
                                    static_cast<double>(input.data[input.index(i0, i1, i2)]);
                            ++j;
                        }
                for (std::int64_t e = 0; e < E; ++e) {
                    double acc = p.enc_b[static_cast<std::size_t>(e)];
                    for (std::int64_t q = 0; q < P; ++q)
                        acc += p.enc_w[static_cast<std::size_t>(q * E + e)] *
                               x[static_cast<std::size_t>(q)];
                    a[static_cast<std::size_t>(e)] = acc > 0.0 ? acc : 0.0;
                }
                for (std::int64_t q = 0; q < P; ++q) {
                    double acc = p.dec_b[static_cast<std::size_t>(q)];
                    for (std::int64_t e = 0; e < E; ++e)
                        acc += p.dec_w[static_cast<std::size_t>(e * P + q)] *
                               a[static_cast<std::size_t>(e)];
                    y[static_cast<std::size_t>(q)] = acc;
                }
                j = 0;
                for (int i0 = p0 * ps; i0 < (p0 + 1) * ps; ++i0)
                    for (int i1 = p1 * ps; i1 < (p1 + 1) * ps; ++i1)
                        for (int i2 = p2 * ps; i2 < (p2 + 1) * ps; ++i2) {
                            pred[input.index(i0, i1, i2)] = y[static_cast<std::size_t>(j)];
                            ++j;
                        }
            }
    return pred;
}

double toy_loss(const ToyParams& p, const atmask::Volume3D& input,
                const atmask::Volume3D& target, const atmask::Volume3D& mask, double eps) {
    const std::vector<double> pred = toy_forward(p, input, mask);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
        const double m = static_cast<double>(mask.data[i]);
        const double d = pred[i] - static_cast<double>(target.data[i]);
        num += m * d * d;
        den += m;
    }
    return num / (den + eps);
}

std::vector<double> lerp_resample_1d(const std::vector<double>& in, double in_spacing,
                                     double out_spacing) {
    const int n = static_cast<int>(in.size());
    int out_n = static_cast<int>(std::lround(n * in_spacing / out_spacing));
    if (out_n < 1) out_n = 1;
    std::vector<double> out(static_cast<std::size_t>(out_n));
    for (int j = 0; j < out_n; ++j) {
        double pos = (j + 0.5) * out_spacing / in_spacing - 0.5;
        if (pos < 0.0) pos = 0.0;
        if (pos > n - 1.0) pos = n - 1.0;
        const int lo = static_cast<int>(std::floor(pos));
        const int hi = lo + 1 < n ? lo + 1 : n - 1;
        const double t = pos - lo;
        out[static_cast<std::size_t>(j)] = in[static_cast<std::size_t>(lo)] * (1.0 - t) +
                                           in[static_cast<std::size_t>(hi)] * t;
    }
    return out;
}

}  // namespace oracles
