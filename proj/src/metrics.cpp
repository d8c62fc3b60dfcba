#include "atmask/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace atmask {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool positive(float v) { return v > 0.5f; }

struct Counts {
    double tp = 0.0, t = 0.0, p = 0.0;
};

Counts overlap_counts(const SegPair& pair) {
    Counts c;
    const std::size_t n = pair.prediction.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        const bool p = positive(pair.prediction.data[i]);
        const bool g = positive(pair.ground_truth.data[i]);
        c.p += p ? 1.0 : 0.0;
        c.t += g ? 1.0 : 0.0;
        c.tp += (p && g) ? 1.0 : 0.0;
    }
    return c;
}

// 1D squared-distance lower envelope at sample positions q * step.
// Infinite parabolas are skipped; all-infinite input stays infinite.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, int n, double step,
            std::vector<int>& v, std::vector<double>& z) {
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[static_cast<std::size_t>(q)] == kInf) continue;
        const double xq = q * step;
        double s = 0.0;
        while (k >= 0) {
            const double xv = v[static_cast<std::size_t>(k)] * step;
            s = ((f[static_cast<std::size_t>(q)] + xq * xq) -
                 (f[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])] + xv * xv)) /
                (2.0 * (xq - xv));
            if (s <= z[static_cast<std::size_t>(k)])
                --k;
            else
                break;
        }
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
        } else {
            ++k;
            v[static_cast<std::size_t>(k)] = q;
            z[static_cast<std::size_t>(k)] = s;
            z[static_cast<std::size_t>(k) + 1] = kInf;
        }
    }
    if (k < 0) {
        std::fill(d.begin(), d.begin() + n, kInf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        const double xq = q * step;
        while (z[static_cast<std::size_t>(j) + 1] < xq) ++j;
        const double xv = v[static_cast<std::size_t>(j)] * step;
        d[static_cast<std::size_t>(q)] =
            (xq - xv) * (xq - xv) + f[static_cast<std::size_t>(v[static_cast<std::size_t>(j)])];
    }
}

// Squared Euclidean distance (mm^2) from every voxel to the nearest feature
// voxel, via three separable passes.
std::vector<double> squared_edt(const std::vector<std::array<int, 3>>& features,
                                std::array<int, 3> dims, std::array<float, 3> spacing) {
    const std::int64_t n =
        static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
    std::vector<double> dist(static_cast<std::size_t>(n), kInf);
    auto idx = [&](int i0, int i1, int i2) {
        return static_cast<std::size_t>((static_cast<std::int64_t>(i0) * dims[1] + i1) * dims[2] +
                                        i2);
    };
    for (const auto& f : features) dist[idx(f[0], f[1], f[2])] = 0.0;

    const int max_dim = std::max({dims[0], dims[1], dims[2]});
    std::vector<double> f(static_cast<std::size_t>(max_dim));
    std::vector<double> d(static_cast<std::size_t>(max_dim));
    std::vector<int> v(static_cast<std::size_t>(max_dim));
    std::vector<double> z(static_cast<std::size_t>(max_dim) + 1);

    // axis 2
    for (int i0 = 0; i0 < dims[0]; ++i0)
        for (int i1 = 0; i1 < dims[1]; ++i1) {
            for (int i2 = 0; i2 < dims[2]; ++i2) f[static_cast<std::size_t>(i2)] = dist[idx(i0, i1, i2)];
            edt_1d(f, d, dims[2], spacing[2], v, z);
            for (int i2 = 0; i2 < dims[2]; ++i2) dist[idx(i0, i1, i2)] = d[static_cast<std::size_t>(i2)];
        }
    // axis 1
    for (int i0 = 0; i0 < dims[0]; ++i0)
        for (int i2 = 0; i2 < dims[2]; ++i2) {
            for (int i1 = 0; i1 < dims[1]; ++i1) f[static_cast<std::size_t>(i1)] = dist[idx(i0, i1, i2)];
            edt_1d(f, d, dims[1], spacing[1], v, z);
            for (int i1 = 0; i1 < dims[1]; ++i1) dist[idx(i0, i1, i2)] = d[static_cast<std::size_t>(i1)];
        }
    // axis 0
    for (int i1 = 0; i1 < dims[1]; ++i1)
        for (int i2 = 0; i2 < dims[2]; ++i2) {
            for (int i0 = 0; i0 < dims[0]; ++i0) f[static_cast<std::size_t>(i0)] = dist[idx(i0, i1, i2)];
            edt_1d(f, d, dims[0], spacing[0], v, z);
            for (int i0 = 0; i0 < dims[0]; ++i0) dist[idx(i0, i1, i2)] = d[static_cast<std::size_t>(i0)];
        }
    return dist;
}

// Nearest-rank 95th percentile of the sorted ascending list.
double percentile95(std::vector<double>& xs) {
    std::sort(xs.begin(), xs.end());
    const std::int64_t n = static_cast<std::int64_t>(xs.size());
    std::int64_t k = static_cast<std::int64_t>(std::ceil(0.95 * static_cast<double>(n)));
    k = std::max<std::int64_t>(1, std::min(k, n));
    return xs[static_cast<std::size_t>(k - 1)];
}

double directed_hd95(const std::vector<std::array<int, 3>>& from,
                     const std::vector<std::array<int, 3>>& to, std::array<int, 3> dims,
                     std::array<float, 3> spacing) {
    const std::vector<double> dist = squared_edt(to, dims, spacing);
    std::vector<double> ds;
    ds.reserve(from.size());
    auto idx = [&](const std::array<int, 3>& p) {
        return static_cast<std::size_t>(
            (static_cast<std::int64_t>(p[0]) * dims[1] + p[1]) * dims[2] + p[2]);
    };
    for (const auto& p : from) ds.push_back(std::sqrt(dist[idx(p)]));
    return percentile95(ds);
}

}  // namespace

void SegPair::validate() const {
    if (!prediction.same_dims(ground_truth))
        throw std::invalid_argument("seg pair: dims mismatch");
    if (prediction.spacing != ground_truth.spacing)
        throw std::invalid_argument("seg pair: spacing mismatch");
}

double dsc(const SegPair& pair, double eps) {
    pair.validate();
    const Counts c = overlap_counts(pair);
    return (2.0 * c.tp + eps) / (c.t + c.p + eps);
}

double iou(const SegPair& pair, double eps) {
    pair.validate();
    const Counts c = overlap_counts(pair);
    return (c.tp + eps) / (c.t + c.p - c.tp + eps);
}

std::vector<std::array<int, 3>> surface_voxels(const Volume3D& v) {
    std::vector<std::array<int, 3>> out;
    auto bg = [&](int i0, int i1, int i2) {
        if (i0 < 0 || i0 >= v.dims[0] || i1 < 0 || i1 >= v.dims[1] || i2 < 0 || i2 >= v.dims[2])
            return true;
        return !positive(v.data[v.index(i0, i1, i2)]);
    };
    for (int i0 = 0; i0 < v.dims[0]; ++i0)
        for (int i1 = 0; i1 < v.dims[1]; ++i1)
            for (int i2 = 0; i2 < v.dims[2]; ++i2) {
                if (!positive(v.data[v.index(i0, i1, i2)])) continue;
                if (bg(i0 - 1, i1, i2) || bg(i0 + 1, i1, i2) || bg(i0, i1 - 1, i2) ||
                    bg(i0, i1 + 1, i2) || bg(i0, i1, i2 - 1) || bg(i0, i1, i2 + 1))
                    out.push_back({i0, i1, i2});
            }
    return out;
}

bool hd95(const SegPair& pair, double& out_mm) {
    pair.validate();
    const auto sp = surface_voxels(pair.prediction);
    const auto sg = surface_voxels(pair.ground_truth);
    if (sp.empty() || sg.empty()) return false;
    const double a = directed_hd95(sp, sg, pair.prediction.dims, pair.prediction.spacing);
    const double b = directed_hd95(sg, sp, pair.prediction.dims, pair.prediction.spacing);
    out_mm = std::max(a, b);
    return true;
}

MetricsReport compute_metrics(const SegPair& pair, double eps) {
    MetricsReport r;
    r.dsc = dsc(pair, eps);
    r.iou = iou(pair, eps);
    r.hd95_defined = hd95(pair, r.hd95);
    if (!r.hd95_defined) r.hd95 = 0.0;
    return r;
}

}  // namespace atmask
