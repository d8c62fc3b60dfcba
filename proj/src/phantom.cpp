#include "atmask/phantom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "atmask/rng.hpp"

namespace atmask {

void PhantomSpec::validate() const {
    for (int a = 0; a < 3; ++a)
        if (dims[a] <= 0)
            throw std::invalid_argument("phantom: dims must be positive");
    if (!(radius >= 0.0f) || !std::isfinite(radius))
        throw std::invalid_argument("phantom: radius must be finite and non-negative");
    if (!(noise_amplitude >= 0.0f) || !std::isfinite(noise_amplitude))
        throw std::invalid_argument("phantom: noise_amplitude must be finite and non-negative");

    auto axis_in_bounds = [&](int a) {
        return center[a] - radius >= 0.0f &&
               center[a] + radius <= static_cast<float>(dims[a]) - 1.0f;
    };
    switch (kind) {
        case PhantomKind::sphere_shell:
            for (int a = 0; a < 3; ++a)
                if (!axis_in_bounds(a))
                    throw std::invalid_argument("phantom: sphere out of bounds on axis " +
                                                std::to_string(a));
            break;
        case PhantomKind::tube:
            if (axis < 0 || axis > 2)
                throw std::invalid_argument("phantom: tube axis must be 0, 1 or 2");
            for (int a = 0; a < 3; ++a)
                if (a != axis && !axis_in_bounds(a))
                    throw std::invalid_argument("phantom: tube out of bounds on axis " +
                                                std::to_string(a));
            break;
        case PhantomKind::textured_block:
            for (int a = 0; a < 3; ++a)
                if (box_lo[a] < 0 || box_hi[a] > dims[a] || box_lo[a] >= box_hi[a])
                    throw std::invalid_argument("phantom: box out of bounds on axis " +
                                                std::to_string(a));
            break;
        case PhantomKind::constant:
            break;
    }
}

Phantom make_phantom(const PhantomSpec& spec) {
    spec.validate();
    Phantom ph;
    ph.volume = make_volume(spec.dims, spec.spacing, spec.outside_value);
    ph.label = make_volume(spec.dims, spec.spacing, 0.0f);

    // Membership tests run in double so boundary voxels classify identically
    // to a direct-enumeration count.
    const double r2 = static_cast<double>(spec.radius) * static_cast<double>(spec.radius);
    const double c0 = spec.center[0], c1 = spec.center[1], c2 = spec.center[2];

    switch (spec.kind) {
        case PhantomKind::sphere_shell: {
            for (int i0 = 0; i0 < spec.dims[0]; ++i0)
                for (int i1 = 0; i1 < spec.dims[1]; ++i1)
                    for (int i2 = 0; i2 < spec.dims[2]; ++i2) {
                        const double d0 = i0 - c0, d1 = i1 - c1, d2 = i2 - c2;
                        if (d0 * d0 + d1 * d1 + d2 * d2 <= r2) {
                            const std::size_t idx = ph.volume.index(i0, i1, i2);
                            ph.volume.data[idx] = spec.inside_value;
                            ph.label.data[idx] = 1.0f;
                        }
                    }
            break;
        }
        case PhantomKind::tube: {
            const int a = spec.axis;
            const int b = (a + 1) % 3, c = (a + 2) % 3;
            std::array<int, 3> idx{};
            for (int i0 = 0; i0 < spec.dims[0]; ++i0)
                for (int i1 = 0; i1 < spec.dims[1]; ++i1)
                    for (int i2 = 0; i2 < spec.dims[2]; ++i2) {
                        idx = {i0, i1, i2};
                        const double db = idx[b] - static_cast<double>(spec.center[b]);
                        const double dc = idx[c] - static_cast<double>(spec.center[c]);
                        if (db * db + dc * dc <= r2) {
                            const std::size_t k = ph.volume.index(i0, i1, i2);
                            ph.volume.data[k] = spec.inside_value;
                            ph.label.data[k] = 1.0f;
                        }
                    }
            break;
        }
        case PhantomKind::textured_block: {
            SplitMix64 rng(spec.seed);
            for (int i0 = spec.box_lo[0]; i0 < spec.box_hi[0]; ++i0)
                for (int i1 = spec.box_lo[1]; i1 < spec.box_hi[1]; ++i1)
                    for (int i2 = spec.box_lo[2]; i2 < spec.box_hi[2]; ++i2) {
                        const std::size_t k = ph.volume.index(i0, i1, i2);
                        float v = spec.inside_value;
                        if (spec.noise_amplitude > 0.0f)
                            v += static_cast<float>(
                                rng.uniform(-spec.noise_amplitude, spec.noise_amplitude));
                        ph.volume.data[k] = v;
                        ph.label.data[k] = 1.0f;
                    }
            return ph;  // noise already applied in-box only
        }
        case PhantomKind::constant:
            return ph;
    }

    if (spec.noise_amplitude > 0.0f) {
        SplitMix64 rng(spec.seed);
        for (float& v : ph.volume.data)
            v += static_cast<float>(rng.uniform(-spec.noise_amplitude, spec.noise_amplitude));
    }
    return ph;
}

}  // namespace atmask
