// volume.hpp
// Dense 3D scalar volume with spacing metadata. Axis 0 is the slice axis
// ("z") throughout the library; data is stored axis-0-major, i.e. the
// linear index is (i0 * d1 + i1) * d2 + i2.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace atmask {

struct Volume3D {
    std::array<int, 3> dims{0, 0, 0};
    std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};  // millimeters per voxel
    std::vector<float> data;

    std::size_t size() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }

    std::size_t index(int i0, int i1, int i2) const {
        return (static_cast<std::size_t>(i0) * dims[1] + static_cast<std::size_t>(i1)) * dims[2] +
               static_cast<std::size_t>(i2);
    }

    float& at(int i0, int i1, int i2) { return data[index(i0, i1, i2)]; }
    float at(int i0, int i1, int i2) const { return data[index(i0, i1, i2)]; }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_dims(const Volume3D& other) const { return dims == other.dims; }
};

/// Allocate a volume of the given shape, filled with `fill`.
Volume3D make_volume(std::array<int, 3> dims, std::array<float, 3> spacing, float fill = 0.0f);

}  // namespace atmask
