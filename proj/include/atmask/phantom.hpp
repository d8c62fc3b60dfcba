// phantom.hpp
// Deterministic synthetic volumes with known geometry and labels. All
// phantoms are analytic plus seeded noise; nothing is loaded from disk.

#pragma once

#include <array>
#include <cstdint>

#include "atmask/volume.hpp"

namespace atmask {

enum class PhantomKind { sphere_shell, tube, textured_block, constant };

struct PhantomSpec {
    PhantomKind kind = PhantomKind::sphere_shell;
    std::array<int, 3> dims{64, 64, 64};
    std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};
    std::array<float, 3> center{32.0f, 32.0f, 32.0f};  // voxel coordinates
    float radius = 10.0f;                              // voxels
    int axis = 0;                                      // tube direction
    float noise_amplitude = 0.0f;                      // uniform noise half-width
    std::array<int, 3> box_lo{0, 0, 0};                // textured_block bounds
    std::array<int, 3> box_hi{0, 0, 0};                // exclusive
    float inside_value = 400.0f;                       // HU-like structure intensity
    float outside_value = -1000.0f;                    // HU-like background
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument on out-of-bounds geometry
};

struct Phantom {
    Volume3D volume;
    Volume3D label;  // binary: 1 inside the structure
};

/// Build the phantom and its ground-truth label. Same spec, same bits.
/// sphere_shell: inside_value within radius of center, step to outside_value.
/// tube: cylinder of given radius along `axis` through center.
/// textured_block: outside_value everywhere, inside_value plus seeded uniform
/// noise inside [box_lo, box_hi); sphere and tube add their noise volume-wide.
/// constant: outside_value everywhere, empty label.
Phantom make_phantom(const PhantomSpec& spec);

}  // namespace atmask
