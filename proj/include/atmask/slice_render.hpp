// slice_render.hpp
// 8-bit grayscale PNG rendering of mid-axial slices with the masking
// overlay: volume values windowed into gray levels 1..254, masked patches
// filled with 0, high-variation patch borders drawn at 255.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atmask/mask_gen.hpp"
#include "atmask/volume.hpp"

namespace atmask {

struct GrayImage {
    int width = 0;   // axis 2
    int height = 0;  // axis 1
    std::vector<std::uint8_t> pixels;  // row-major
};

struct RenderOptions {
    float window_lo = 0.0f;  // maps to gray 1
    float window_hi = 1.0f;  // maps to gray 254
};

/// Windowed mid-axial slice (axis-0 index dims[0]/2), no overlay.
GrayImage render_mid_axial(const Volume3D& v, const RenderOptions& opt = {});

/// Mid-axial slice with the overlay palette. The patch mask and scores must
/// match the volume's patch grid for the given patch_size.
GrayImage render_mid_axial_overlay(const Volume3D& v, const PatchMask& pm,
                                   const PatchScores& scores, float tau, int patch_size,
                                   const RenderOptions& opt = {});

/// Minimal PNG encoder: one IDAT chunk, filter 0 scanlines, zlib-compressed.
void write_png_gray8(const GrayImage& img, const std::string& path);

}  // namespace atmask
