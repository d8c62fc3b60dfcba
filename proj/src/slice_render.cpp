#include "atmask/slice_render.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace atmask {

namespace {

std::uint8_t window_gray(float v, const RenderOptions& opt) {
    const float range = opt.window_hi - opt.window_lo;
    float t = range > 0.0f ? (v - opt.window_lo) / range : 0.0f;
    t = t < 0.0f ? 0.0f : (t > 1.0f ? 1.0f : t);
    return static_cast<std::uint8_t>(1 + std::lround(t * 253.0f));
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::vector<std::uint8_t>& payload) {
    put_be32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
    put_be32(out, crc);
}

}  // namespace

GrayImage render_mid_axial(const Volume3D& v, const RenderOptions& opt) {
    if (v.dims[0] <= 0 || v.dims[1] <= 0 || v.dims[2] <= 0)
        throw std::invalid_argument("render: empty volume");
    GrayImage img;
    img.height = v.dims[1];
    img.width = v.dims[2];
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    const int i0 = v.dims[0] / 2;
    for (int i1 = 0; i1 < v.dims[1]; ++i1)
        for (int i2 = 0; i2 < v.dims[2]; ++i2)
            img.pixels[static_cast<std::size_t>(i1) * img.width + i2] =
                window_gray(v.data[v.index(i0, i1, i2)], opt);
    return img;
}

GrayImage render_mid_axial_overlay(const Volume3D& v, const PatchMask& pm,
                                   const PatchScores& scores, float tau, int patch_size,
                                   const RenderOptions& opt) {
    if (patch_size <= 0) throw std::invalid_argument("render: patch_size must be positive");
    if (pm.grid_dims != scores.grid_dims)
        throw std::invalid_argument("render: mask/scores grid mismatch");
    for (int a = 0; a < 3; ++a)
        if (v.dims[a] != pm.grid_dims[a] * patch_size)
            throw std::invalid_argument("render: volume dims do not match patch grid");

    GrayImage img = render_mid_axial(v, opt);
    const int p0 = (v.dims[0] / 2) / patch_size;
    const int g1 = pm.grid_dims[1], g2 = pm.grid_dims[2];

    auto patch_at = [&](int i1, int i2) {
        return static_cast<std::size_t>((p0 * g1 + i1 / patch_size) * g2 + i2 / patch_size);
    };
    // Fill masked patches first so outlines stay visible on top of them.
    for (int i1 = 0; i1 < v.dims[1]; ++i1)
        for (int i2 = 0; i2 < v.dims[2]; ++i2)
            if (pm.bits[patch_at(i1, i2)])
                img.pixels[static_cast<std::size_t>(i1) * img.width + i2] = 0;
    for (int i1 = 0; i1 < v.dims[1]; ++i1)
        for (int i2 = 0; i2 < v.dims[2]; ++i2) {
            if (scores.scores[patch_at(i1, i2)] <= tau) continue;
            const bool border = i1 % patch_size == 0 || i1 % patch_size == patch_size - 1 ||
                                i2 % patch_size == 0 || i2 % patch_size == patch_size - 1;
            if (border) img.pixels[static_cast<std::size_t>(i1) * img.width + i2] = 255;
        }
    return img;
}

void write_png_gray8(const GrayImage& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0 ||
        img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
        throw std::invalid_argument("png: bad image");

    // Scanlines, each prefixed with filter byte 0.
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(img.height) * (img.width + 1));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = img.pixels.data() + static_cast<std::size_t>(y) * img.width;
        raw.insert(raw.end(), row, row + img.width);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error(path + ": deflate failed");
    compressed.resize(bound);

    std::vector<std::uint8_t> out;
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    out.insert(out.end(), sig, sig + 8);
    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(img.width));
    put_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);  // deflate
    ihdr.push_back(0);  // adaptive filtering
    ihdr.push_back(0);  // no interlace
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", compressed);
    put_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

}  // namespace atmask
