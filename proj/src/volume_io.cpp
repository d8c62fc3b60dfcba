#include "atmask/volume_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "atmask/parallel.hpp"

static_assert(std::endian::native == std::endian::little,
              "volume_io assumes a little-endian host");

namespace atmask {

Volume3D make_volume(std::array<int, 3> dims, std::array<float, 3> spacing, float fill) {
    Volume3D v;
    v.dims = dims;
    v.spacing = spacing;
    v.data.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], fill);
    return v;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string format_float(float x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(x));
    return buf;
}

// ---------------------------------------------------------------------------
// raw format: float32/int16/uint16 payload + "<path>.hdr" sidecar
// ---------------------------------------------------------------------------

struct RawHeader {
    std::array<int, 3> dims{};
    std::array<float, 3> spacing{};
    std::string dtype;
};

RawHeader parse_raw_header(const std::string& hdr_path) {
    std::ifstream in(hdr_path);
    if (!in) fail(hdr_path, "cannot open sidecar header");
    RawHeader h;
    bool have_dims = false, have_dtype = false, have_spacing = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) fail(hdr_path, "malformed header line: \"" + line + "\"");
        std::string key = line.substr(0, colon);
        std::istringstream rest(line.substr(colon + 1));
        if (key == "dims") {
            if (!(rest >> h.dims[0] >> h.dims[1] >> h.dims[2]))
                fail(hdr_path, "malformed header field: dims");
            have_dims = true;
        } else if (key == "dtype") {
            rest >> h.dtype;
            have_dtype = true;
        } else if (key == "spacing") {
            if (!(rest >> h.spacing[0] >> h.spacing[1] >> h.spacing[2]))
                fail(hdr_path, "malformed header field: spacing");
            have_spacing = true;
        } else {
            fail(hdr_path, "unknown header key: " + key);
        }
    }
    if (!have_dims) fail(hdr_path, "missing header field: dims");
    if (!have_dtype) fail(hdr_path, "missing header field: dtype");
    if (!have_spacing) fail(hdr_path, "missing header field: spacing");
    for (int i = 0; i < 3; ++i) {
        if (h.dims[i] <= 0) fail(hdr_path, "non-positive dims entry");
        if (!(h.spacing[i] > 0.0f)) fail(hdr_path, "non-positive spacing entry");
    }
    return h;
}

std::vector<char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");
    in.seekg(0, std::ios::end);
    auto n = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<char> buf(n);
    if (n > 0) in.read(buf.data(), static_cast<std::streamsize>(n));
    if (!in) fail(path, "read failure");
    return buf;
}

std::size_t dtype_size(const std::string& path, const std::string& dtype) {
    if (dtype == "float32") return 4;
    if (dtype == "int16" || dtype == "uint16") return 2;
    fail(path, "unsupported dtype: " + dtype);
}

void widen_payload(const std::string& path, const std::string& dtype, const char* bytes,
                   std::size_t count, std::vector<float>& out) {
    out.resize(count);
    if (dtype == "float32") {
        std::memcpy(out.data(), bytes, count * 4);
    } else if (dtype == "int16") {
        for (std::size_t i = 0; i < count; ++i) {
            std::int16_t s;
            std::memcpy(&s, bytes + 2 * i, 2);
            out[i] = static_cast<float>(s);
        }
    } else if (dtype == "uint16") {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint16_t s;
            std::memcpy(&s, bytes + 2 * i, 2);
            out[i] = static_cast<float>(s);
        }
    } else {
        fail(path, "unsupported dtype: " + dtype);
    }
}

Volume3D load_raw(const std::string& path) {
    RawHeader h = parse_raw_header(path + ".hdr");
    std::vector<char> payload = read_all(path);
    const std::size_t count =
        static_cast<std::size_t>(h.dims[0]) * h.dims[1] * h.dims[2];
    if (payload.size() != count * dtype_size(path, h.dtype))
        fail(path, "dims/byte-count mismatch (dims say " + std::to_string(count) +
                       " voxels, payload holds " +
                       std::to_string(payload.size() / dtype_size(path, h.dtype)) + ")");
    Volume3D v;
    v.dims = h.dims;
    v.spacing = h.spacing;
    widen_payload(path, h.dtype, payload.data(), count, v.data);
    return v;
}

void save_raw(const Volume3D& v, const std::string& path) {
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) fail(path, "cannot open file for writing");
        out.write(reinterpret_cast<const char*>(v.data.data()),
                  static_cast<std::streamsize>(v.data.size() * 4));
        if (!out) fail(path, "write failure");
    }
    std::ofstream hdr(path + ".hdr", std::ios::trunc);
    if (!hdr) fail(path + ".hdr", "cannot open sidecar header for writing");
    hdr << "dims: " << v.dims[0] << ' ' << v.dims[1] << ' ' << v.dims[2] << '\n'
        << "dtype: float32\n"
        << "spacing: " << format_float(v.spacing[0]) << ' ' << format_float(v.spacing[1]) << ' '
        << format_float(v.spacing[2]) << '\n';
    if (!hdr) fail(path + ".hdr", "write failure");
}

// ---------------------------------------------------------------------------
// NIfTI-1 subset. Field offsets per the 348-byte nifti_1_header layout.
// Volume axis 0 maps to the NIfTI slowest-varying spatial axis (dim[3]).
// ---------------------------------------------------------------------------

constexpr int kNiftiHeaderSize = 348;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtUint16 = 512;

#pragma pack(push, 1)
struct NiftiHeader {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(NiftiHeader) == kNiftiHeaderSize);

Volume3D load_nifti(const std::string& path) {
    std::vector<char> bytes = read_all(path);
    if (bytes.size() < kNiftiHeaderSize) fail(path, "file shorter than NIfTI-1 header");
    NiftiHeader h;
    std::memcpy(&h, bytes.data(), kNiftiHeaderSize);

    if (h.sizeof_hdr != kNiftiHeaderSize) {
        if (h.sizeof_hdr == 1543569408)  // 348 byte-swapped
            fail(path, "big-endian NIfTI not supported");
        fail(path, "malformed header: sizeof_hdr = " + std::to_string(h.sizeof_hdr));
    }
    if (std::strncmp(h.magic, "n+1", 4) != 0)
        fail(path, "not a single-file NIfTI-1 (magic != \"n+1\")");
    if (h.dim[0] < 3 || h.dim[0] > 7)
        fail(path, "malformed header: dim[0] = " + std::to_string(h.dim[0]));
    for (int i = 4; i <= h.dim[0]; ++i)
        if (h.dim[i] > 1) fail(path, "only 3D scalar volumes supported (dim[" +
                                         std::to_string(i) + "] = " + std::to_string(h.dim[i]) + ")");
    for (int i = 1; i <= 3; ++i)
        if (h.dim[i] <= 0) fail(path, "malformed header: dim[" + std::to_string(i) + "] <= 0");

    std::string dtype;
    switch (h.datatype) {
        case kDtInt16: dtype = "int16"; break;
        case kDtUint16: dtype = "uint16"; break;
        case kDtFloat32: dtype = "float32"; break;
        default: fail(path, "unsupported dtype: NIfTI datatype code " + std::to_string(h.datatype));
    }

    auto offset = static_cast<std::size_t>(h.vox_offset);
    if (h.vox_offset < kNiftiHeaderSize || static_cast<float>(offset) != h.vox_offset)
        fail(path, "malformed header: vox_offset = " + std::to_string(h.vox_offset));
    if (offset > bytes.size()) fail(path, "vox_offset past end of file");

    Volume3D v;
    // NIfTI stores dim[1] fastest; our axis 0 is slowest, so reverse.
    v.dims = {h.dim[3], h.dim[2], h.dim[1]};
    v.spacing = {h.pixdim[3], h.pixdim[2], h.pixdim[1]};
    for (int i = 0; i < 3; ++i)
        if (!(v.spacing[i] > 0.0f)) fail(path, "non-positive pixdim entry");

    const std::size_t count = v.size();
    const std::size_t elem = (h.datatype == kDtFloat32) ? 4 : 2;
    if (bytes.size() - offset != count * elem)
        fail(path, "dims/byte-count mismatch (dims say " + std::to_string(count) +
                       " voxels, payload holds " + std::to_string((bytes.size() - offset) / elem) + ")");
    widen_payload(path, dtype, bytes.data() + offset, count, v.data);

    if (h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f)) {
        for (float& x : v.data) x = x * h.scl_slope + h.scl_inter;
    }
    return v;
}

void save_nifti(const Volume3D& v, const std::string& path) {
    NiftiHeader h;
    std::memset(&h, 0, sizeof(h));
    h.sizeof_hdr = kNiftiHeaderSize;
    h.dim[0] = 3;
    h.dim[1] = static_cast<std::int16_t>(v.dims[2]);
    h.dim[2] = static_cast<std::int16_t>(v.dims[1]);
    h.dim[3] = static_cast<std::int16_t>(v.dims[0]);
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    for (int i = 0; i < 3; ++i) {
        if (v.dims[i] > 32767) fail(path, "dims exceed NIfTI-1 int16 range");
    }
    h.datatype = kDtFloat32;
    h.bitpix = 32;
    h.pixdim[0] = 1.0f;
    h.pixdim[1] = v.spacing[2];
    h.pixdim[2] = v.spacing[1];
    h.pixdim[3] = v.spacing[0];
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    std::memcpy(h.magic, "n+1", 4);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(path, "cannot open file for writing");
    out.write(reinterpret_cast<const char*>(&h), kNiftiHeaderSize);
    const char pad[4] = {0, 0, 0, 0};  // header extension flag, all off
    out.write(pad, 4);
    out.write(reinterpret_cast<const char*>(v.data.data()),
              static_cast<std::streamsize>(v.data.size() * 4));
    if (!out) fail(path, "write failure");
}

}  // namespace

Volume3D load_volume(const std::string& path) {
    Volume3D v = ends_with(path, ".nii") ? load_nifti(path) : load_raw(path);
    return v;
}

void save_volume(const Volume3D& v, const std::string& path) {
    if (v.dims[0] <= 0 || v.dims[1] <= 0 || v.dims[2] <= 0)
        fail(path, "empty volume");
    if (v.data.size() != v.size()) fail(path, "data length does not match dims");
    if (!v.all_finite()) fail(path, "non-finite voxel");
    if (ends_with(path, ".nii"))
        save_nifti(v, path);
    else
        save_raw(v, path);
}

Volume3D preprocess(const Volume3D& v, const PreprocessConfig& cfg,
                    std::vector<std::string>* warnings) {
    if (!(cfg.hu_lo < cfg.hu_hi)) throw std::invalid_argument("preprocess: hu window lo >= hi");
    if (!v.all_finite()) throw std::invalid_argument("preprocess: input has non-finite voxels");

    Volume3D out = v;
    for (float& x : out.data) x = std::clamp(x, cfg.hu_lo, cfg.hu_hi);

    if (cfg.normalization == Normalization::unit_range) {
        // Division keeps clipped endpoints exactly at 0 and 1.
        const float range = cfg.hu_hi - cfg.hu_lo;
        for (float& x : out.data) x = (x - cfg.hu_lo) / range;
    } else {
        double sum = 0.0;
        for (float x : out.data) sum += x;
        const double mean = sum / static_cast<double>(out.data.size());
        double sq = 0.0;
        for (float x : out.data) {
            const double d = x - mean;
            sq += d * d;
        }
        const double sigma = std::sqrt(sq / static_cast<double>(out.data.size()));
        if (sigma < 1e-8) {
            std::fill(out.data.begin(), out.data.end(), 0.0f);
            if (warnings)
                warnings->push_back("preprocess: constant volume under zero_mean_unit_var, output all zero");
        } else {
            const float m = static_cast<float>(mean);
            const float inv = static_cast<float>(1.0 / sigma);
            for (float& x : out.data) x = (x - m) * inv;
        }
    }
    return out;
}

Volume3D resample_isotropic(const Volume3D& v, float target_spacing) {
    if (!(target_spacing > 0.0f))
        throw std::invalid_argument("resample_isotropic: target_spacing must be > 0");
    for (int i = 0; i < 3; ++i)
        if (!(v.spacing[i] > 0.0f))
            throw std::invalid_argument("resample_isotropic: input spacing must be > 0");

    std::array<int, 3> odims;
    for (int i = 0; i < 3; ++i) {
        odims[i] = std::max(
            1, static_cast<int>(std::lround(static_cast<double>(v.dims[i]) * v.spacing[i] / target_spacing)));
    }
    Volume3D out = make_volume(odims, {target_spacing, target_spacing, target_spacing});

    // Precompute per-axis source coordinates: voxel-center alignment, clamped.
    std::array<std::vector<double>, 3> coord;
    for (int a = 0; a < 3; ++a) {
        coord[a].resize(odims[a]);
        for (int j = 0; j < odims[a]; ++j) {
            double p = (j + 0.5) * static_cast<double>(target_spacing) / v.spacing[a] - 0.5;
            coord[a][j] = std::clamp(p, 0.0, static_cast<double>(v.dims[a] - 1));
        }
    }

    parallel_for(odims[0], [&](std::int64_t j0) {
        const double p0 = coord[0][j0];
        const int i0 = std::min(static_cast<int>(p0), v.dims[0] - 1);
        const int i0n = std::min(i0 + 1, v.dims[0] - 1);
        const double f0 = p0 - i0;
        for (int j1 = 0; j1 < odims[1]; ++j1) {
            const double p1 = coord[1][j1];
            const int i1 = std::min(static_cast<int>(p1), v.dims[1] - 1);
            const int i1n = std::min(i1 + 1, v.dims[1] - 1);
            const double f1 = p1 - i1;
            for (int j2 = 0; j2 < odims[2]; ++j2) {
                const double p2 = coord[2][j2];
                const int i2 = std::min(static_cast<int>(p2), v.dims[2] - 1);
                const int i2n = std::min(i2 + 1, v.dims[2] - 1);
                const double f2 = p2 - i2;

                const double c00 = v.at(i0, i1, i2) * (1 - f2) + v.at(i0, i1, i2n) * f2;
                const double c01 = v.at(i0, i1n, i2) * (1 - f2) + v.at(i0, i1n, i2n) * f2;
                const double c10 = v.at(i0n, i1, i2) * (1 - f2) + v.at(i0n, i1, i2n) * f2;
                const double c11 = v.at(i0n, i1n, i2) * (1 - f2) + v.at(i0n, i1n, i2n) * f2;
                const double c0 = c00 * (1 - f1) + c01 * f1;
                const double c1 = c10 * (1 - f1) + c11 * f1;
                out.at(static_cast<int>(j0), j1, j2) = static_cast<float>(c0 * (1 - f0) + c1 * f0);
            }
        }
    });
    return out;
}

}  // namespace atmask
