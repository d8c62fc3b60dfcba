#include "atmask/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace atmask {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

// Reads header lines up to and including the first blank line. Returns the
// lines without trailing newline.
std::vector<std::string> read_header(std::istream& in, const std::string& path) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) return lines;
        lines.push_back(line);
    }
    fail(path, "truncated header");
}

std::int64_t parse_i64(const std::string& s, const std::string& path) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) fail(path, "bad integer '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        fail(path, "bad integer '" + s + "'");
    } catch (const std::out_of_range&) {
        fail(path, "bad integer '" + s + "'");
    }
}

}  // namespace

void save_patch_mask(const PatchMask& pm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "ATPMASK1\n";
    out << "grid " << pm.grid_dims[0] << " " << pm.grid_dims[1] << " " << pm.grid_dims[2] << "\n";
    out << "m " << pm.m << "\n";
    out << "m_h " << pm.m_h << "\n";
    out << "m_r " << pm.m_r << "\n";
    out << "\n";
    out.write(reinterpret_cast<const char*>(pm.bits.data()),
              static_cast<std::streamsize>(pm.bits.size()));
    if (!out) fail(path, "write failed");
}

PatchMask load_patch_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    const auto lines = read_header(in, path);
    if (lines.empty() || lines[0] != "ATPMASK1") fail(path, "not a patch mask file");

    PatchMask pm;
    bool have_grid = false, have_m = false, have_mh = false, have_mr = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::istringstream ls(lines[i]);
        std::string key;
        ls >> key;
        if (key == "grid") {
            ls >> pm.grid_dims[0] >> pm.grid_dims[1] >> pm.grid_dims[2];
            if (!ls) fail(path, "bad grid line");
            have_grid = true;
        } else if (key == "m") {
            std::string v;
            ls >> v;
            pm.m = parse_i64(v, path);
            have_m = true;
        } else if (key == "m_h") {
            std::string v;
            ls >> v;
            pm.m_h = parse_i64(v, path);
            have_mh = true;
        } else if (key == "m_r") {
            std::string v;
            ls >> v;
            pm.m_r = parse_i64(v, path);
            have_mr = true;
        } else {
            fail(path, "unknown header key '" + key + "'");
        }
    }
    if (!(have_grid && have_m && have_mh && have_mr)) fail(path, "incomplete header");
    if (pm.grid_dims[0] <= 0 || pm.grid_dims[1] <= 0 || pm.grid_dims[2] <= 0)
        fail(path, "bad grid dims");

    const std::int64_t n =
        static_cast<std::int64_t>(pm.grid_dims[0]) * pm.grid_dims[1] * pm.grid_dims[2];
    pm.bits.resize(static_cast<std::size_t>(n));
    in.read(reinterpret_cast<char*>(pm.bits.data()), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) fail(path, "truncated payload");
    std::int64_t pop = 0;
    for (std::uint8_t b : pm.bits) {
        if (b > 1) fail(path, "payload byte not 0/1");
        pop += b;
    }
    if (pop != pm.m || pm.m != pm.m_h + pm.m_r) fail(path, "mask counts inconsistent");
    return pm;
}

void save_model(const ToyMaeModel& model, const std::string& path) {
    model.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "ATWEIGHTS1\n";
    out << "patch_size " << model.patch_size << "\n";
    out << "embed_dim " << model.embed_dim << "\n";
    out << "masked_input "
        << (model.masked_input == MaskedInput::mask_token ? "token" : "zeros") << "\n";
    out << "\n";
    auto put = [&](const std::vector<float>& w) {
        out.write(reinterpret_cast<const char*>(w.data()),
                  static_cast<std::streamsize>(w.size() * sizeof(float)));
    };
    put(model.enc_w);
    put(model.enc_b);
    put(model.dec_w);
    put(model.dec_b);
    put(model.mask_token);
    if (!out) fail(path, "write failed");
}

ToyMaeModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    const auto lines = read_header(in, path);
    if (lines.empty() || lines[0] != "ATWEIGHTS1") fail(path, "not a weights file");

    ToyMaeModel m;
    m.embed_dim = 0;
    m.patch_size = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::istringstream ls(lines[i]);
        std::string key, val;
        ls >> key >> val;
        if (!ls && key != "masked_input") fail(path, "bad header line '" + lines[i] + "'");
        if (key == "patch_size") {
            m.patch_size = static_cast<int>(parse_i64(val, path));
        } else if (key == "embed_dim") {
            m.embed_dim = static_cast<int>(parse_i64(val, path));
        } else if (key == "masked_input") {
            if (val == "token")
                m.masked_input = MaskedInput::mask_token;
            else if (val == "zeros")
                m.masked_input = MaskedInput::zeros;
            else
                fail(path, "bad masked_input '" + val + "'");
        } else {
            fail(path, "unknown header key '" + key + "'");
        }
    }
    if (m.patch_size <= 0 || m.embed_dim <= 0) fail(path, "incomplete header");

    const std::size_t P = static_cast<std::size_t>(m.patch_voxels());
    const std::size_t E = static_cast<std::size_t>(m.embed_dim);
    auto get = [&](std::vector<float>& w, std::size_t n) {
        w.resize(n);
        in.read(reinterpret_cast<char*>(w.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(n * sizeof(float)))
            fail(path, "truncated payload");
    };
    get(m.enc_w, P * E);
    get(m.enc_b, E);
    get(m.dec_w, E * P);
    get(m.dec_b, P);
    get(m.mask_token, P);
    char extra = 0;
    if (in.read(&extra, 1) && in.gcount() == 1) fail(path, "trailing bytes");
    m.validate();
    return m;
}

}  // namespace atmask
