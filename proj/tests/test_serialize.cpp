#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "atmask/mask_gen.hpp"
#include "atmask/recon_toy.hpp"
#include "atmask/serialize.hpp"
#include "doctest.h"
#include "test_util.hpp"

using atmask::MaskConfig;
using atmask::PatchMask;
using atmask::ToyMaeModel;

namespace {

PatchMask sample_mask() {
    atmask::PatchScores ps;
    ps.grid_dims = {3, 4, 5};
    ps.scores.assign(60, 0.1f);
    for (int i = 0; i < 20; ++i) ps.scores[static_cast<std::size_t>(i * 3)] = 0.9f;
    MaskConfig cfg;
    cfg.mask_ratio_r = 0.6f;
    cfg.seed = 4;
    return atmask::generate_mask(ps, cfg);
}

}  // namespace

TEST_CASE("patch mask round trip preserves bits and counters") {
    auto dir = testutil::make_temp_dir("ser");
    PatchMask pm = sample_mask();
    const std::string path = (dir / "mask.atp").string();
    atmask::save_patch_mask(pm, path);

    PatchMask back = atmask::load_patch_mask(path);
    CHECK(back.grid_dims == pm.grid_dims);
    CHECK(back.bits == pm.bits);
    CHECK(back.m == pm.m);
    CHECK(back.m_h == pm.m_h);
    CHECK(back.m_r == pm.m_r);

    // The header is greppable text.
    std::ifstream in(path, std::ios::binary);
    std::string magic;
    std::getline(in, magic);
    CHECK(magic == "ATPMASK1");
}

TEST_CASE("patch mask loader rejects corrupted files") {
    auto dir = testutil::make_temp_dir("ser");
    PatchMask pm = sample_mask();
    const std::string good = (dir / "good.atp").string();
    atmask::save_patch_mask(pm, good);

    SUBCASE("bad magic") {
        const std::string path = (dir / "magic.atp").string();
        auto bytes = testutil::read_file_bytes(good);
        bytes[0] = 'X';
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size()));
        CHECK_THROWS_AS(atmask::load_patch_mask(path), std::runtime_error);
    }

    SUBCASE("truncated payload") {
        const std::string path = (dir / "trunc.atp").string();
        std::filesystem::copy_file(good, path);
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
        CHECK_THROWS_AS(atmask::load_patch_mask(path), std::runtime_error);
    }

    SUBCASE("byte values beyond 1") {
        const std::string path = (dir / "byte.atp").string();
        auto bytes = testutil::read_file_bytes(good);
        bytes[bytes.size() - 1] = 7;
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size()));
        CHECK_THROWS_AS(atmask::load_patch_mask(path), std::runtime_error);
    }

    SUBCASE("count mismatch") {
        PatchMask lie = pm;
        lie.m += 1;
        lie.m_r += 1;
        const std::string path = (dir / "lie.atp").string();
        atmask::save_patch_mask(lie, path);
        CHECK_THROWS_AS(atmask::load_patch_mask(path), std::runtime_error);
    }
}

TEST_CASE("model round trip is bit exact") {
    auto dir = testutil::make_temp_dir("ser");
    ToyMaeModel m = atmask::init_toy_model(4, 8, 123, atmask::MaskedInput::zeros);
    const std::string path = (dir / "model.atw").string();
    atmask::save_model(m, path);

    ToyMaeModel back = atmask::load_model(path);
    CHECK(back.patch_size == 4);
    CHECK(back.embed_dim == 8);
    CHECK(back.masked_input == atmask::MaskedInput::zeros);
    REQUIRE(back.enc_w.size() == m.enc_w.size());
    for (std::size_t i = 0; i < m.enc_w.size(); ++i)
        CHECK(std::memcmp(&back.enc_w[i], &m.enc_w[i], 4) == 0);
    CHECK(back.enc_b == m.enc_b);
    CHECK(back.dec_w == m.dec_w);
    CHECK(back.dec_b == m.dec_b);
    CHECK(back.mask_token == m.mask_token);

    std::ifstream in(path, std::ios::binary);
    std::string magic;
    std::getline(in, magic);
    CHECK(magic == "ATWEIGHTS1");
}

TEST_CASE("model loader rejects trailing bytes") {
    auto dir = testutil::make_temp_dir("ser");
    ToyMaeModel m = atmask::init_toy_model(2, 4, 9);
    const std::string path = (dir / "extra.atw").string();
    atmask::save_model(m, path);
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out.write("zz", 2);
    }
    CHECK_THROWS_AS(atmask::load_model(path), std::runtime_error);
}

TEST_CASE("model loader rejects a truncated section") {
    auto dir = testutil::make_temp_dir("ser");
    ToyMaeModel m = atmask::init_toy_model(2, 4, 10);
    const std::string path = (dir / "short.atw").string();
    atmask::save_model(m, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
    CHECK_THROWS_AS(atmask::load_model(path), std::runtime_error);
}
