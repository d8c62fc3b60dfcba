#include <cmath>
#include <cstring>
#include <stdexcept>

#include "atmask/metrics.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using atmask::SegPair;
using atmask::Volume3D;

namespace {

Volume3D binary_volume(std::array<int, 3> dims, std::array<float, 3> spacing) {
    Volume3D v = atmask::make_volume(dims, spacing, 0.0f);
    return v;
}

/// Random binary pair with nonempty masks and dyadic spacings, so squared
/// distances are exact in double and the brute-force comparison is bit-equal.
SegPair random_pair(std::uint64_t seed, std::array<int, 3> dims) {
    static const float kDyadic[] = {0.25f, 0.5f, 0.75f, 1.0f, 1.25f, 1.5f, 2.0f};
    Volume3D noise = testutil::make_test_volume(dims, seed);
    Volume3D noise2 = testutil::make_test_volume(dims, seed + 100000);
    std::array<float, 3> spacing = {kDyadic[seed % 7], kDyadic[(seed / 7) % 7],
                                    kDyadic[(seed / 49) % 7]};
    SegPair pair;
    pair.prediction = binary_volume(dims, spacing);
    pair.ground_truth = binary_volume(dims, spacing);
    for (std::size_t i = 0; i < noise.data.size(); ++i) {
        pair.prediction.data[i] = noise.data[i] > 0.62f ? 1.0f : 0.0f;
        pair.ground_truth.data[i] = noise2.data[i] > 0.66f ? 1.0f : 0.0f;
    }
    // Guarantee nonempty masks.
    pair.prediction.data[0] = 1.0f;
    pair.ground_truth.data[noise.data.size() - 1] = 1.0f;
    return pair;
}

}  // namespace

TEST_CASE("dsc and iou are 1 for identical nonempty masks") {
    SegPair pair = random_pair(1, {6, 6, 6});
    pair.ground_truth = pair.prediction;
    CHECK(atmask::dsc(pair) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(atmask::iou(pair) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dsc of disjoint 8-voxel masks is eps over 16 plus eps") {
    SegPair pair;
    pair.prediction = binary_volume({4, 4, 4}, {1, 1, 1});
    pair.ground_truth = binary_volume({4, 4, 4}, {1, 1, 1});
    for (int i = 0; i < 8; ++i) pair.prediction.data[static_cast<std::size_t>(i)] = 1.0f;
    for (int i = 8; i < 16; ++i) pair.ground_truth.data[static_cast<std::size_t>(i)] = 1.0f;
    // (2 * 0 + 1e-8) / (8 + 8 + 1e-8) = 6.25e-10 by direct evaluation.
    CHECK(std::abs(atmask::dsc(pair) - 6.25e-10) < 1e-15);
    CHECK(std::abs(atmask::iou(pair) - 6.25e-10) < 1e-15);
}

TEST_CASE("dsc of a half-overlapping pair is one half") {
    SegPair pair;
    pair.prediction = binary_volume({4, 4, 4}, {1, 1, 1});
    pair.ground_truth = binary_volume({4, 4, 4}, {1, 1, 1});
    for (int i = 0; i < 16; ++i) pair.prediction.data[static_cast<std::size_t>(i)] = 1.0f;
    for (int i = 8; i < 24; ++i) pair.ground_truth.data[static_cast<std::size_t>(i)] = 1.0f;
    CHECK(atmask::dsc(pair) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(atmask::iou(pair) == doctest::Approx(8.0 / 24.0).epsilon(1e-9));
}

TEST_CASE("empty-empty pair tends to perfect agreement") {
    SegPair pair;
    pair.prediction = binary_volume({3, 3, 3}, {1, 1, 1});
    pair.ground_truth = binary_volume({3, 3, 3}, {1, 1, 1});
    CHECK(atmask::dsc(pair) == 1.0);
    CHECK(atmask::iou(pair) == 1.0);
    double mm = 0.0;
    CHECK_FALSE(atmask::hd95(pair, mm));
    auto report = atmask::compute_metrics(pair);
    CHECK_FALSE(report.hd95_defined);
}

TEST_CASE("dsc and iou satisfy the exact identity dsc = 2 iou / (1 + iou)") {
    for (std::uint64_t s = 0; s < 100; ++s) {
        SegPair pair = random_pair(s, {5, 6, 7});
        const double d = atmask::dsc(pair);
        const double j = atmask::iou(pair);
        CAPTURE(s);
        CHECK(std::abs(d - 2.0 * j / (1.0 + j)) <= 1e-6);
        CHECK(j <= d + 1e-12);
    }
}

TEST_CASE("hd95 of identical masks is zero") {
    SegPair pair = random_pair(3, {6, 6, 6});
    pair.ground_truth = pair.prediction;
    double mm = -1.0;
    REQUIRE(atmask::hd95(pair, mm));
    CHECK(mm == 0.0);
}

TEST_CASE("hd95 of two voxels three slices apart scales with spacing") {
    SegPair pair;
    pair.prediction = binary_volume({8, 4, 4}, {0.5f, 1.0f, 1.0f});
    pair.ground_truth = binary_volume({8, 4, 4}, {0.5f, 1.0f, 1.0f});
    pair.prediction.at(2, 2, 2) = 1.0f;
    pair.ground_truth.at(5, 2, 2) = 1.0f;
    double mm = 0.0;
    REQUIRE(atmask::hd95(pair, mm));
    CHECK(mm == 1.5);  // 3 voxels * 0.5 mm
}

TEST_CASE("hd95 equals the brute-force oracle bit for bit") {
    for (std::uint64_t s = 0; s < 60; ++s) {
        std::array<int, 3> dims = {4 + static_cast<int>(s % 5), 5 + static_cast<int>(s % 4),
                                   6 + static_cast<int>(s % 3)};
        SegPair pair = random_pair(s + 10, dims);
        double got = 0.0, want = 0.0;
        const bool got_def = atmask::hd95(pair, got);
        const bool want_def = oracles::hd95_brute(pair.prediction, pair.ground_truth, want);
        CAPTURE(s);
        REQUIRE(got_def == want_def);
        if (got_def) CHECK(std::memcmp(&got, &want, sizeof(double)) == 0);
    }
}

TEST_CASE("hd95 is symmetric and translation invariant") {
    SegPair pair = random_pair(77, {6, 6, 6});
    double ab = 0.0, ba = 0.0;
    REQUIRE(atmask::hd95(pair, ab));
    SegPair swapped;
    swapped.prediction = pair.ground_truth;
    swapped.ground_truth = pair.prediction;
    REQUIRE(atmask::hd95(swapped, ba));
    CHECK(ab == ba);

    // Joint translation by (1, 2, 1) inside a larger canvas.
    SegPair moved;
    moved.prediction = binary_volume({9, 10, 9}, {1, 1, 1});
    moved.ground_truth = binary_volume({9, 10, 9}, {1, 1, 1});
    SegPair base;
    base.prediction = binary_volume({9, 10, 9}, {1, 1, 1});
    base.ground_truth = binary_volume({9, 10, 9}, {1, 1, 1});
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
            for (int c = 0; c < 6; ++c) {
                base.prediction.at(a, b, c) = pair.prediction.at(a, b, c);
                base.ground_truth.at(a, b, c) = pair.ground_truth.at(a, b, c);
                moved.prediction.at(a + 1, b + 2, c + 1) = pair.prediction.at(a, b, c);
                moved.ground_truth.at(a + 1, b + 2, c + 1) = pair.ground_truth.at(a, b, c);
            }
    double d0 = 0.0, d1 = 0.0;
    REQUIRE(atmask::hd95(base, d0));
    REQUIRE(atmask::hd95(moved, d1));
    CHECK(d0 == d1);
}

TEST_CASE("hd95 is undefined when either mask is empty") {
    SegPair pair;
    pair.prediction = binary_volume({4, 4, 4}, {1, 1, 1});
    pair.ground_truth = binary_volume({4, 4, 4}, {1, 1, 1});
    pair.ground_truth.data[7] = 1.0f;
    double mm = 0.0;
    CHECK_FALSE(atmask::hd95(pair, mm));
    auto report = atmask::compute_metrics(pair);
    CHECK_FALSE(report.hd95_defined);
    CHECK(report.dsc < 1e-6);
}

TEST_CASE("surface voxels follow the 6-connectivity rule") {
    // A solid 3^3 cube inside a 5^3 canvas: every cube voxel except the
    // center is surface.
    Volume3D v = binary_volume({5, 5, 5}, {1, 1, 1});
    for (int a = 1; a < 4; ++a)
        for (int b = 1; b < 4; ++b)
            for (int c = 1; c < 4; ++c) v.at(a, b, c) = 1.0f;
    auto surf = atmask::surface_voxels(v);
    CHECK(surf.size() == 26);

    // A full canvas is all surface: out of bounds counts as background.
    Volume3D full = atmask::make_volume({2, 2, 2}, {1, 1, 1}, 1.0f);
    CHECK(atmask::surface_voxels(full).size() == 8);
}

TEST_CASE("SegPair::validate rejects mismatched geometry") {
    SegPair pair;
    pair.prediction = binary_volume({4, 4, 4}, {1, 1, 1});
    pair.ground_truth = binary_volume({4, 4, 5}, {1, 1, 1});
    CHECK_THROWS_AS(pair.validate(), std::invalid_argument);

    pair.ground_truth = binary_volume({4, 4, 4}, {1, 1, 2});
    CHECK_THROWS_AS(pair.validate(), std::invalid_argument);

    pair.ground_truth = binary_volume({4, 4, 4}, {1, 1, 1});
    CHECK_NOTHROW(pair.validate());
}
