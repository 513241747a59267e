#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "clit/coords.hpp"

using namespace clit;

TEST_CASE("hr_lattice centers and cells") {
    auto q2 = hr_lattice(2, 2);
    CHECK(q2.coords[0] == doctest::Approx(-0.5));
    CHECK(q2.coords[2 * 2] == doctest::Approx(0.5));  // second row, y
    CHECK(q2.cell.h == doctest::Approx(1.0));

    auto q4 = hr_lattice(4, 1);
    const double expect[4] = {-0.75, -0.25, 0.25, 0.75};
    for (int i = 0; i < 4; ++i) CHECK(q4.coords[2 * i] == doctest::Approx(expect[i]));

    // lattice of the LR size reproduces LR centers exactly
    auto q = hr_lattice(7, 5);
    for (int64_t y = 0; y < 7; ++y)
        for (int64_t x = 0; x < 5; ++x) {
            CHECK(q.coords[2 * (y * 5 + x)] == axis_center(y, 7));
            CHECK(q.coords[2 * (y * 5 + x) + 1] == axis_center(x, 5));
        }
    CHECK(q.size() == 35);
}

TEST_CASE("nearest_index rounds and breaks ties toward the smaller index") {
    // centers of n=4: -0.75 -0.25 0.25 0.75
    CHECK(nearest_index(0.1, 4) == 2);
    CHECK(nearest_index(-0.99, 4) == 0);
    CHECK(nearest_index(0.99, 4) == 3);
    CHECK(nearest_index(-2.0, 4) == 0);  // clamped
    CHECK(nearest_index(2.0, 4) == 3);
    // exact midpoint between centers 1 and 2 is 0.0 -> smaller index wins
    CHECK(nearest_index(0.0, 4) == 1);
}

TEST_CASE("local grid on the worked 4x4 example") {
    std::vector<double> q{0.1, 0.1};
    auto grid = make_local_grid(q, 4, 4, 3, 3);
    // center element of the 3x3 grid
    const int64_t center_at = (0 * 3 + 1) * 3 + 1;
    CHECK(grid.indices[center_at] == 2 * 4 + 2);
    CHECK(grid.delta[2 * center_at] == doctest::Approx(-0.15));
    CHECK(grid.delta[2 * center_at + 1] == doctest::Approx(-0.15));
}

TEST_CASE("query exactly on an LR center has zero center delta") {
    std::vector<double> q{axis_center(1, 6), axis_center(4, 6)};
    auto grid = make_local_grid(q, 6, 6, 3, 3);
    const int64_t center_at = 1 * 3 + 1;
    CHECK(grid.indices[center_at] == 1 * 6 + 4);
    CHECK(std::abs(grid.delta[2 * center_at]) < 1e-12);
    CHECK(std::abs(grid.delta[2 * center_at + 1]) < 1e-12);
}

TEST_CASE("corner query: indices clamp, deltas keep ideal geometry") {
    // Query pinned at the top-left corner of an 8x8 grid with a 7x7 window.
    std::vector<double> q{-1.0, -1.0};
    auto grid = make_local_grid(q, 8, 8, 7, 7);
    const double pitch = axis_pitch(8);
    for (int64_t dy = 0; dy < 7; ++dy) {
        for (int64_t dx = 0; dx < 7; ++dx) {
            const int64_t at = dy * 7 + dx;
            const int64_t iy = 0 - 3 + dy;  // ideal row index, may be negative
            const int64_t ix = 0 - 3 + dx;
            const int64_t cy = std::max<int64_t>(iy, 0);
            const int64_t cx = std::max<int64_t>(ix, 0);
            CHECK(grid.indices[at] == cy * 8 + cx);
            // delta vs the *ideal* center, spanning +-3 pitches around it
            CHECK(grid.delta[2 * at] == doctest::Approx(-1.0 - axis_center(iy, 8)));
            CHECK(grid.delta[2 * at + 1] == doctest::Approx(-1.0 - axis_center(ix, 8)));
        }
    }
    // hand-enumerated: ideal y-deltas span 6 pitches from top to bottom row
    const int64_t first = 0, last = 6 * 7 + 0;
    CHECK(std::abs(grid.delta[2 * first] - (-1.0 - axis_center(-3, 8))) < 1e-12);
    CHECK(std::abs(grid.delta[2 * last] - (-1.0 - axis_center(3, 8))) < 1e-12);
    CHECK(std::abs((grid.delta[2 * first] - grid.delta[2 * last]) - 6 * pitch) < 1e-12);
}

TEST_CASE("even grid sizes are rejected") {
    std::vector<double> q{0.0, 0.0};
    CHECK_THROWS_AS(make_local_grid(q, 4, 4, 2, 3), Error);
    CHECK_THROWS_AS(make_local_grid(q, 4, 4, 3, 4), Error);
}

TEST_CASE("freq_encode layout and values") {
    // gamma(0,0): alternating sin/cos of zero -> [0,1,0,1,...]
    std::vector<double> zero{0.0, 0.0};
    std::vector<double> out(40);
    freq_encode(zero, 10, out);
    for (int i = 0; i < 40; i += 2) {
        CHECK(out[i] == 0.0);
        CHECK(out[i + 1] == 1.0);
    }

    // output width 4L = 40 for L=10
    auto t = freq_encode_tensor<float>(zero, 10);
    CHECK(t.shape() == Shape{1, 40});

    // gamma(0.5, 0): first four y-entries sin/cos at doubling frequencies
    std::vector<double> d{0.5, 0.0};
    std::vector<double> row(40);
    freq_encode(d, 10, row);
    CHECK(row[0] == doctest::Approx(std::sin(0.5)).epsilon(1e-12));
    CHECK(row[1] == doctest::Approx(std::cos(0.5)).epsilon(1e-12));
    CHECK(row[2] == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
    CHECK(row[3] == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
    // all bands match direct evaluation
    for (int b = 0; b < 10; ++b) {
        const double s = std::ldexp(0.5, b);  // 2^b * 0.5
        CHECK(row[2 * b] == doctest::Approx(std::sin(s)).epsilon(1e-9));
        CHECK(row[2 * b + 1] == doctest::Approx(std::cos(s)).epsilon(1e-9));
    }
    // x component of (0.5, 0) is all zeros/ones
    for (int i = 20; i < 40; i += 2) {
        CHECK(row[i] == 0.0);
        CHECK(row[i + 1] == 1.0);
    }
}

TEST_CASE("bilinear plan weights sum to one") {
    clit::SamplePlan plan = make_sample_plan(5, 5, std::vector<double>{0.3, -0.2, 1.5, 1.5, -1.0, 0.0});
    for (int64_t i = 0; i < plan.n; ++i) {
        double s = 0.0;
        for (int t = 0; t < 4; ++t) s += plan.w[4 * i + t];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}
