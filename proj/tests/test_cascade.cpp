#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "clit/cascade.hpp"
#include "test_util.hpp"

using namespace clit;

namespace {

EncoderConfig tiny_encoder() {
    EncoderConfig e;
    e.channels = 8;
    e.n_resblocks = 1;
    return e;
}

LitConfig tiny_lit() {
    LitConfig l;
    l.channels = 8;
    l.heads = 2;
    l.grid_h = l.grid_w = 3;
    l.decoder_depth = 3;
    l.decoder_hidden = 16;
    return l;
}

}  // namespace

TEST_CASE("feature factors follow the cumulative product before each branch") {
    CHECK(CascadeConfig::feature_factors(std::vector<double>{1.0}) == std::vector<double>{1.0});
    // the last factor never scales features; it only contributes to the total scale
    CHECK(CascadeConfig::feature_factors(std::vector<double>{1.0, 2.0}) ==
          std::vector<double>({1.0, 1.0}));
    CHECK(CascadeConfig::feature_factors(std::vector<double>{1.0, 2.0, 3.0}) ==
          std::vector<double>({1.0, 1.0, 2.0}));
    CHECK(CascadeConfig::feature_factors(std::vector<double>{1.0, 1.5, 2.0, 2.0}) ==
          std::vector<double>({1.0, 1.0, 1.5, 3.0}));
}

TEST_CASE("cascade config validation") {
    Rng rng(1);
    CascadeConfig c;
    c.branches = 2;
    c.factors = {2.0, 2.0};  // first factor must be 1
    CHECK_THROWS_AS(ClitT<float>(tiny_encoder(), tiny_lit(), c, rng), Error);
    c.factors = {1.0, 0.5};
    CHECK_THROWS_AS(ClitT<float>(tiny_encoder(), tiny_lit(), c, rng), Error);
    c.factors = {1.0, 2.0};
    c.lambda = 0.0;
    CHECK_THROWS_AS(ClitT<float>(tiny_encoder(), tiny_lit(), c, rng), Error);
}

TEST_CASE("multiscale features: constant map upsamples to constant with correct shapes") {
    Rng rng(2);
    auto z = Tensor::full({6, 6, 4}, 1.25f);
    auto z2 = ops::bilinear_upsample(z, 2.0, 2.0);
    REQUIRE(z2.shape() == Shape{12, 12, 4});
    for (auto v : z2.data()) CHECK(v == 1.25f);
    auto z3 = ops::bilinear_upsample(z, 1.5, 1.5);
    REQUIRE(z3.shape() == Shape{9, 9, 4});
}

TEST_CASE("N=1 output equals residual plus skip") {
    Rng rng(3);
    CascadeConfig c;
    c.branches = 1;
    c.factors = {1.0};
    c.lambda = 0.4;  // irrelevant for N=1
    ClitT<float> model(tiny_encoder(), tiny_lit(), c, rng);
    auto img = testutil::random_tensor<float>({8, 8, 3}, rng, 0.0, 1.0);
    auto queries = hr_lattice(12, 12);
    auto res = model.forward_queries(img, queries);
    REQUIRE(res.branch_residuals.size() == 1);
    for (int64_t i = 0; i < res.output.numel(); ++i)
        CHECK(res.output.data()[i] ==
              doctest::Approx(res.branch_residuals[0].data()[i] + res.skip.data()[i]).epsilon(1e-6));
}

TEST_CASE("Eq-10 combination for N=2 with lambda 0.75") {
    Rng rng(4);
    CascadeConfig c;
    c.branches = 2;
    c.factors = {1.0, 2.0};
    c.lambda = 0.75;
    ClitT<float> model(tiny_encoder(), tiny_lit(), c, rng);
    auto img = testutil::random_tensor<float>({8, 8, 3}, rng, 0.0, 1.0);
    auto queries = hr_lattice(14, 14);
    auto res = model.forward_queries(img, queries);
    REQUIRE(res.branch_residuals.size() == 2);
    for (int64_t i = 0; i < res.output.numel(); ++i) {
        const double manual = 0.75 * res.branch_residuals[0].data()[i] +
                              res.branch_residuals[1].data()[i] + res.skip.data()[i];
        CHECK(static_cast<double>(res.output.data()[i]) == doctest::Approx(manual).epsilon(1e-6));
    }
}

TEST_CASE("zero-initialized decoders reduce to bilinear upsampling bit-exactly") {
    Rng rng(5);
    CascadeConfig c;
    c.branches = 2;
    c.factors = {1.0, 2.0};
    ClitT<float> model(tiny_encoder(), tiny_lit(), c, rng);
    for (auto& b : model.branches()) b.zero_output_layer();
    auto img = testutil::random_tensor<float>({9, 7, 3}, rng, 0.0, 1.0);
    auto out = model.super_resolve(img, 2.5, 2.5);
    auto skip = ops::bilinear_upsample(img, 2.5, 2.5);
    REQUIRE(out.shape() == skip.shape());
    for (int64_t i = 0; i < out.numel(); ++i) CHECK(out.data()[i] == skip.data()[i]);
}

TEST_CASE("doubling the residuals doubles output minus skip") {
    Rng rng(6);
    CascadeConfig c;
    c.branches = 2;
    c.factors = {1.0, 2.0};
    ClitT<float> model(tiny_encoder(), tiny_lit(), c, rng);
    auto img = testutil::random_tensor<float>({8, 8, 3}, rng, 0.0, 1.0);
    auto queries = hr_lattice(11, 11);
    auto before = model.forward_queries(img, queries);

    for (auto& b : model.branches()) {
        for (auto& v : b.decoder().back().weight.data()) v *= 2.0f;
        for (auto& v : b.decoder().back().bias.data()) v *= 2.0f;
    }
    auto after = model.forward_queries(img, queries);
    for (size_t bi = 0; bi < 2; ++bi)
        for (int64_t i = 0; i < before.branch_residuals[bi].numel(); ++i)
            CHECK(after.branch_residuals[bi].data()[i] == 2.0f * before.branch_residuals[bi].data()[i]);
    for (int64_t i = 0; i < before.output.numel(); ++i) {
        const double d_before = static_cast<double>(before.output.data()[i]) - before.skip.data()[i];
        const double d_after = static_cast<double>(after.output.data()[i]) - after.skip.data()[i];
        CHECK(d_after == doctest::Approx(2.0 * d_before).epsilon(1e-5));
    }
}

TEST_CASE("removing a branch changes the output by its discounted residual") {
    Rng rng(7);
    CascadeConfig c;
    c.branches = 2;
    c.factors = {1.0, 2.0};
    c.lambda = 0.75;
    ClitT<float> model(tiny_encoder(), tiny_lit(), c, rng);
    auto img = testutil::random_tensor<float>({8, 8, 3}, rng, 0.0, 1.0);
    auto queries = hr_lattice(13, 13);
    auto full = model.forward_queries(img, queries);

    // Ablate branch 0 by zeroing its decoder output layer.
    model.branches()[0].zero_output_layer();
    auto ablated = model.forward_queries(img, queries);
    for (int64_t i = 0; i < full.output.numel(); ++i) {
        const double delta = static_cast<double>(full.output.data()[i]) - ablated.output.data()[i];
        CHECK(delta == doctest::Approx(0.75 * full.branch_residuals[0].data()[i]).epsilon(1e-5));
    }
}

TEST_CASE("output shapes for arbitrary real scales in [1, 30]") {
    Rng rng(8);
    CascadeConfig c;
    c.branches = 1;
    c.factors = {1.0};
    ClitT<float> model(tiny_encoder(), tiny_lit(), c, rng);
    auto img = testutil::random_tensor<float>({6, 6, 3}, rng, 0.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        const double rh = rng.uniform(1.0, 30.0);
        const double rw = rng.uniform(1.0, 30.0);
        auto out = model.super_resolve(img, rh, rw);
        CHECK(out.size(0) == static_cast<int64_t>(std::ceil(rh * 6 - 1e-9)));
        CHECK(out.size(1) == static_cast<int64_t>(std::ceil(rw * 6 - 1e-9)));
        CHECK(out.size(2) == 3);
        CHECK(out.all_finite());
    }
    CHECK_THROWS_AS(model.super_resolve(img, 0.5, 2.0), Error);
}

TEST_CASE("training-time feature factors override the config") {
    Rng rng(9);
    CascadeConfig c;
    c.branches = 2;
    c.factors = {1.0, 2.0};
    ClitT<float> model(tiny_encoder(), tiny_lit(), c, rng);
    auto img = testutil::random_tensor<float>({8, 8, 3}, rng, 0.0, 1.0);
    auto queries = hr_lattice(10, 10);
    std::vector<double> factors{1.0, 1.9};  // sampled cumulative factors
    auto res = model.forward_queries(img, queries, factors);
    CHECK(res.output.all_finite());
    CHECK_THROWS_AS(model.forward_queries(img, queries, std::vector<double>{1.0}), Error);
}

TEST_CASE("stage hand-off preserves existing parameters bit-exactly") {
    Rng rng(10);
    CascadeConfig c;
    c.branches = 1;
    c.factors = {1.0};
    ClitT<float> model(tiny_encoder(), tiny_lit(), c, rng);
    auto snapshot = model.named_parameters();
    std::vector<std::vector<float>> before;
    for (auto& [name, t] : snapshot) before.emplace_back(t.data().begin(), t.data().end());

    model.add_branch(tiny_lit(), 2.0, rng);
    CHECK(model.config().branches == 2);
    CHECK(model.branches().size() == 2);
    auto after = model.named_parameters();
    // every pre-existing parameter is untouched
    for (size_t i = 0; i < snapshot.size(); ++i) {
        auto it = std::find_if(after.begin(), after.end(),
                               [&](auto& p) { return p.first == snapshot[i].first; });
        REQUIRE(it != after.end());
        for (int64_t j = 0; j < it->second.numel(); ++j)
            CHECK(it->second.data()[j] == before[i][static_cast<size_t>(j)]);
    }
}

TEST_CASE("integer-scale shift equivariance in the interior") {
    Rng rng(11);
    EncoderConfig e = tiny_encoder();  // 1 resblock: small receptive field
    LitConfig l = tiny_lit();
    CascadeConfig c;
    c.branches = 1;
    c.factors = {1.0};
    ClitT<float> model(e, l, c, rng);

    const int64_t n = 18, r = 2;
    auto base = testutil::random_tensor<float>({n + 1, n, 3}, rng, 0.0, 1.0);
    // A: rows 0..n-1, B: rows 1..n (a one-pixel vertical shift of the source)
    Tensor a({n, n, 3});
    Tensor b({n, n, 3});
    for (int64_t y = 0; y < n; ++y)
        for (int64_t x = 0; x < n; ++x)
            for (int64_t ch = 0; ch < 3; ++ch) {
                a.data()[(y * n + x) * 3 + ch] = base.data()[(y * n + x) * 3 + ch];
                b.data()[(y * n + x) * 3 + ch] = base.data()[((y + 1) * n + x) * 3 + ch];
            }
    auto oa = model.super_resolve(a, r, r);
    auto ob = model.super_resolve(b, r, r);
    // interior margin: conv receptive field + local grid halo, in LR pixels
    const int64_t margin = 8;
    for (int64_t y = margin * r; y < (n - margin) * r; ++y)
        for (int64_t x = margin * r; x < (n - margin) * r; ++x)
            for (int64_t ch = 0; ch < 3; ++ch) {
                const float shifted = oa.data()[(((y + r) * (n * r)) + x) * 3 + ch];
                const float moved = ob.data()[((y * (n * r)) + x) * 3 + ch];
                CHECK(std::abs(shifted - moved) < 1e-4f);
            }
}
