#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "clit/lit.hpp"
#include "test_util.hpp"

using namespace clit;

namespace {

LitConfig tiny_cfg() {
    LitConfig cfg;
    cfg.channels = 8;
    cfg.heads = 2;
    cfg.grid_h = cfg.grid_w = 3;
    cfg.decoder_depth = 3;
    cfg.decoder_hidden = 16;
    return cfg;
}

QueryBatch some_queries(int64_t n, Rng& rng, Cell cell = {0.25, 0.25}) {
    QueryBatch q;
    for (int64_t i = 0; i < n; ++i) {
        q.coords.push_back(rng.uniform(-1.0, 1.0));
        q.coords.push_back(rng.uniform(-1.0, 1.0));
    }
    q.cell = cell;
    return q;
}

}  // namespace

TEST_CASE("decoder parameter count matches the configured MLP") {
    LitConfig cfg;  // defaults: C=64, depth 5, hidden 256
    Rng rng(1);
    LitT<float> lit(cfg, rng);
    int64_t weights = 0, biases = 0;
    lit.visit_parameters("lit", [&](const std::string& name, Tensor& t) {
        if (name.find("decoder") == std::string::npos) return;
        if (name.ends_with(".weight"))
            weights += t.numel();
        else
            biases += t.numel();
    });
    const int64_t c = 64;
    CHECK(weights == (c + 2) * 256 + 3 * 256 * 256 + 256 * 3);
    CHECK(biases == 4 * 256 + 3);
}

TEST_CASE("config validation") {
    Rng rng(2);
    LitConfig bad = tiny_cfg();
    bad.grid_h = 4;
    CHECK_THROWS_AS(LitT<float>(bad, rng), Error);
    bad = tiny_cfg();
    bad.heads = 3;  // 8 % 3 != 0
    CHECK_THROWS_AS(LitT<float>(bad, rng), Error);
}

TEST_CASE("feature channel mismatch is rejected") {
    Rng rng(3);
    LitT<float> lit(tiny_cfg(), rng);
    auto feats = testutil::random_tensor<float>({6, 6, 4}, rng);
    auto q = some_queries(3, rng);
    CHECK_THROWS_AS(lit.forward(feats, q), Error);
}

TEST_CASE("use_cell off makes the output cell-independent bitwise") {
    Rng rng(4);
    LitConfig cfg = tiny_cfg();
    cfg.use_cell = false;
    LitT<float> lit(cfg, rng);
    auto feats = testutil::random_tensor<float>({6, 6, 8}, rng);
    QueryBatch qa = some_queries(5, rng, {0.5, 0.5});
    QueryBatch qb = qa;
    qb.cell = {0.01, 0.02};
    auto oa = lit.forward(feats, qa);
    auto ob = lit.forward(feats, qb);
    for (int64_t i = 0; i < oa.numel(); ++i) CHECK(oa.data()[i] == ob.data()[i]);
}

TEST_CASE("use_cell on: different cells change the output") {
    Rng rng(5);
    LitT<float> lit(tiny_cfg(), rng);
    auto feats = testutil::random_tensor<float>({6, 6, 8}, rng);
    QueryBatch qa = some_queries(5, rng, {0.5, 0.5});
    QueryBatch qb = qa;
    qb.cell = {0.01, 0.02};
    auto oa = lit.forward(feats, qa);
    auto ob = lit.forward(feats, qb);
    double diff = 0;
    for (int64_t i = 0; i < oa.numel(); ++i) diff += std::abs(oa.data()[i] - ob.data()[i]);
    CHECK(diff > 0.0);
}

TEST_CASE("zero output layer produces an all-zero residual") {
    Rng rng(6);
    LitT<float> lit(tiny_cfg(), rng);
    lit.zero_output_layer();
    auto feats = testutil::random_tensor<float>({5, 7, 8}, rng);
    auto q = some_queries(9, rng);
    auto out = lit.forward(feats, q);
    REQUIRE(out.shape() == Shape{9, 3});
    for (auto v : out.data()) CHECK(v == 0.0f);
}

TEST_CASE("queries on the LR lattice at scale 1 are finite and well-shaped") {
    Rng rng(7);
    LitT<float> lit(tiny_cfg(), rng);
    auto feats = testutil::random_tensor<float>({6, 5, 8}, rng);
    auto q = hr_lattice(6, 5);
    auto out = lit.forward(feats, q);
    REQUIRE(out.shape() == Shape{30, 3});
    CHECK(out.all_finite());
}

TEST_CASE("single query equals the corresponding batched row bitwise") {
    Rng rng(8);
    LitT<float> lit(tiny_cfg(), rng);
    auto feats = testutil::random_tensor<float>({7, 7, 8}, rng);
    auto batch = some_queries(6, rng);
    auto full = lit.forward(feats, batch);
    for (int64_t i = 0; i < 6; ++i) {
        QueryBatch one;
        one.coords = {batch.coords[2 * i], batch.coords[2 * i + 1]};
        one.cell = batch.cell;
        auto row = lit.forward(feats, one);
        CHECK(row.data()[0] == full.data()[3 * i + 0]);
        CHECK(row.data()[1] == full.data()[3 * i + 1]);
        CHECK(row.data()[2] == full.data()[3 * i + 2]);
    }
}

TEST_CASE("zeroed positional-bias FC equals disabling the frequency bias") {
    Rng rng(9);
    LitConfig with = tiny_cfg();
    LitT<float> a(with, rng);
    a.pos_bias().zero();

    LitConfig without = tiny_cfg();
    without.use_freq_bias = false;
    Rng rng2(9);  // identical init stream
    LitT<float> b(without, rng2);

    auto feats = testutil::random_tensor<float>({6, 6, 8}, rng);
    auto q = some_queries(7, rng);
    auto oa = a.forward(feats, q);
    auto ob = b.forward(feats, q);
    for (int64_t i = 0; i < oa.numel(); ++i) CHECK(oa.data()[i] == doctest::Approx(ob.data()[i]).epsilon(1e-6));
}

TEST_CASE("one-hot positional-bias row reproduces a gamma component") {
    Rng rng(10);
    LitConfig cfg = tiny_cfg();
    LitT<float> lit(cfg, rng);
    // B = gamma * W + b with W one-hot: selects one encoding column per head
    auto& fc = lit.pos_bias();
    fc.zero();
    const int64_t pick = 5;
    fc.weight.data()[pick * cfg.heads + 0] = 1.0f;  // head 0 reads gamma[:, pick]

    std::vector<double> delta{0.03, -0.07, 0.2, 0.11};  // two offsets
    auto gamma = freq_encode_tensor<float>(delta, cfg.freq_bands);
    auto bias = ops::linear(gamma, fc.weight, fc.bias);
    REQUIRE(bias.shape() == Shape{2, cfg.heads});
    for (int64_t i = 0; i < 2; ++i) {
        CHECK(bias.data()[i * cfg.heads + 0] == doctest::Approx(gamma.data()[i * 40 + pick]));
        CHECK(bias.data()[i * cfg.heads + 1] == 0.0f);
    }
}

TEST_CASE("positional bias is pointwise: permuting grid offsets permutes B") {
    Rng rng(11);
    LitT<float> lit(tiny_cfg(), rng);
    std::vector<double> delta{0.1, 0.2, -0.3, 0.05, 0.0, -0.12};
    std::vector<double> permuted{0.0, -0.12, 0.1, 0.2, -0.3, 0.05};
    auto b1 = lit.pos_bias().forward(freq_encode_tensor<float>(delta, 10));
    auto b2 = lit.pos_bias().forward(freq_encode_tensor<float>(permuted, 10));
    const int64_t h = lit.config().heads;
    for (int64_t j = 0; j < h; ++j) {
        CHECK(b1.data()[0 * h + j] == b2.data()[1 * h + j]);
        CHECK(b1.data()[1 * h + j] == b2.data()[2 * h + j]);
        CHECK(b1.data()[2 * h + j] == b2.data()[0 * h + j]);
    }
}

TEST_CASE("identity projection convs pass the feature map through") {
    Rng rng(12);
    LitConfig cfg = tiny_cfg();
    LitT<float> lit(cfg, rng);
    auto& pq = lit.proj_q();
    pq.zero();
    for (int64_t c = 0; c < cfg.channels; ++c)
        pq.weight.data()[((1 * 3 + 1) * cfg.channels + c) * cfg.channels + c] = 1.0f;  // center tap
    auto feats = testutil::random_tensor<float>({5, 5, 8}, rng);
    auto qmap = pq.forward(feats);
    for (int64_t i = 0; i < feats.numel(); ++i) CHECK(qmap.data()[i] == feats.data()[i]);
}

TEST_CASE("G=1x1 reduces to a per-nearest-pixel implicit function") {
    Rng rng(13);
    LitConfig cfg = tiny_cfg();
    cfg.grid_h = cfg.grid_w = 1;
    LitT<float> lit(cfg, rng);
    auto feats = testutil::random_tensor<float>({6, 6, 8}, rng);
    auto queries = some_queries(5, rng);
    auto out = lit.forward(feats, queries);

    // Direct no-attention pipeline: decode(concat(Vmap[nearest], cell)).
    auto vmap = lit.proj_v().forward(feats);
    for (int64_t i = 0; i < 5; ++i) {
        const int64_t iy = nearest_index(queries.coords[2 * i], 6);
        const int64_t ix = nearest_index(queries.coords[2 * i + 1], 6);
        Tensor row({1, 10});
        for (int64_t c = 0; c < 8; ++c) row.data()[c] = vmap.data()[(iy * 6 + ix) * 8 + c];
        row.data()[8] = static_cast<float>(queries.cell.h);
        row.data()[9] = static_cast<float>(queries.cell.w);
        Tensor h = row;
        auto& dec = lit.decoder();
        for (size_t l = 0; l + 1 < dec.size(); ++l) h = ops::gelu(dec[l].forward(h));
        h = dec.back().forward(h);
        for (int64_t c = 0; c < 3; ++c)
            CHECK(out.data()[3 * i + c] == doctest::Approx(h.data()[c]).epsilon(1e-6));
    }
}

TEST_CASE("gradients flow to all three projections") {
    Rng rng(14);
    LitT<double> lit(tiny_cfg(), rng);
    auto feats = testutil::random_tensor<double>({6, 6, 8}, rng);
    QueryBatch q;
    Rng qr(15);
    for (int i = 0; i < 4; ++i) {
        q.coords.push_back(qr.uniform(-0.9, 0.9));
        q.coords.push_back(qr.uniform(-0.9, 0.9));
    }
    q.cell = {0.2, 0.2};
    auto target = testutil::random_tensor<double>({4, 3}, qr, 2.0, 3.0);

    GradientTapeT<double> tape;
    lit.visit_parameters("lit", [&](const std::string& name, Tensor64& t) {
        tape.register_parameter(name, t);
    });
    {
        TapeScopeT<double> scope(tape);
        auto loss = ops::l1_loss(lit.forward(feats, q), target);
        tape.backward(loss);
    }
    auto grad_norm = [&](Tensor64& t) {
        double s = 0;
        if (!t.has_grad()) return 0.0;
        for (auto g : t.grad()) s += g * g;
        return s;
    };
    CHECK(grad_norm(lit.proj_q().weight) > 0.0);
    CHECK(grad_norm(lit.proj_k().weight) > 0.0);
    CHECK(grad_norm(lit.proj_v().weight) > 0.0);
    CHECK(grad_norm(lit.pos_bias().weight) > 0.0);

    // finite-difference spot check on a few projection weights
    auto forward = [&] { return ops::l1_loss(lit.forward(feats, q), target).item(); };
    auto& kw = lit.proj_k().weight;
    for (int64_t idx : {int64_t{0}, int64_t{37}, kw.numel() - 1}) {
        const double orig = kw.data()[idx];
        const double h = 1e-5;
        kw.data()[idx] = orig + h;
        const double up = forward();
        kw.data()[idx] = orig - h;
        const double down = forward();
        kw.data()[idx] = orig;
        const double fd = (up - down) / (2 * h);
        CHECK(kw.grad()[idx] == doctest::Approx(fd).epsilon(2e-3));
    }
}

TEST_CASE("local ensemble: on-center query matches plain forward; constant image stays constant") {
    Rng rng(16);
    LitConfig cfg = tiny_cfg();
    LitT<float> plain(cfg, rng);
    LitConfig ecfg = cfg;
    ecfg.local_ensemble = true;
    Rng rng2(16);
    LitT<float> ens(ecfg, rng2);

    auto feats = testutil::random_tensor<float>({6, 6, 8}, rng);
    QueryBatch q;
    q.coords = {axis_center(2, 6), axis_center(3, 6)};
    q.cell = {0.3, 0.3};
    auto a = plain.forward(feats, q);
    auto b = ens.forward(feats, q);
    CHECK(b.all_finite());
    for (int64_t i = 0; i < 3; ++i) CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-6));

    // constant feature map -> identical outputs for interior queries
    auto cfeat = Tensor::full({9, 9, 8}, 0.37f);
    QueryBatch qi = some_queries(6, rng, {0.2, 0.2});
    for (auto& c : qi.coords) c *= 0.3;  // keep well inside, away from conv borders
    auto out = ens.forward(cfeat, qi);
    for (int64_t i = 1; i < 6; ++i)
        for (int64_t c = 0; c < 3; ++c)
            CHECK(out.data()[3 * i + c] == doctest::Approx(out.data()[c]).epsilon(1e-5));
}
