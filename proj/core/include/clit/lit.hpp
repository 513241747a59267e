#pragma once

#include <array>
#include <vector>

#include "clit/coords.hpp"
#include "clit/nn.hpp"

namespace clit {

struct LitConfig {
    int64_t channels = 64;   // must match the encoder
    int64_t heads = 8;       // channels % heads == 0
    int64_t freq_bands = 10;  // L
    int64_t grid_h = 7, grid_w = 7;
    int64_t decoder_depth = 5;
    int64_t decoder_hidden = 256;
    bool use_cell = true;       // feed (cell_h, cell_w) to the decoder
    bool use_freq_bias = true;  // relative positional bias from gamma(dx)
    bool local_ensemble = false;
};

// Local Implicit Transformer: q/k/v projection convs over the feature map,
// local attention over a G_h x G_w grid around each query with a
// frequency-encoded relative positional bias, and an MLP decoder mapping the
// attended embedding (plus the cell size) to an RGB residual.
template <typename S>
class LitT {
public:
    // Head-averaged or per-head attention maps captured during a forward pass.
    struct Capture {
        int64_t n = 0, heads = 0, gh = 0, gw = 0;
        std::vector<S> weights;  // n * heads * (gh*gw)
    };

    LitT(LitConfig cfg, Rng& rng) : cfg_(cfg) {
        check(cfg.channels >= 1 && cfg.heads >= 1, "lit: channels and heads must be positive");
        check(cfg.channels % cfg.heads == 0,
              "lit: channels " + std::to_string(cfg.channels) + " not divisible by heads " +
                  std::to_string(cfg.heads));
        check(cfg.freq_bands >= 1, "lit: freq_bands must be >= 1");
        check(cfg.grid_h >= 1 && cfg.grid_w >= 1 && cfg.grid_h % 2 == 1 && cfg.grid_w % 2 == 1,
              "lit: local grid dims must be odd, got " + std::to_string(cfg.grid_h) + "x" +
                  std::to_string(cfg.grid_w));
        check(cfg.decoder_depth >= 2, "lit: decoder needs at least input and output layers");
        proj_q_ = Conv2dLayerT<S>(3, cfg.channels, cfg.channels, rng);
        proj_k_ = Conv2dLayerT<S>(3, cfg.channels, cfg.channels, rng);
        proj_v_ = Conv2dLayerT<S>(3, cfg.channels, cfg.channels, rng);
        pos_bias_ = LinearLayerT<S>(4 * cfg.freq_bands, cfg.heads, rng);
        const int64_t in_dim = cfg.channels + (cfg.use_cell ? 2 : 0);
        decoder_.reserve(static_cast<size_t>(cfg.decoder_depth));
        for (int64_t i = 0; i < cfg.decoder_depth; ++i) {
            const int64_t din = i == 0 ? in_dim : cfg.decoder_hidden;
            const int64_t dout = i == cfg.decoder_depth - 1 ? 3 : cfg.decoder_hidden;
            decoder_.emplace_back(din, dout, rng);
        }
    }

    // features [H,W,C], queries in the shared normalized frame -> [N,3]
    // residual RGB rows. With local_ensemble the forward is evaluated with
    // the grid anchored at each of the query's four LR neighbors and the
    // results are blended with diagonal-area weights.
    TensorT<S> forward(TensorT<S> features, const QueryBatch& queries, Capture* capture = nullptr) const {
        if (!cfg_.local_ensemble) return forward_anchored(features, queries, {}, capture);

        const int64_t h = features.size(0), w = features.size(1);
        const int64_t n = queries.size();
        std::array<std::vector<double>, 4> blend;
        for (auto& b : blend) b.resize(static_cast<size_t>(n));
        std::array<std::vector<int64_t>, 4> corner_anchor;
        for (auto& a : corner_anchor) a.resize(static_cast<size_t>(2 * n));
        for (int64_t i = 0; i < n; ++i) {
            const double ty =
                std::clamp(continuous_index(queries.coords[2 * i], h), 0.0, static_cast<double>(h - 1));
            const double tx =
                std::clamp(continuous_index(queries.coords[2 * i + 1], w), 0.0, static_cast<double>(w - 1));
            const int64_t y0 = static_cast<int64_t>(ty);
            const int64_t x0 = static_cast<int64_t>(tx);
            const int64_t y1 = std::min(y0 + 1, h - 1);
            const int64_t x1 = std::min(x0 + 1, w - 1);
            const double fy = ty - static_cast<double>(y0);
            const double fx = tx - static_cast<double>(x0);
            const int64_t ys[4] = {y0, y0, y1, y1};
            const int64_t xs[4] = {x0, x1, x0, x1};
            const double ws[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx};
            for (int e = 0; e < 4; ++e) {
                corner_anchor[e][static_cast<size_t>(2 * i)] = ys[e];
                corner_anchor[e][static_cast<size_t>(2 * i + 1)] = xs[e];
                blend[e][static_cast<size_t>(i)] = ws[e];
            }
        }
        TensorT<S> acc;
        for (int e = 0; e < 4; ++e) {
            TensorT<S> part = forward_anchored(features, queries, corner_anchor[e], e == 0 ? capture : nullptr);
            part = ops::mul_rows(part, blend[e]);
            acc = acc.defined() ? ops::add(acc, part) : part;
        }
        return acc;
    }

    const LitConfig& config() const { return cfg_; }

    Conv2dLayerT<S>& proj_q() { return proj_q_; }
    Conv2dLayerT<S>& proj_k() { return proj_k_; }
    Conv2dLayerT<S>& proj_v() { return proj_v_; }
    LinearLayerT<S>& pos_bias() { return pos_bias_; }
    std::vector<LinearLayerT<S>>& decoder() { return decoder_; }

    // Zeroing the last decoder layer makes every residual exactly zero.
    void zero_output_layer() { decoder_.back().zero(); }

    void visit_parameters(const std::string& prefix, const ParamVisitor<S>& fn) {
        proj_q_.visit(prefix + ".proj_q", fn);
        proj_k_.visit(prefix + ".proj_k", fn);
        proj_v_.visit(prefix + ".proj_v", fn);
        pos_bias_.visit(prefix + ".pos_bias", fn);
        for (size_t i = 0; i < decoder_.size(); ++i)
            decoder_[i].visit(prefix + ".decoder.fc" + std::to_string(i), fn);
    }

private:
    TensorT<S> forward_anchored(TensorT<S> features, const QueryBatch& queries,
                                std::span<const int64_t> anchors, Capture* capture) const {
        check(features.rank() == 3, "lit: features must be H x W x C");
        check(features.size(2) == cfg_.channels,
              "lit: feature channels " + std::to_string(features.size(2)) +
                  " do not match configured channels " + std::to_string(cfg_.channels));
        const int64_t h = features.size(0), w = features.size(1);
        const int64_t n = queries.size();
        check(n >= 1, "lit: empty query batch");
        const int64_t g = cfg_.grid_h * cfg_.grid_w;

        TensorT<S> qmap = proj_q_.forward(features);
        TensorT<S> kmap = proj_k_.forward(features);
        TensorT<S> vmap = proj_v_.forward(features);

        const LocalGrid grid =
            anchors.empty() ? make_local_grid(queries.coords, h, w, cfg_.grid_h, cfg_.grid_w)
                            : make_local_grid_anchored(queries.coords, h, w, cfg_.grid_h, cfg_.grid_w, anchors);
        const SamplePlan qplan = make_sample_plan(h, w, queries.coords);

        TensorT<S> q = ops::bilinear_sample(qmap, qplan);
        TensorT<S> k = ops::gather_cells(kmap, grid.indices, n, g);
        TensorT<S> v = ops::gather_cells(vmap, grid.indices, n, g);

        TensorT<S> bias;  // undefined -> no positional bias
        if (cfg_.use_freq_bias) {
            TensorT<S> gamma = freq_encode_tensor<S>(grid.delta, cfg_.freq_bands);  // [n*g, 4L]
            bias = pos_bias_.forward(gamma);                                        // [n*g, heads]
        }
        auto attended = ops::cslab_attend(q, k, v, bias, cfg_.heads);
        if (capture) {
            capture->n = n;
            capture->heads = cfg_.heads;
            capture->gh = cfg_.grid_h;
            capture->gw = cfg_.grid_w;
            capture->weights = *attended.weights;
        }

        TensorT<S> dec = attended.out;
        if (cfg_.use_cell) {
            TensorT<S> cell({n, 2});
            for (int64_t i = 0; i < n; ++i) {
                cell.data()[2 * i] = static_cast<S>(queries.cell.h);
                cell.data()[2 * i + 1] = static_cast<S>(queries.cell.w);
            }
            dec = ops::concat_cols(dec, cell);
        }
        for (size_t i = 0; i + 1 < decoder_.size(); ++i) dec = ops::gelu(decoder_[i].forward(dec));
        return decoder_.back().forward(dec);
    }

    LitConfig cfg_;
    Conv2dLayerT<S> proj_q_, proj_k_, proj_v_;
    LinearLayerT<S> pos_bias_;
    std::vector<LinearLayerT<S>> decoder_;
};

using Lit = LitT<float>;

}  // namespace clit
