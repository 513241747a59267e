#pragma once

#include <array>
#include <vector>

#include "clit/nn.hpp"

namespace clit {

// EDSR-baseline-style feature extractor: head conv, residual blocks
// (conv-ReLU-conv plus skip), tail conv, and a global skip from the head
// output. No upsampler tail; the output stays on the input lattice.
struct EncoderConfig {
    int64_t channels = 64;
    int64_t n_resblocks = 4;  // desk-scale default; the full model uses 16
    int64_t kernel = 3;
    double res_scale = 1.0;
    std::array<double, 3> rgb_mean{0.0, 0.0, 0.0};  // subtracted before the head conv
};

template <typename S>
class EncoderT {
public:
    EncoderT(EncoderConfig cfg, Rng& rng) : cfg_(cfg) {
        check(cfg.channels >= 1, "encoder: channels must be >= 1");
        check(cfg.n_resblocks >= 1, "encoder: n_resblocks must be >= 1");
        check(cfg.kernel % 2 == 1, "encoder: kernel size must be odd");
        head_ = Conv2dLayerT<S>(cfg.kernel, 3, cfg.channels, rng);
        blocks_.reserve(static_cast<size_t>(cfg.n_resblocks));
        for (int64_t i = 0; i < cfg.n_resblocks; ++i)
            blocks_.push_back({Conv2dLayerT<S>(cfg.kernel, cfg.channels, cfg.channels, rng),
                               Conv2dLayerT<S>(cfg.kernel, cfg.channels, cfg.channels, rng)});
        tail_ = Conv2dLayerT<S>(cfg.kernel, cfg.channels, cfg.channels, rng);
    }

    // image [H,W,3] in [0,1] -> features [H,W,C] on the same lattice.
    TensorT<S> encode(TensorT<S> image) const {
        check(image.rank() == 3 && image.size(2) == 3,
              "encode: expected an H x W x 3 image, got " + shape_str(image.shape()));
        const std::array<double, 3> neg{-cfg_.rgb_mean[0], -cfg_.rgb_mean[1], -cfg_.rgb_mean[2]};
        TensorT<S> x = ops::shift_channels(image, neg);
        TensorT<S> head = head_.forward(x);
        TensorT<S> y = head;
        for (const auto& blk : blocks_) {
            TensorT<S> r = blk.conv2.forward(ops::relu(blk.conv1.forward(y)));
            if (cfg_.res_scale != 1.0) r = ops::scale(r, cfg_.res_scale);
            y = ops::add(y, r);
        }
        return ops::add(head, tail_.forward(y));
    }

    const EncoderConfig& config() const { return cfg_; }

    struct ResBlock {
        Conv2dLayerT<S> conv1, conv2;
    };
    Conv2dLayerT<S>& head() { return head_; }
    Conv2dLayerT<S>& tail() { return tail_; }
    std::vector<ResBlock>& blocks() { return blocks_; }

    void visit_parameters(const std::string& prefix, const ParamVisitor<S>& fn) {
        head_.visit(prefix + ".head", fn);
        for (size_t i = 0; i < blocks_.size(); ++i) {
            blocks_[i].conv1.visit(prefix + ".block" + std::to_string(i) + ".conv1", fn);
            blocks_[i].conv2.visit(prefix + ".block" + std::to_string(i) + ".conv2", fn);
        }
        tail_.visit(prefix + ".tail", fn);
    }

private:
    EncoderConfig cfg_;
    Conv2dLayerT<S> head_;
    std::vector<ResBlock> blocks_;
    Conv2dLayerT<S> tail_;
};

using Encoder = EncoderT<float>;

}  // namespace clit
