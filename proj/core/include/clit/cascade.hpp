#pragma once

#include <cmath>
#include <vector>

#include "clit/encoder.hpp"
#include "clit/lit.hpp"

namespace clit {

struct CascadeConfig {
    int64_t branches = 1;            // N
    std::vector<double> factors;     // branch scale-factor set s, factors[0] == 1
    double lambda = 0.75;            // residual discount

    // Feature-map upsampling factor of branch i: the cumulative product of
    // the factors before i (branch 0 is always 1, and the last configured
    // factor only ever contributes through the total scale).
    static std::vector<double> feature_factors(std::span<const double> s) {
        std::vector<double> f(s.size(), 1.0);
        for (size_t i = 1; i < s.size(); ++i) f[i] = f[i - 1] * s[i - 1];
        return f;
    }
};

inline int64_t scaled_dim(int64_t n, double r) {
    return static_cast<int64_t>(std::ceil(r * static_cast<double>(n) - 1e-9));
}

// Cascaded LIT: one shared encoder, one LIT per branch running on
// progressively upsampled feature maps, residuals combined with a geometric
// discount plus the bilinear skip of the input image.
template <typename S>
class ClitT {
public:
    ClitT(EncoderConfig ecfg, LitConfig lcfg, CascadeConfig ccfg, Rng& rng)
        : encoder_(ecfg, rng), ccfg_(ccfg) {
        check(ccfg.branches >= 1, "cascade: need at least one branch");
        check(0.0 < ccfg.lambda && ccfg.lambda <= 1.0, "cascade: lambda must be in (0, 1]");
        if (ccfg_.factors.empty()) {
            ccfg_.factors.assign(static_cast<size_t>(ccfg.branches), 2.0);
            ccfg_.factors[0] = 1.0;
        }
        check(static_cast<int64_t>(ccfg_.factors.size()) == ccfg.branches,
              "cascade: factor count does not match branch count");
        check(ccfg_.factors[0] == 1.0, "cascade: the first scale factor must be 1");
        for (double s : ccfg_.factors) check(s >= 1.0, "cascade: scale factors must be >= 1");
        check(lcfg.channels == ecfg.channels, "cascade: LIT channels must match the encoder");
        branches_.reserve(static_cast<size_t>(ccfg.branches));
        for (int64_t i = 0; i < ccfg.branches; ++i) branches_.emplace_back(lcfg, rng);
    }

    struct ForwardResult {
        TensorT<S> output;                       // [N,3] final rows
        TensorT<S> skip;                         // [N,3] bilinear skip rows
        std::vector<TensorT<S>> branch_residuals;  // [N,3] each, undiscounted
    };

    // Runs all branches over one query batch. feature_factors gives each
    // branch's absolute feature upsampling factor (empty -> from config).
    // captures, when non-null, receives one attention capture per branch.
    ForwardResult forward_queries(TensorT<S> image, const QueryBatch& queries,
                                  std::span<const double> feature_factors = {},
                                  std::vector<typename LitT<S>::Capture>* captures = nullptr) const {
        std::vector<double> defaults;
        if (feature_factors.empty()) {
            defaults = CascadeConfig::feature_factors(ccfg_.factors);
            feature_factors = defaults;
        }
        check(static_cast<int64_t>(feature_factors.size()) == ccfg_.branches,
              "cascade: feature factor count mismatch");

        TensorT<S> z = encoder_.encode(image);
        if (captures) captures->resize(branches_.size());

        ForwardResult res;
        const int64_t nb = ccfg_.branches;
        TensorT<S> combined;
        for (int64_t i = 0; i < nb; ++i) {
            TensorT<S> zi = feature_factors[static_cast<size_t>(i)] == 1.0
                                ? z
                                : ops::bilinear_upsample(z, feature_factors[static_cast<size_t>(i)],
                                                         feature_factors[static_cast<size_t>(i)]);
            TensorT<S> ri = branches_[static_cast<size_t>(i)].forward(
                zi, queries, captures ? &(*captures)[static_cast<size_t>(i)] : nullptr);
            res.branch_residuals.push_back(ri);
            const double weight = std::pow(ccfg_.lambda, static_cast<double>(nb - 1 - i));
            TensorT<S> wi = weight == 1.0 ? ri : ops::scale(ri, weight);
            combined = combined.defined() ? ops::add(combined, wi) : wi;
        }
        res.skip = ops::bilinear_sample(image, make_sample_plan(image.size(0), image.size(1), queries.coords));
        res.output = ops::add(combined, res.skip);
        return res;
    }

    // Full-image super-resolution at a real scale >= 1 per axis.
    TensorT<S> super_resolve(TensorT<S> image, double rh, double rw,
                             std::vector<typename LitT<S>::Capture>* captures = nullptr) const {
        check(rh >= 1.0 && rw >= 1.0, "super_resolve: downscaling factors (< 1) are unsupported");
        check(image.rank() == 3 && image.size(2) == 3, "super_resolve: expected an H x W x 3 image");
        const int64_t oh = scaled_dim(image.size(0), rh);
        const int64_t ow = scaled_dim(image.size(1), rw);
        const QueryBatch queries = hr_lattice(oh, ow);
        ForwardResult res = forward_queries(image, queries, {}, captures);
        return TensorT<S>({oh, ow, 3}, std::vector<S>(res.output.data().begin(), res.output.data().end()));
    }

    // Appends a freshly initialized branch (cumulative training stage hand-off).
    void add_branch(const LitConfig& lcfg, double factor, Rng& rng) {
        check(lcfg.channels == encoder_.config().channels, "cascade: LIT channels must match the encoder");
        check(factor >= 1.0, "cascade: scale factors must be >= 1");
        branches_.emplace_back(lcfg, rng);
        ccfg_.branches += 1;
        ccfg_.factors.push_back(factor);
    }

    EncoderT<S>& encoder() { return encoder_; }
    const EncoderT<S>& encoder() const { return encoder_; }
    std::vector<LitT<S>>& branches() { return branches_; }
    const std::vector<LitT<S>>& branches() const { return branches_; }
    const CascadeConfig& config() const { return ccfg_; }

    void visit_parameters(const ParamVisitor<S>& fn) {
        encoder_.visit_parameters("encoder", fn);
        for (size_t i = 0; i < branches_.size(); ++i)
            branches_[i].visit_parameters("branch" + std::to_string(i), fn);
    }

    std::vector<std::pair<std::string, TensorT<S>>> named_parameters() {
        std::vector<std::pair<std::string, TensorT<S>>> out;
        visit_parameters([&](const std::string& name, TensorT<S>& t) { out.emplace_back(name, t); });
        return out;
    }

private:
    EncoderT<S> encoder_;
    std::vector<LitT<S>> branches_;
    CascadeConfig ccfg_;
};

using Clit = ClitT<float>;

}  // namespace clit
