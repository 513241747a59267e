#include "clit/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace clit {

namespace {

void write_bytes(std::ofstream& out, const void* data, size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_le(std::ofstream& out, T v) {
    // Serialized layout is little-endian; this host is.
    static_assert(std::endian::native == std::endian::little, "big-endian hosts need byte swaps");
    write_bytes(out, &v, sizeof(T));
}

void read_bytes(std::ifstream& in, void* data, size_t n, const std::string& what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    check(static_cast<size_t>(in.gcount()) == n, "checkpoint: truncated file while reading " + what);
}

template <typename T>
T read_le(std::ifstream& in, const std::string& what) {
    T v{};
    read_bytes(in, &v, sizeof(T), what);
    return v;
}

template <typename S>
void save_impl(const std::string& path, const KeyValueMap& config,
               const std::vector<std::pair<std::string, TensorT<S>>>& tensors) {
    std::ofstream out(path, std::ios::binary);
    check(out.good(), "checkpoint: cannot write " + path);
    write_bytes(out, kCheckpointMagic, 8);
    write_le<uint32_t>(out, kCheckpointVersion);
    const std::string cfg = config.serialize();
    write_le<uint64_t>(out, cfg.size());
    write_bytes(out, cfg.data(), cfg.size());
    write_le<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        write_le<uint32_t>(out, static_cast<uint32_t>(name.size()));
        write_bytes(out, name.data(), name.size());
        write_le<uint8_t>(out, sizeof(S) == 4 ? 0 : 1);
        write_le<uint32_t>(out, static_cast<uint32_t>(t.rank()));
        for (int64_t d = 0; d < t.rank(); ++d) write_le<uint64_t>(out, static_cast<uint64_t>(t.size(d)));
        write_bytes(out, t.ptr(), sizeof(S) * static_cast<size_t>(t.numel()));
    }
    check(out.good(), "checkpoint: write failed for " + path);
}

}  // namespace

void save_checkpoint(const std::string& path, const KeyValueMap& config,
                     const std::vector<std::pair<std::string, Tensor>>& tensors) {
    save_impl(path, config, tensors);
}

void save_checkpoint64(const std::string& path, const KeyValueMap& config,
                       const std::vector<std::pair<std::string, Tensor64>>& tensors) {
    save_impl(path, config, tensors);
}

RawCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), "checkpoint: cannot open " + path);
    char magic[8];
    read_bytes(in, magic, 8, "magic");
    check(std::memcmp(magic, kCheckpointMagic, 8) == 0, "checkpoint: " + path + " has a bad magic header");
    const uint32_t version = read_le<uint32_t>(in, "version");
    check(version == kCheckpointVersion,
          "checkpoint: unsupported format version " + std::to_string(version) + " (expected " +
              std::to_string(kCheckpointVersion) + ")");
    const uint64_t cfg_len = read_le<uint64_t>(in, "config length");
    std::string cfg(cfg_len, '\0');
    read_bytes(in, cfg.data(), cfg_len, "config block");

    RawCheckpoint ck;
    ck.config = KeyValueMap::parse(cfg);
    const uint32_t count = read_le<uint32_t>(in, "tensor count");
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_le<uint32_t>(in, "tensor name length");
        std::string name(name_len, '\0');
        read_bytes(in, name.data(), name_len, "tensor name");
        const uint8_t dtype = read_le<uint8_t>(in, "dtype tag");
        check(dtype <= 1, "checkpoint: unknown dtype tag " + std::to_string(dtype));
        const uint32_t rank = read_le<uint32_t>(in, "rank");
        Shape shape(rank);
        int64_t n = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<int64_t>(read_le<uint64_t>(in, "dims"));
            n *= shape[d];
        }
        Tensor64 t(shape);
        if (dtype == 0) {
            std::vector<float> buf(static_cast<size_t>(n));
            read_bytes(in, buf.data(), sizeof(float) * buf.size(), "payload of " + name);
            for (int64_t j = 0; j < n; ++j) t.data()[j] = static_cast<double>(buf[static_cast<size_t>(j)]);
        } else {
            read_bytes(in, t.ptr(), sizeof(double) * static_cast<size_t>(n), "payload of " + name);
        }
        ck.tensors.emplace_back(std::move(name), std::move(t));
        ck.dtypes.push_back(dtype);
    }
    return ck;
}

KeyValueMap model_config_to_kv(const EncoderConfig& e, const std::vector<LitConfig>& lits,
                               const CascadeConfig& c) {
    KeyValueMap kv;
    kv.set_int("encoder.channels", e.channels);
    kv.set_int("encoder.n_resblocks", e.n_resblocks);
    kv.set_int("encoder.kernel", e.kernel);
    kv.set_double("encoder.res_scale", e.res_scale);
    kv.set_list("encoder.rgb_mean", {e.rgb_mean[0], e.rgb_mean[1], e.rgb_mean[2]});
    kv.set_int("cascade.branches", c.branches);
    kv.set_list("cascade.factors", c.factors);
    kv.set_double("cascade.lambda", c.lambda);
    for (size_t i = 0; i < lits.size(); ++i) {
        const std::string p = "branch" + std::to_string(i) + ".";
        const LitConfig& l = lits[i];
        kv.set_int(p + "channels", l.channels);
        kv.set_int(p + "heads", l.heads);
        kv.set_int(p + "freq_bands", l.freq_bands);
        kv.set_int(p + "grid_h", l.grid_h);
        kv.set_int(p + "grid_w", l.grid_w);
        kv.set_int(p + "decoder_depth", l.decoder_depth);
        kv.set_int(p + "decoder_hidden", l.decoder_hidden);
        kv.set_bool(p + "use_cell", l.use_cell);
        kv.set_bool(p + "use_freq_bias", l.use_freq_bias);
        kv.set_bool(p + "local_ensemble", l.local_ensemble);
    }
    return kv;
}

void model_config_from_kv(const KeyValueMap& kv, EncoderConfig& e, std::vector<LitConfig>& lits,
                          CascadeConfig& c) {
    e.channels = kv.get_int("encoder.channels");
    e.n_resblocks = kv.get_int("encoder.n_resblocks");
    e.kernel = kv.get_int_or("encoder.kernel", 3);
    e.res_scale = kv.get_double_or("encoder.res_scale", 1.0);
    auto mean = kv.get_list_or("encoder.rgb_mean", {0.0, 0.0, 0.0});
    check(mean.size() == 3, "checkpoint: encoder.rgb_mean must have 3 entries");
    e.rgb_mean = {mean[0], mean[1], mean[2]};
    c.branches = kv.get_int("cascade.branches");
    c.factors = kv.get_list("cascade.factors");
    c.lambda = kv.get_double("cascade.lambda");
    lits.clear();
    for (int64_t i = 0; i < c.branches; ++i) {
        const std::string p = "branch" + std::to_string(i) + ".";
        LitConfig l;
        l.channels = kv.get_int(p + "channels");
        l.heads = kv.get_int(p + "heads");
        l.freq_bands = kv.get_int(p + "freq_bands");
        l.grid_h = kv.get_int(p + "grid_h");
        l.grid_w = kv.get_int(p + "grid_w");
        l.decoder_depth = kv.get_int(p + "decoder_depth");
        l.decoder_hidden = kv.get_int(p + "decoder_hidden");
        l.use_cell = kv.get_bool_or(p + "use_cell", true);
        l.use_freq_bias = kv.get_bool_or(p + "use_freq_bias", true);
        l.local_ensemble = kv.get_bool_or(p + "local_ensemble", false);
        lits.push_back(l);
    }
}

template <typename S>
void save_model(const std::string& path, ClitT<S>& model, const KeyValueMap& extra) {
    std::vector<LitConfig> lits;
    for (auto& b : model.branches()) lits.push_back(b.config());
    KeyValueMap kv = model_config_to_kv(model.encoder().config(), lits, model.config());
    for (const auto& [k, v] : extra.entries()) kv.set(k, v);
    std::vector<std::pair<std::string, TensorT<S>>> tensors = model.named_parameters();
    save_impl(path, kv, tensors);
}

template <typename S>
ClitT<S> load_model(const std::string& path, KeyValueMap* config_out) {
    RawCheckpoint ck = load_checkpoint(path);
    EncoderConfig e;
    std::vector<LitConfig> lits;
    CascadeConfig c;
    model_config_from_kv(ck.config, e, lits, c);
    check(!lits.empty(), "checkpoint: no branch configs");
    for (size_t i = 1; i < lits.size(); ++i)
        check(lits[i].channels == lits[0].channels, "checkpoint: branch channel mismatch");

    Rng rng(0);  // throwaway init, overwritten below
    ClitT<S> model(e, lits[0], c, rng);
    for (size_t i = 1; i < lits.size(); ++i) {
        auto& lit = model.branches()[i];
        lit = LitT<S>(lits[i], rng);
    }

    size_t loaded = 0;
    model.visit_parameters([&](const std::string& name, TensorT<S>& t) {
        auto it = std::find_if(ck.tensors.begin(), ck.tensors.end(),
                               [&](const auto& p) { return p.first == name; });
        check(it != ck.tensors.end(), "checkpoint: missing tensor `" + name + "`");
        check(it->second.shape() == t.shape(),
              "checkpoint: tensor `" + name + "` has shape " + shape_str(it->second.shape()) +
                  ", model expects " + shape_str(t.shape()));
        for (int64_t j = 0; j < t.numel(); ++j) t.data()[j] = static_cast<S>(it->second.data()[j]);
        ++loaded;
    });
    check(loaded == ck.tensors.size(), "checkpoint: file contains " +
                                           std::to_string(ck.tensors.size()) +
                                           " tensors, model consumed " + std::to_string(loaded));
    if (config_out) *config_out = ck.config;
    return model;
}

template void save_model<float>(const std::string&, ClitT<float>&, const KeyValueMap&);
template void save_model<double>(const std::string&, ClitT<double>&, const KeyValueMap&);
template ClitT<float> load_model<float>(const std::string&, KeyValueMap*);
template ClitT<double> load_model<double>(const std::string&, KeyValueMap*);

uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), "file_hash: cannot open " + path);
    uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<uint8_t>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace clit
