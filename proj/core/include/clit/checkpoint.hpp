#pragma once

#include <string>
#include <utility>
#include <vector>

#include "clit/cascade.hpp"
#include "clit/config.hpp"

namespace clit {

// Binary model archive, little-endian throughout:
//   magic "CLITCKPT" | u32 version | u64 config length | config bytes (the
//   key = value architecture block) | u32 tensor count | per tensor:
//   u32 name length | name | u8 dtype (0 = f32, 1 = f64) | u32 rank |
//   u64 dims[rank] | payload.
// Round trips are bit-exact for matching scalar types.
inline constexpr char kCheckpointMagic[8] = {'C', 'L', 'I', 'T', 'C', 'K', 'P', 'T'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct RawCheckpoint {
    KeyValueMap config;
    std::vector<std::pair<std::string, Tensor64>> tensors;  // values held in double
    std::vector<uint8_t> dtypes;                            // original dtype tag per tensor
};

void save_checkpoint(const std::string& path, const KeyValueMap& config,
                     const std::vector<std::pair<std::string, Tensor>>& tensors);
void save_checkpoint64(const std::string& path, const KeyValueMap& config,
                       const std::vector<std::pair<std::string, Tensor64>>& tensors);
RawCheckpoint load_checkpoint(const std::string& path);

// Model-level helpers: the architecture config is serialized alongside the
// parameters so a checkpoint is self-describing.
KeyValueMap model_config_to_kv(const EncoderConfig& e, const std::vector<LitConfig>& lits,
                               const CascadeConfig& c);
void model_config_from_kv(const KeyValueMap& kv, EncoderConfig& e, std::vector<LitConfig>& lits,
                          CascadeConfig& c);

template <typename S>
void save_model(const std::string& path, ClitT<S>& model, const KeyValueMap& extra = {});

template <typename S>
ClitT<S> load_model(const std::string& path, KeyValueMap* config_out = nullptr);

// 64-bit FNV-1a of a file's bytes; used to fingerprint checkpoints in reports.
uint64_t file_hash(const std::string& path);

}  // namespace clit
