#pragma once

#include <cstdint>
#include <string>

#include "ram/config.hpp"
#include "ram/core_ram.hpp"

namespace ram {

struct CheckpointMeta {
    std::uint64_t master_seed = 0;
    std::uint64_t epoch_counter = 0; // completed training epochs
};

struct LoadedCheckpoint {
    RamModel model;
    RunConfig config;
    CheckpointMeta meta;
};

// Binary container: magic "RAMCKPT1", format version, meta, the canonical
// config text, then every named parameter as (name, shape, little-endian
// float64 payload). Round-trips are bit-exact; unknown versions and any
// name/shape mismatch are rejected.
void save_checkpoint(const std::string& path, const RamModel& model,
                     const RunConfig& config, const CheckpointMeta& meta);

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace ram
