#pragma once

#include <cstdint>
#include <string>

#include "ram/model_config.hpp"
#include "ram/synthcxr.hpp"

namespace ram {

// Every runtime knob, loaded from a flat "key = value" text file ('#' starts
// a comment). Unknown or malformed lines are rejected with their line number
// before anything else runs. serialize_config() round-trips the struct and is
// what checkpoints embed.
struct RunConfig {
    // model architecture
    int image_side = 64;
    int glimpse_size = 12;
    int glimpse_scale = 2;
    double pad_value = 0.0;
    int enc1_channels = 8;
    int enc2_channels = 16;
    int kernel_size = 3;
    int loc_feature_dim = 32;
    int glimpse_feature_dim = 128;
    int hidden_dim = 128;
    int num_classes = 2;
    int n_glimpses = 6;
    double sigma = 0.1;

    // training
    int epochs = 200;
    int episodes_per_epoch = 0; // 0 = one full pass over the training set
    int batch_size = 32;
    double lr = 0.01;
    double locator_lr = 0.0;  // 0 = use lr
    double baseline_lr = 0.0; // 0 = use lr
    double momentum = 0.9;
    double baseline_weight = 1.0; // weight of the reward-regression term
    int chunk_epochs = 500;       // validation/heatmap cadence
    int validations_per_chunk = 100;
    int heatmap_cell = 25; // histogram cell side in pixels
    double val_fraction = 0.2;
    std::string val_mode = "sampled"; // sampled | greedy (chunk validation)

    // encoder pretraining
    int pretrain_epochs = 30;
    double pretrain_lr = 0.01;
    int pretrain_patches = 2000;
    int pretrain_batch = 16;

    // synthetic data
    std::string task = "cardio";
    double noise = 0.02;
    int clutter = 6;
    double ctr_threshold = 0.5;
    double ctr_margin = 0.04;

    std::uint64_t seed = 1;

    ModelConfig model_config() const;
    SynthConfig synth_config() const;
    void validate() const;
};

// Parse failures carry the 1-based line number of the offending line.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

// Canonical form: every key once, fixed order, full double precision.
std::string serialize_config(const RunConfig& cfg);

void save_config_file(const std::string& path, const RunConfig& cfg);

} // namespace ram
