#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoedit/hyperspace.hpp"
#include "autoedit/reward.hpp"
#include "autoedit/task.hpp"
#include "autoedit/trainer.hpp"

namespace autoedit {

// Whole-experiment configuration, read from a sectioned key-value file.
// config_hash covers the structural sections ([schedule], [generator],
// [head ...]) that task files and checkpoints depend on, so reward or
// trainer coefficient sweeps can reuse them.
struct ExperimentConfig {
    int T = 10;
    GenConfig gen;
    HyperSpace space;
    RewardConfig reward;
    double judge_threshold = 0.1;
    Phase1Config phase1;
    PpoConfig ppo;
    std::vector<int> trial_counts = {1, 2, 3};
    std::uint64_t master_seed = 1;

    std::string config_hash;  // hex FNV-1a of the canonical structural text
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// The environment variable AUTOEDIT_SEED overrides [run] master_seed.
std::uint64_t effective_master_seed(const ExperimentConfig& cfg);

std::string default_config_text();

}  // namespace autoedit
