#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoedit/linalg.hpp"

namespace autoedit {

// One synthetic editing episode. The source/edit prompts of the real system
// are represented by their pull-target vectors.
struct EditTask {
    Vec i_src;       // source latent
    Vec c_edit;      // in-mask edit target
    Vec drift;       // off-target field the edit prompt leaks toward
    Vec mask;        // {0,1}^D, 1 = edit region
    double leak_rho = 0.0;      // fraction of pull applied outside the mask
    double pull_kappa = 0.2;    // base pull rate
    double gate_damp = 0.7;     // in-mask damping while the gate is on
    double gate_suppress = 0.0; // out-of-mask leak multiplier while the gate is on
    Vec eps_star;    // fixed episode inversion noise
    std::int64_t seed = 0;

    int dim() const { return static_cast<int>(i_src.size()); }
};

void validate_task(const EditTask& task);

// Edit-branch pull target: c_edit inside the mask, drift outside.
Vec edit_target_vector(const EditTask& task);

// Sampling ranges for the task generator; [lo, hi] pairs.
struct GenConfig {
    int D = 16;
    double mask_frac_lo = 0.25, mask_frac_hi = 0.5;
    double src_lo = -1.0, src_hi = 1.0;
    double edit_lo = -1.0, edit_hi = 1.0;
    double drift_delta_lo = -1.0, drift_delta_hi = 1.0;
    double leak_lo = 0.3, leak_hi = 0.7;
    double kappa_lo = 0.27, kappa_hi = 0.38;
    double gate_damp_lo = 0.7, gate_damp_hi = 0.7;
    double gate_suppress_lo = 0.0, gate_suppress_hi = 0.0;
    bool global_mask = false;  // all-ones mask (global editing mode)
};

void validate_gen_config(const GenConfig& cfg);

// Deterministic function of (cfg, seed).
EditTask generate_task(const GenConfig& cfg, std::uint64_t seed);

// Line-delimited task files: a header record then one record per task.
// Floats round-trip exactly.
void write_task_file(const std::string& path, const std::vector<EditTask>& tasks,
                     const std::string& config_hash, std::uint64_t seed);

struct TaskFile {
    std::vector<EditTask> tasks;
    std::string config_hash;
    std::uint64_t seed = 0;
};

TaskFile read_task_file(const std::string& path);

}  // namespace autoedit
