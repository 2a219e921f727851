#pragma once

#include <string>
#include <vector>

#include "autoedit/rng.hpp"

namespace autoedit {

enum class HeadKind { PromptSwitch, BinaryGate, DiscreteScalar };

const char* head_kind_name(HeadKind kind);
HeadKind head_kind_from_name(const std::string& name);

struct HeadSpec {
    std::string name;
    HeadKind kind = HeadKind::DiscreteScalar;
    std::vector<double> values;  // cardinality N_k, ordered
    int default_index = 0;
};

// Declarative K-head discrete action space.
struct HyperSpace {
    std::vector<HeadSpec> heads;

    int num_heads() const { return static_cast<int>(heads.size()); }
    // first head of the given kind, -1 if absent
    int find_head(HeadKind kind) const;
};

// throws std::invalid_argument when cardinalities or defaults are off
void validate_space(const HyperSpace& space);

bool spaces_equal(const HyperSpace& a, const HyperSpace& b);

// prompt {src, edit} + gate {off, on} + the P2P scalar set, defaults:
// prompt=edit, gate=off, scale=1.0
HyperSpace default_space();

// One timestep's joint choice over all K heads.
struct StepAction {
    std::vector<int> indices;
};

bool action_valid(const HyperSpace& space, const StepAction& action);

// What one action means to the denoiser, resolved against the space.
struct StepSemantics {
    bool edit_prompt = false;  // false => source prompt
    bool gate_on = false;
    double scale = 1.0;
};

StepSemantics interpret(const HyperSpace& space, const StepAction& action);

// A whole-trajectory schedule compressed to three knobs.
struct GlobalConfig {
    int r = 0;               // inversion step: edit prompt for t <= r
    double gate_ratio = 0.0; // gate on for the first floor(ratio*T) rollout steps
    int scale_index = 0;
};

// Expand to per-step actions in rollout order t = T..1.
std::vector<StepAction> global_to_perstep(const GlobalConfig& cfg, int T,
                                          const HyperSpace& space);

// Largest t whose prompt head selects the edit prompt; 0 when none.
// Actions are in rollout order, so t = T - k for index k.
int perstep_to_inversion_step(const HyperSpace& space,
                              const std::vector<StepAction>& actions);

// Phase-1 prior ranges; fractions of T for the inversion step.
struct PriorConfig {
    double r_lo_frac = 0.35;
    double r_hi_frac = 0.95;
    double gate_lo = 0.2;
    double gate_hi = 0.8;
};

// integer support of the r prior: [ceil(lo*T), floor(hi*T)] clamped to 0..T
std::pair<int, int> prior_r_support(const PriorConfig& prior, int T);

GlobalConfig sample_prior(const HyperSpace& space, int T, const PriorConfig& prior,
                          Rng& rng);

}  // namespace autoedit
