#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "autoedit/hyperspace.hpp"
#include "autoedit/nets.hpp"

namespace autoedit {

// Versioned structured-text snapshot of everything needed to resume or
// evaluate: space, net shapes, every weight matrix. Floats round-trip exact.
struct Checkpoint {
    int phase = 1;  // 1 after pretraining, 2 after PPO
    std::string config_hash;
    std::uint64_t seed = 0;
    HyperSpace space;
    PolicyParams policy;
    std::optional<ValueParams> value;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace autoedit
