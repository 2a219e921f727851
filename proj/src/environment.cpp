#include "autoedit/environment.hpp"

#include <memory>
#include <stdexcept>

#include "autoedit/errors.hpp"

namespace autoedit {

LatentState invert(const EditTask& task, const NoiseSchedule& sched) {
    validate_task(task);
    return {forward_sample(task.i_src, sched.T, task.eps_star, sched), sched.T};
}

PullTarget edit_pull_target(const EditTask& task, const StepSemantics& sem) {
    const int d = task.dim();
    PullTarget out;
    out.target.resize(d);
    out.weight_mask.resize(d);

    if (!sem.edit_prompt) {
        // source prompt restores toward i_src everywhere; gate and scale do
        // not reshape the weights
        out.target = task.i_src;
        out.weight_mask.assign(d, 1.0);
        return out;
    }

    for (int i = 0; i < d; ++i) {
        const bool inside = task.mask[i] == 1.0;
        out.target[i] = inside ? task.c_edit[i] : task.drift[i];
        double w = inside ? 1.0 : task.leak_rho;
        if (sem.gate_on) w *= inside ? task.gate_damp : task.gate_suppress;
        out.weight_mask[i] = w;
    }
    return out;
}

PullTarget edit_pull_target(const EditTask& task, const HyperSpace& space,
                            const StepAction& action) {
    return edit_pull_target(task, interpret(space, action));
}

LatentState denoise_step(const LatentState& x, const EditTask& task,
                         const HyperSpace& space, const StepAction& action,
                         const NoiseSchedule& sched, std::int64_t* nfe) {
    if (x.t < 1) throw std::invalid_argument("denoise_step needs t >= 1");
    const StepSemantics sem = interpret(space, action);
    const PullTarget pull = edit_pull_target(task, sem);

    Vec x0 = implied_x0(x.x, x.t, task.eps_star, sched);
    const double rate = task.pull_kappa * sem.scale;
    for (std::size_t i = 0; i < x0.size(); ++i)
        x0[i] += rate * pull.weight_mask[i] * (pull.target[i] - x0[i]);

    if (nfe) ++*nfe;
    return {ddim_step(x0, x.t, task.eps_star, sched), x.t - 1};
}

ActionProvider sequence_provider(std::vector<StepAction> actions) {
    auto seq = std::make_shared<std::vector<StepAction>>(std::move(actions));
    return [seq](const LatentState&, int k) {
        if (k < 0 || k >= static_cast<int>(seq->size()))
            throw DataError("action provider exhausted mid-episode");
        return (*seq)[k];
    };
}

EpisodeRecord rollout(const EditTask& task, const HyperSpace& space,
                      const NoiseSchedule& sched, const ActionProvider& provider) {
    EpisodeRecord record;
    record.states.reserve(sched.T);

    LatentState state = invert(task, sched);
    for (int k = 0; k < sched.T; ++k) {
        record.states.push_back(state);
        const StepAction action = provider(state, k);
        state = denoise_step(state, task, space, action, sched, &record.nfe_count);
    }
    record.final_x0 = std::move(state.x);
    return record;
}

}  // namespace autoedit
