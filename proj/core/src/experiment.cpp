#include "posthoc/experiment.hpp"

#include <mutex>

#include "posthoc/errors.hpp"
#include "posthoc/parallel.hpp"
#include "posthoc/rng.hpp"

namespace posthoc {

SpiralsDataset gen_experiment_data(std::size_t n_train, std::size_t n_val, std::size_t n_test,
                                   double noise_rate, std::uint64_t master_seed) {
    Rng root = Rng::from_path(master_seed, {});
    auto part_seed = [&](const char* tag) { return root.derive(tag).next_u64(); };
    return concat_spirals({
        gen_spirals(n_train, noise_rate, part_seed("train")),
        gen_spirals(n_val, noise_rate, part_seed("val")),
        gen_spirals(n_test, noise_rate, part_seed("test")),
    });
}

RunStore run_ensemble_experiment(int n_models, const SpiralsDataset& data, const MlpConfig& cfg) {
    if (n_models < 2) throw ValidationError("ensemble experiment needs at least 2 models");
    cfg.validate();

    RunStore store;
    std::mutex store_mutex;
    parallel_for(static_cast<std::size_t>(n_models), [&](std::size_t slot) {
        const int run_id = static_cast<int>(slot) + 1;
        TrainRunOutput out = mlp_train(data, cfg, run_id);
        std::lock_guard<std::mutex> lock(store_mutex);
        for (std::size_t k = 0; k < out.indices.size(); ++k) {
            store.add_checkpoint(run_id, out.indices[k], out.checkpoints[k]);
            for (auto& [split, table] : out.tables[k])
                store.add_table(run_id, out.indices[k], split, std::move(table));
        }
    });
    return store;
}

}  // namespace posthoc
