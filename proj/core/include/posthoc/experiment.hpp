#pragma once

#include "posthoc/mlp.hpp"
#include "posthoc/run_store.hpp"
#include "posthoc/spirals.hpp"

namespace posthoc {

/// Builds the train+val+test package for the synthetic experiment: three
/// independently generated spiral sets (seed paths "train"/"val"/"test" off
/// the master seed) concatenated in that order, so the train slice carries
/// exactly round(noise_rate * n_train) flips and all runs share the same
/// held-out sets.
SpiralsDataset gen_experiment_data(std::size_t n_train, std::size_t n_val, std::size_t n_test,
                                   double noise_rate, std::uint64_t master_seed);

/// Trains n_models runs with distinct derived seeds and subsamples and
/// collects every checkpoint and eval table into a RunStore. Runs execute in
/// parallel (POSTHOC_THREADS workers); results are independent of
/// scheduling. cfg.seed is the master seed.
RunStore run_ensemble_experiment(int n_models, const SpiralsDataset& data, const MlpConfig& cfg);

}  // namespace posthoc
