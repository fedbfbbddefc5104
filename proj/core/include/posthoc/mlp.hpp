#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posthoc/checkpoint.hpp"
#include "posthoc/spirals.hpp"
#include "posthoc/transforms.hpp"

namespace posthoc {

/// Fully connected ReLU classifier trained with plain mini-batch gradient
/// descent and explicit backpropagation. depth counts affine layers; all
/// hidden layers are `hidden` wide. The dataset handed to mlp_train is
/// train+val+test concatenated; the last val_size + test_size rows are held
/// out for evaluation.
struct MlpConfig {
    int depth = 4;
    int hidden = 512;
    int classes = 2;
    double lr = 0.05;
    int epochs = 1000;
    int batch = 64;
    double subsample = 0.5;        // fraction of the train rows each run sees
    double ckpt_interval = 10.0;   // epochs between checkpoints (fractions allowed)
    std::size_t val_size = 500;
    std::size_t test_size = 500;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Glorot-uniform weights (zero biases) with tensors named w1,b1,...,wd,bd;
/// weight shapes are [out, in] row-major.
CheckpointTensors init_mlp(const MlpConfig& cfg, std::uint64_t seed, int run_id);

/// Logits for row-major inputs (rows x 2). The layer chain is inferred from
/// the tensor schema, so any w1..wk/b1..bk checkpoint evaluates, including a
/// k=1 purely linear model.
std::vector<double> mlp_forward(const CheckpointTensors& ckpt,
                                std::span<const double> inputs, std::size_t rows);

/// Everything one training run produces: checkpoints, eval tables per split,
/// and argmax predictions on the full train set per checkpoint.
struct TrainRunOutput {
    int run = 1;
    std::vector<double> indices;
    std::vector<CheckpointTensors> checkpoints;
    std::vector<SplitTables> tables;
    std::vector<std::vector<std::uint32_t>> train_preds;
    std::vector<std::uint32_t> subsample_rows;
};

TrainRunOutput mlp_train(const SpiralsDataset& data, const MlpConfig& cfg, int run_id = 1);

/// Evaluator over this run's fixed splits, for SWA compositions.
Evaluator make_mlp_evaluator(const SpiralsDataset& data, const MlpConfig& cfg);

}  // namespace posthoc
