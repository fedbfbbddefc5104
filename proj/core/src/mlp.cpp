#include "posthoc/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "posthoc/errors.hpp"
#include "posthoc/metrics.hpp"
#include "posthoc/rng.hpp"

namespace posthoc {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;

struct LayerView {
    ConstMap w;  // out x in
    VecMap b;    // out
};

std::vector<LayerView> layer_views(const CheckpointTensors& ckpt) {
    std::vector<LayerView> layers;
    for (std::size_t l = 1;; ++l) {
        const TensorEntry* w = ckpt.find("w" + std::to_string(l));
        const TensorEntry* b = ckpt.find("b" + std::to_string(l));
        if (!w && !b) break;
        if (!w || !b)
            throw ValidationError("checkpoint layer " + std::to_string(l) + " missing w or b");
        if (w->shape.size() != 2 || b->shape.size() != 1 || b->shape[0] != w->shape[0])
            throw ValidationError("checkpoint layer " + std::to_string(l) + " has bad shapes");
        layers.push_back({ConstMap(w->data.data(), w->shape[0], w->shape[1]),
                          VecMap(b->data.data(), b->shape[0])});
    }
    if (layers.empty()) throw ValidationError("checkpoint has no w1/b1 layer");
    for (std::size_t l = 1; l < layers.size(); ++l)
        if (layers[l].w.cols() != layers[l - 1].w.rows())
            throw ValidationError("checkpoint layer widths do not chain");
    return layers;
}

}  // namespace

void MlpConfig::validate() const {
    if (depth < 2) throw ValidationError("depth must be >= 2");
    if (hidden < 1) throw ValidationError("hidden must be >= 1");
    if (classes < 2) throw ValidationError("classes must be >= 2");
    if (!(subsample > 0.0 && subsample <= 1.0))
        throw ValidationError("subsample must lie in (0, 1]");
    if (epochs < 1 || batch < 1) throw ValidationError("epochs and batch must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("bad learning rate");
    if (!(ckpt_interval > 0.0)) throw ValidationError("checkpoint interval must be > 0");
}

CheckpointTensors init_mlp(const MlpConfig& cfg, std::uint64_t seed, int run_id) {
    cfg.validate();
    Rng rng = Rng::from_path(seed, {static_cast<std::uint64_t>(run_id)}).derive("init");
    CheckpointTensors ckpt;
    int fan_in = 2;
    for (int l = 1; l <= cfg.depth; ++l) {
        const int fan_out = l == cfg.depth ? cfg.classes : cfg.hidden;
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        TensorEntry w;
        w.name = "w" + std::to_string(l);
        w.shape = {static_cast<std::uint32_t>(fan_out), static_cast<std::uint32_t>(fan_in)};
        w.data.resize(static_cast<std::size_t>(fan_out) * fan_in);
        for (double& v : w.data) v = rng.next_uniform(-limit, limit);
        TensorEntry b;
        b.name = "b" + std::to_string(l);
        b.shape = {static_cast<std::uint32_t>(fan_out)};
        b.data.assign(static_cast<std::size_t>(fan_out), 0.0);
        ckpt.tensors.push_back(std::move(w));
        ckpt.tensors.push_back(std::move(b));
        fan_in = fan_out;
    }
    return ckpt;
}

std::vector<double> mlp_forward(const CheckpointTensors& ckpt,
                                std::span<const double> inputs, std::size_t rows) {
    auto layers = layer_views(ckpt);
    if (rows == 0 || inputs.size() != rows * static_cast<std::size_t>(layers[0].w.cols()))
        throw ValidationError("input buffer does not match rows x fan_in");
    RowMat h = ConstMap(inputs.data(), static_cast<Eigen::Index>(rows), layers[0].w.cols());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        RowMat z = h * layers[l].w.transpose();
        z.rowwise() += layers[l].b.transpose();
        if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
        h = std::move(z);
    }
    return {h.data(), h.data() + h.size()};
}

namespace {

EvalTable make_table(const CheckpointTensors& ckpt, const SpiralsDataset& d,
                     std::size_t begin, std::size_t end) {
    EvalTable t;
    t.n = end - begin;
    t.logits = mlp_forward(ckpt, std::span<const double>(d.points).subspan(2 * begin, 2 * (end - begin)), t.n);
    t.c = t.logits.size() / t.n;
    t.labels.assign(d.labels.begin() + begin, d.labels.begin() + end);
    return t;
}

struct SplitLayout {
    std::size_t n_train, val_begin, test_begin, total;
};

SplitLayout split_layout(const SpiralsDataset& data, const MlpConfig& cfg) {
    if (data.n <= cfg.val_size + cfg.test_size)
        throw ValidationError("dataset too small for the configured val/test sizes");
    SplitLayout s;
    s.total = data.n;
    s.n_train = data.n - cfg.val_size - cfg.test_size;
    s.val_begin = s.n_train;
    s.test_begin = s.n_train + cfg.val_size;
    return s;
}

}  // namespace

Evaluator make_mlp_evaluator(const SpiralsDataset& data, const MlpConfig& cfg) {
    SplitLayout lay = split_layout(data, cfg);
    return [data, lay](const CheckpointTensors& ckpt) {
        SplitTables out;
        out.emplace("train", make_table(ckpt, data, 0, lay.n_train));
        out.emplace("val", make_table(ckpt, data, lay.val_begin, lay.test_begin));
        out.emplace("test", make_table(ckpt, data, lay.test_begin, lay.total));
        return out;
    };
}

TrainRunOutput mlp_train(const SpiralsDataset& data, const MlpConfig& cfg, int run_id) {
    cfg.validate();
    data.validate();
    SplitLayout lay = split_layout(data, cfg);

    // The run's training view: a subsample of the train rows.
    Rng sub_rng = Rng::from_path(cfg.seed, {static_cast<std::uint64_t>(run_id)}).derive("subsample");
    const std::size_t n_sub = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.subsample * static_cast<double>(lay.n_train))));
    std::vector<std::uint32_t> rows(lay.n_train);
    std::iota(rows.begin(), rows.end(), 0u);
    for (std::size_t i = 0; i < n_sub; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(sub_rng.next_below(lay.n_train - i));
        std::swap(rows[i], rows[j]);
    }
    rows.resize(n_sub);
    std::sort(rows.begin(), rows.end());

    RowMat X(n_sub, 2);
    std::vector<std::uint32_t> y(n_sub);
    for (std::size_t i = 0; i < n_sub; ++i) {
        X(i, 0) = data.points[2 * rows[i]];
        X(i, 1) = data.points[2 * rows[i] + 1];
        y[i] = data.labels[rows[i]];
    }

    CheckpointTensors ckpt = init_mlp(cfg, cfg.seed, run_id);
    const int L = cfg.depth;
    std::vector<Eigen::Map<RowMat>> W;
    std::vector<Eigen::Map<Eigen::VectorXd>> B;
    for (int l = 1; l <= L; ++l) {
        TensorEntry& w = ckpt.tensors[2 * (l - 1)];
        TensorEntry& b = ckpt.tensors[2 * (l - 1) + 1];
        W.emplace_back(w.data.data(), w.shape[0], w.shape[1]);
        B.emplace_back(b.data.data(), b.shape[0]);
    }

    const std::size_t steps_per_epoch = (n_sub + cfg.batch - 1) / cfg.batch;
    const long total_steps = static_cast<long>(cfg.epochs) * static_cast<long>(steps_per_epoch);

    // Checkpoint after the step closest from above to k * interval epochs.
    std::vector<long> targets;
    std::vector<double> target_indices;
    for (std::size_t k = 1;; ++k) {
        const long step = static_cast<long>(
            std::llround(std::ceil(static_cast<double>(k) * cfg.ckpt_interval *
                                   static_cast<double>(steps_per_epoch) - 1e-9)));
        if (step > total_steps) break;
        if (!targets.empty() && step == targets.back()) continue;  // interval below step size
        targets.push_back(step);
        target_indices.push_back(static_cast<double>(step) / static_cast<double>(steps_per_epoch));
    }
    if (targets.empty())
        throw ValidationError("checkpoint interval exceeds the training horizon");

    Rng shuffle_rng = Rng::from_path(cfg.seed, {static_cast<std::uint64_t>(run_id)}).derive("shuffle");
    std::vector<std::uint32_t> order(n_sub);
    std::iota(order.begin(), order.end(), 0u);

    TrainRunOutput out;
    out.run = run_id;
    out.subsample_rows = rows;

    std::vector<RowMat> acts(L + 1);
    std::vector<RowMat> zs(L);
    std::size_t next_ckpt = 0;
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs && next_ckpt < targets.size(); ++epoch) {
        for (std::size_t i = n_sub; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
        for (std::size_t start = 0; start < n_sub; start += cfg.batch) {
            const std::size_t bs = std::min<std::size_t>(cfg.batch, n_sub - start);
            RowMat xb(bs, 2);
            for (std::size_t i = 0; i < bs; ++i) xb.row(i) = X.row(order[start + i]);

            acts[0] = std::move(xb);
            for (int l = 0; l < L; ++l) {
                zs[l].noalias() = acts[l] * W[l].transpose();
                zs[l].rowwise() += B[l].transpose();
                if (l + 1 < L)
                    acts[l + 1] = zs[l].cwiseMax(0.0);
                else
                    acts[l + 1] = zs[l];
            }
            RowMat& logits = acts[L];
            if (!logits.allFinite())
                throw TrainingError("training diverged: non-finite logits at step " +
                                        std::to_string(step + 1),
                                    step + 1);

            // d = (softmax - onehot) / batch
            Eigen::VectorXd rowmax = logits.rowwise().maxCoeff();
            RowMat d = (logits.colwise() - rowmax).array().exp().matrix();
            Eigen::VectorXd rowsum = d.rowwise().sum();
            d.array().colwise() /= rowsum.array();
            for (std::size_t i = 0; i < bs; ++i)
                d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(y[order[start + i]])) -= 1.0;
            d /= static_cast<double>(bs);

            for (int l = L - 1; l >= 0; --l) {
                RowMat gw = d.transpose() * acts[l];
                Eigen::VectorXd gb = d.colwise().sum();
                if (l > 0) {
                    RowMat nd = d * W[l];
                    nd.array() *= (zs[l - 1].array() > 0.0).cast<double>();
                    d = std::move(nd);
                }
                W[l] -= cfg.lr * gw;
                B[l] -= cfg.lr * gb;
            }

            ++step;
            while (next_ckpt < targets.size() && step == targets[next_ckpt]) {
                out.indices.push_back(target_indices[next_ckpt]);
                out.checkpoints.push_back(ckpt);
                SplitTables tables;
                tables.emplace("train", make_table(ckpt, data, 0, lay.n_train));
                tables.emplace("val", make_table(ckpt, data, lay.val_begin, lay.test_begin));
                tables.emplace("test", make_table(ckpt, data, lay.test_begin, lay.total));
                out.train_preds.push_back(predictions(tables.at("train")));
                out.tables.push_back(std::move(tables));
                ++next_ckpt;
            }
            if (next_ckpt >= targets.size()) break;
        }
    }
    return out;
}

}  // namespace posthoc
