#include "posthoc/run_store.hpp"

#include <set>

#include "posthoc/errors.hpp"

namespace posthoc {

namespace {

std::string slot_name(int run, double index) {
    return "run " + std::to_string(run) + " index " + std::to_string(index);
}

}  // namespace

void RunStore::add_checkpoint(int run, double index, const CheckpointTensors& w) {
    if (run < 1) throw ValidationError("run id must be >= 1");
    if (!(index > 0)) throw ValidationError("checkpoint index must be > 0");
    w.validate();
    auto& entry = runs_[run][index];
    if (entry.weights) throw ValidationError("duplicate checkpoint at " + slot_name(run, index));
    std::vector<StoredTensor> stored;
    stored.reserve(w.tensors.size());
    for (const auto& t : w.tensors) {
        StoredTensor s;
        s.name = t.name;
        s.shape = t.shape;
        s.data.assign(t.data.begin(), t.data.end());  // narrow to storage precision
        stored.push_back(std::move(s));
    }
    entry.weights = std::move(stored);
}

void RunStore::add_table(int run, double index, const std::string& split, EvalTable table) {
    if (run < 1) throw ValidationError("run id must be >= 1");
    if (!(index > 0)) throw ValidationError("checkpoint index must be > 0");
    table.validate();
    auto it = split_shape_.find(split);
    if (it == split_shape_.end()) {
        split_shape_[split] = {table.n, table.c};
    } else if (it->second != std::make_pair(table.n, table.c)) {
        throw ValidationError("split '" + split + "' shape mismatch at " + slot_name(run, index));
    }
    auto& entry = runs_[run][index];
    if (entry.tables.count(split))
        throw ValidationError("duplicate '" + split + "' table at " + slot_name(run, index));
    entry.tables.emplace(split, std::move(table));
}

std::vector<int> RunStore::runs() const {
    std::vector<int> out;
    out.reserve(runs_.size());
    for (const auto& [run, _] : runs_) out.push_back(run);
    return out;
}

std::vector<double> RunStore::indices(int run) const {
    auto it = runs_.find(run);
    if (it == runs_.end()) throw ValidationError("unknown run " + std::to_string(run));
    std::vector<double> out;
    out.reserve(it->second.size());
    for (const auto& [idx, _] : it->second) out.push_back(idx);
    return out;
}

std::vector<double> RunStore::common_index_prefix(std::span<const int> which) const {
    std::vector<int> ids(which.begin(), which.end());
    if (ids.empty()) ids = runs();
    if (ids.empty()) return {};
    std::vector<double> grid = indices(ids[0]);
    for (std::size_t r = 1; r < ids.size(); ++r) {
        std::vector<double> other = indices(ids[r]);
        std::size_t len = std::min(grid.size(), other.size());
        for (std::size_t i = 0; i < len; ++i) {
            if (grid[i] != other[i])
                throw ValidationError("index grids diverge at position " + std::to_string(i) +
                                      " between runs " + std::to_string(ids[0]) + " and " +
                                      std::to_string(ids[r]));
        }
        grid.resize(len);
    }
    return grid;
}

std::vector<std::string> RunStore::splits() const {
    std::vector<std::string> out;
    for (const auto& [s, _] : split_shape_) out.push_back(s);
    return out;
}

bool RunStore::has_run(int run) const { return runs_.count(run) != 0; }

const RunStore::Entry* RunStore::find_entry(int run, double index) const {
    auto it = runs_.find(run);
    if (it == runs_.end()) return nullptr;
    auto jt = it->second.find(index);
    if (jt == it->second.end()) return nullptr;
    return &jt->second;
}

bool RunStore::has_checkpoint(int run, double index) const {
    const Entry* e = find_entry(run, index);
    return e && e->weights;
}

CheckpointTensors RunStore::checkpoint(int run, double index) const {
    const Entry* e = find_entry(run, index);
    if (!e || !e->weights)
        throw ValidationError("missing checkpoint at " + slot_name(run, index));
    CheckpointTensors out;
    out.tensors.reserve(e->weights->size());
    for (const auto& s : *e->weights) {
        TensorEntry t;
        t.name = s.name;
        t.shape = s.shape;
        t.data.assign(s.data.begin(), s.data.end());  // widen to double
        out.tensors.push_back(std::move(t));
    }
    return out;
}

const EvalTable& RunStore::table(int run, double index, const std::string& split) const {
    const EvalTable* t = find_table(run, index, split);
    if (!t) throw ValidationError("missing '" + split + "' table at " + slot_name(run, index));
    return *t;
}

const EvalTable* RunStore::find_table(int run, double index, const std::string& split) const {
    const Entry* e = find_entry(run, index);
    if (!e) return nullptr;
    auto it = e->tables.find(split);
    return it == e->tables.end() ? nullptr : &it->second;
}

std::map<double, EvalTable> RunStore::split_tables(int run, const std::string& split) const {
    std::map<double, EvalTable> out;
    auto it = runs_.find(run);
    if (it == runs_.end()) throw ValidationError("unknown run " + std::to_string(run));
    for (const auto& [idx, entry] : it->second) {
        auto jt = entry.tables.find(split);
        if (jt != entry.tables.end()) out.emplace(idx, jt->second);
    }
    return out;
}

void RunStore::validate() const {
    if (runs_.empty()) throw ValidationError("store has no runs");
    for (const auto& [run, entries] : runs_) {
        for (const auto& [idx, entry] : entries) {
            if (!entry.tables.count("val"))
                throw ValidationError("missing 'val' table at " + slot_name(run, idx));
        }
    }
}

}  // namespace posthoc
