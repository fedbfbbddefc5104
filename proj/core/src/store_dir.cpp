#include "posthoc/store_dir.hpp"

#include <cstdio>
#include <cstring>
#include <set>

#include <json.hpp>

#include "posthoc/codec.hpp"
#include "posthoc/errors.hpp"
#include "posthoc/json_io.hpp"

namespace posthoc {

namespace fs = std::filesystem;

std::string format_index(double index) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", index);
    std::string s(buf);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
}

double parse_index(const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !(v > 0))
        throw FormatError("bad checkpoint index tag: " + text);
    return v;
}

void write_run_store(const RunStore& store, const fs::path& dir) {
    fs::create_directories(dir);
    for (int run : store.runs()) {
        const fs::path run_dir = dir / ("run-" + std::to_string(run));
        fs::create_directories(run_dir);
        std::set<std::string> used;
        for (double idx : store.indices(run)) {
            const std::string tag = format_index(idx);
            if (!used.insert(tag).second)
                throw ValidationError("indices collide at 3 decimal places: " + tag);
            if (store.has_checkpoint(run, idx))
                save_checkpoint(run_dir / ("ckpt-" + tag), store.checkpoint(run, idx));
            for (const std::string& split : store.splits())
                if (const EvalTable* t = store.find_table(run, idx, split))
                    save_eval_table(run_dir / (split + "-" + tag + ".phe"), *t);
        }
    }
}

RunStore read_run_store(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw FormatError("not a store directory: " + dir.string());
    RunStore store;
    bool any = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind("run-", 0) != 0) continue;
        const int run = std::atoi(name.c_str() + 4);
        if (run < 1) throw FormatError("bad run directory name: " + name);
        any = true;
        for (const auto& f : fs::directory_iterator(entry.path())) {
            const std::string fname = f.path().filename().string();
            if (f.path().extension() == ".json" && fname.rfind("ckpt-", 0) == 0) {
                const std::string tag = f.path().stem().string().substr(5);
                store.add_checkpoint(run, parse_index(tag),
                                     load_checkpoint(fs::path(f.path()).replace_extension()));
            } else if (f.path().extension() == ".phe") {
                const std::string stem = f.path().stem().string();
                const auto dash = stem.rfind('-');
                if (dash == std::string::npos)
                    throw FormatError("bad eval bundle name: " + fname);
                store.add_table(run, parse_index(stem.substr(dash + 1)), stem.substr(0, dash),
                                load_eval_table(f.path()));
            }
        }
    }
    if (!any) throw FormatError("no run-<j> directories under " + dir.string());
    return store;
}

namespace {

constexpr char kDatasetMagic[8] = {'P', 'H', 'S', 'Y', 'N', '0', '1', '\n'};

}  // namespace

void write_synth_sidecar(const fs::path& dir, const SynthSidecar& sidecar) {
    fs::create_directories(dir);
    nlohmann::json cfg;
    cfg["depth"] = sidecar.cfg.depth;
    cfg["hidden"] = sidecar.cfg.hidden;
    cfg["classes"] = sidecar.cfg.classes;
    cfg["lr"] = jnum(sidecar.cfg.lr);
    cfg["epochs"] = sidecar.cfg.epochs;
    cfg["batch"] = sidecar.cfg.batch;
    cfg["subsample"] = jnum(sidecar.cfg.subsample);
    cfg["ckpt_interval"] = jnum(sidecar.cfg.ckpt_interval);
    cfg["val_size"] = sidecar.cfg.val_size;
    cfg["test_size"] = sidecar.cfg.test_size;
    cfg["seed"] = sidecar.cfg.seed;
    nlohmann::json doc;
    doc["config"] = cfg;
    doc["n_models"] = sidecar.n_models;
    const std::string text = doc.dump(2) + "\n";
    std::vector<std::byte> bytes(text.size());
    std::memcpy(bytes.data(), text.data(), text.size());
    write_file(dir / "synth.json", bytes);

    // dataset.bin keeps the raw coordinates bit-exact (JSON would round).
    std::vector<std::byte> blob;
    auto push_raw = [&blob](const void* p, std::size_t len) {
        const auto* b = static_cast<const std::byte*>(p);
        blob.insert(blob.end(), b, b + len);
    };
    push_raw(kDatasetMagic, 8);
    const std::uint64_t n = sidecar.data.n;
    push_raw(&n, 8);
    push_raw(sidecar.data.points.data(), sidecar.data.points.size() * 8);
    push_raw(sidecar.data.labels.data(), sidecar.data.labels.size() * 4);
    push_raw(sidecar.data.clean_labels.data(), sidecar.data.clean_labels.size() * 4);
    for (bool f : sidecar.data.flip_mask) {
        const std::uint8_t v = f ? 1 : 0;
        push_raw(&v, 1);
    }
    write_file(dir / "dataset.bin", blob);
}

std::optional<SynthSidecar> read_synth_sidecar(const fs::path& dir) {
    if (!fs::exists(dir / "synth.json") || !fs::exists(dir / "dataset.bin")) return std::nullopt;
    SynthSidecar out;
    nlohmann::json doc;
    try {
        auto bytes = read_file(dir / "synth.json");
        doc = nlohmann::json::parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad synth.json: ") + e.what());
    }
    const auto& cfg = doc.at("config");
    out.cfg.depth = cfg.at("depth").get<int>();
    out.cfg.hidden = cfg.at("hidden").get<int>();
    out.cfg.classes = cfg.at("classes").get<int>();
    out.cfg.lr = cfg.at("lr").get<double>();
    out.cfg.epochs = cfg.at("epochs").get<int>();
    out.cfg.batch = cfg.at("batch").get<int>();
    out.cfg.subsample = cfg.at("subsample").get<double>();
    out.cfg.ckpt_interval = cfg.at("ckpt_interval").get<double>();
    out.cfg.val_size = cfg.at("val_size").get<std::size_t>();
    out.cfg.test_size = cfg.at("test_size").get<std::size_t>();
    out.cfg.seed = cfg.at("seed").get<std::uint64_t>();
    out.n_models = doc.at("n_models").get<int>();

    auto blob = read_file(dir / "dataset.bin");
    std::size_t pos = 0;
    auto pull = [&](void* p, std::size_t len) {
        if (pos + len > blob.size()) throw FormatError("dataset.bin truncated");
        std::memcpy(p, blob.data() + pos, len);
        pos += len;
    };
    char magic[8];
    pull(magic, 8);
    if (std::memcmp(magic, kDatasetMagic, 8) != 0) throw FormatError("bad dataset.bin magic");
    std::uint64_t n = 0;
    pull(&n, 8);
    out.data.n = n;
    out.data.points.resize(2 * n);
    pull(out.data.points.data(), 16 * n);
    out.data.labels.resize(n);
    pull(out.data.labels.data(), 4 * n);
    out.data.clean_labels.resize(n);
    pull(out.data.clean_labels.data(), 4 * n);
    out.data.flip_mask.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint8_t v = 0;
        pull(&v, 1);
        out.data.flip_mask[i] = v != 0;
    }
    if (pos != blob.size()) throw FormatError("trailing bytes in dataset.bin");
    out.data.validate();
    return out;
}

}  // namespace posthoc
