#include "posthoc/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "posthoc/errors.hpp"

namespace posthoc {

namespace {

constexpr char kEvalMagic[8] = {'P', 'H', 'E', 'V', 'A', 'L', '0', '1'};

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    void raw(void* out, std::size_t len) {
        if (remaining() < len) throw FormatError("eval bundle truncated");
        std::memcpy(out, bytes_.data() + pos_, len);
        pos_ += len;
    }

    std::uint32_t u32() {
        std::uint8_t b[4];
        raw(b, 4);
        return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
               std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
    }

    float f32() { return std::bit_cast<float>(u32()); }

private:
    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

void push_u32(std::vector<std::byte>& out, std::uint32_t v) {
    out.push_back(std::byte(v & 0xff));
    out.push_back(std::byte((v >> 8) & 0xff));
    out.push_back(std::byte((v >> 16) & 0xff));
    out.push_back(std::byte((v >> 24) & 0xff));
}

void push_f32(std::vector<std::byte>& out, double v) {
    push_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

}  // namespace

void EvalTable::validate() const {
    if (n < 1) throw ValidationError("eval table needs at least one row");
    if (c < 2) throw ValidationError("eval table needs at least two classes");
    if (logits.size() != n * c) throw ValidationError("logit buffer size mismatch");
    if (labels.size() != n) throw ValidationError("label buffer size mismatch");
    for (std::uint32_t y : labels)
        if (y >= c) throw ValidationError("label " + std::to_string(y) + " out of range for c=" + std::to_string(c));
    for (double z : logits)
        if (!std::isfinite(z)) throw ValidationError("non-finite logit");
}

std::size_t CheckpointTensors::total_elems() const {
    std::size_t total = 0;
    for (const auto& t : tensors) total += t.data.size();
    return total;
}

const TensorEntry* CheckpointTensors::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

void CheckpointTensors::validate() const {
    std::set<std::string> seen;
    for (const auto& t : tensors) {
        if (!seen.insert(t.name).second)
            throw ValidationError("duplicate tensor name: " + t.name);
        std::size_t elems = 1;
        for (std::uint32_t d : t.shape) elems *= d;
        if (t.data.size() != elems)
            throw ValidationError("tensor " + t.name + " data length does not match shape");
        for (double v : t.data)
            if (!std::isfinite(v)) throw ValidationError("non-finite entry in tensor " + t.name);
    }
}

bool CheckpointTensors::same_schema(const CheckpointTensors& other) const {
    if (tensors.size() != other.tensors.size()) return false;
    for (std::size_t i = 0; i < tensors.size(); ++i)
        if (tensors[i].name != other.tensors[i].name || tensors[i].shape != other.tensors[i].shape)
            return false;
    return true;
}

EvalTable read_eval_table(std::span<const std::byte> bytes) {
    ByteReader in(bytes);
    char magic[8];
    in.raw(magic, 8);
    if (std::memcmp(magic, kEvalMagic, 8) != 0) throw FormatError("bad eval bundle magic");
    EvalTable t;
    t.n = in.u32();
    t.c = in.u32();
    if (t.n < 1 || t.c < 2) throw FormatError("eval bundle header has invalid n or c");
    t.logits.resize(t.n * t.c);
    for (double& z : t.logits) z = in.f32();
    t.labels.resize(t.n);
    for (std::uint32_t& y : t.labels) y = in.u32();
    if (in.remaining() != 0) throw FormatError("trailing bytes after eval bundle");
    t.validate();
    return t;
}

std::vector<std::byte> write_eval_table(const EvalTable& t) {
    t.validate();
    std::vector<std::byte> out;
    out.reserve(16 + 4 * (t.n * t.c + t.n));
    for (char ch : kEvalMagic) out.push_back(std::byte(ch));
    push_u32(out, static_cast<std::uint32_t>(t.n));
    push_u32(out, static_cast<std::uint32_t>(t.c));
    for (double z : t.logits) push_f32(out, z);
    for (std::uint32_t y : t.labels) push_u32(out, y);
    return out;
}

CheckpointTensors read_checkpoint(std::span<const std::byte> manifest,
                                  std::span<const std::byte> blob) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(std::string_view(
            reinterpret_cast<const char*>(manifest.data()), manifest.size()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("tensors") || !doc.contains("total_elems"))
        throw FormatError("manifest missing tensors or total_elems");
    const std::uint64_t total = doc["total_elems"].get<std::uint64_t>();
    if (blob.size() != total * 4)
        throw FormatError("blob length " + std::to_string(blob.size()) +
                          " does not match total_elems " + std::to_string(total));

    CheckpointTensors out;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;  // [begin, end)
    for (const auto& jt : doc["tensors"]) {
        if (!jt.contains("name") || !jt.contains("shape") || !jt.contains("offset_elems"))
            throw FormatError("manifest tensor entry missing name, shape or offset_elems");
        TensorEntry e;
        e.name = jt["name"].get<std::string>();
        for (const auto& d : jt["shape"]) e.shape.push_back(d.get<std::uint32_t>());
        std::uint64_t elems = 1;
        for (std::uint32_t d : e.shape) elems *= d;
        const std::uint64_t off = jt["offset_elems"].get<std::uint64_t>();
        if (off + elems > total)
            throw FormatError("tensor " + e.name + " extends past total_elems");
        spans.emplace_back(off, off + elems);
        e.data.resize(elems);
        ByteReader in(blob.subspan(off * 4, elems * 4));
        for (double& v : e.data) v = in.f32();
        out.tensors.push_back(std::move(e));
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first < spans[i - 1].second)
            throw FormatError("overlapping tensor offsets in manifest");
    out.validate();
    return out;
}

std::pair<std::string, std::vector<std::byte>> write_checkpoint(const CheckpointTensors& c) {
    c.validate();
    nlohmann::json doc;
    doc["tensors"] = nlohmann::json::array();
    std::vector<std::byte> blob;
    blob.reserve(c.total_elems() * 4);
    std::uint64_t offset = 0;
    for (const auto& t : c.tensors) {
        doc["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"offset_elems", offset}});
        for (double v : t.data) push_f32(blob, v);
        offset += t.data.size();
    }
    doc["total_elems"] = offset;
    return {doc.dump(), std::move(blob)};
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<std::byte> bytes;
    in.seekg(0, std::ios::end);
    bytes.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw FormatError("failed reading " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing " + path.string());
}

EvalTable load_eval_table(const std::filesystem::path& path) {
    return read_eval_table(read_file(path));
}

void save_eval_table(const std::filesystem::path& path, const EvalTable& t) {
    write_file(path, write_eval_table(t));
}

CheckpointTensors load_checkpoint(const std::filesystem::path& stem) {
    auto manifest = read_file(std::filesystem::path(stem).concat(".json"));
    auto blob = read_file(std::filesystem::path(stem).concat(".f32"));
    return read_checkpoint(manifest, blob);
}

void save_checkpoint(const std::filesystem::path& stem, const CheckpointTensors& c) {
    auto [manifest, blob] = write_checkpoint(c);
    std::vector<std::byte> mbytes(manifest.size());
    std::memcpy(mbytes.data(), manifest.data(), manifest.size());
    write_file(std::filesystem::path(stem).concat(".json"), mbytes);
    write_file(std::filesystem::path(stem).concat(".f32"), blob);
}

}  // namespace posthoc
