#include "relgnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "relgnn/config.hpp"
#include "relgnn/error.hpp"
#include "text_util.hpp"

namespace relgnn {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'L', 'G', 'N', 'N', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint io assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Cursor {
public:
    Cursor(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) fail(ErrorKind::parse, source_ + ": truncated checkpoint");
    }
    const std::string& bytes_;
    const std::string& source_;
    std::size_t pos_ = 0;
};

std::string config_text(const ModelConfig& c) {
    KeyValueConfig kv;
    std::string dims;
    for (std::size_t i = 0; i < c.input_dims.size(); ++i) dims += (i ? "," : "") + std::to_string(c.input_dims[i]);
    kv.set("layers", std::to_string(c.layers));
    kv.set("hidden", std::to_string(c.hidden));
    kv.set("heads", std::to_string(c.heads));
    kv.set("bases", std::to_string(c.bases));
    kv.set("slope", text::format_double(c.slope));
    kv.set("relations", std::to_string(c.relations));
    kv.set("input_dims", dims);
    kv.set("attention", c.attention ? "true" : "false");
    kv.set("seed", std::to_string(c.seed));
    return kv.to_text();
}

ModelConfig parse_config(const std::string& text, const std::string& source) {
    auto kv = KeyValueConfig::parse(text, source);
    ModelConfig c;
    auto need = [&](const char* key) {
        auto v = kv.get(key);
        if (!v) fail(ErrorKind::parse, source + ": checkpoint config lacks '" + key + "'");
        return *v;
    };
    auto uint = [&](const char* key) {
        std::uint64_t x;
        if (!text::parse_uint(need(key), x)) fail(ErrorKind::parse, source + ": bad checkpoint value for " + key);
        return x;
    };
    c.layers = uint("layers");
    c.hidden = uint("hidden");
    c.heads = uint("heads");
    c.bases = uint("bases");
    if (!text::parse_double(need("slope"), c.slope)) fail(ErrorKind::parse, source + ": bad slope");
    c.relations = uint("relations");
    c.input_dims.clear();
    for (const auto& tok : text::split(need("input_dims"), ',')) {
        std::uint64_t x;
        if (!text::parse_uint(tok, x)) fail(ErrorKind::parse, source + ": bad input_dims");
        c.input_dims.push_back(x);
    }
    c.attention = need("attention") == "true";
    c.seed = uint("seed");
    return c;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);
    const std::string cfg = config_text(ckpt.config);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
    out += cfg;
    auto named = const_cast<ModelParameters&>(ckpt.params).named();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(named.size()));
    for (const auto& n : named) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(n.name.size()));
        out += n.name;
        put<std::uint64_t>(out, n.value->rows);
        put<std::uint64_t>(out, n.value->cols);
        for (double x : n.value->data) put<double>(out, x);
    }
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
    Cursor cur(bytes, source);
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        fail(ErrorKind::parse, source + ": not a checkpoint (bad magic)");
    }
    cur.str(sizeof(kMagic));
    const auto version = cur.get<std::uint32_t>();
    if (version != kVersion) {
        fail(ErrorKind::parse, source + ": unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const auto cfg_len = cur.get<std::uint32_t>();
    ckpt.config = parse_config(cur.str(cfg_len), source);
    ckpt.config.validate();
    ckpt.params = init_parameters(ckpt.config);
    auto named = ckpt.params.named();
    const auto count = cur.get<std::uint32_t>();
    if (count != named.size()) {
        fail(ErrorKind::parse, source + ": expected " + std::to_string(named.size()) + " arrays, found " +
                                   std::to_string(count));
    }
    for (auto& n : named) {
        const auto name = cur.str(cur.get<std::uint32_t>());
        const auto rows = cur.get<std::uint64_t>();
        const auto cols = cur.get<std::uint64_t>();
        if (name != n.name || rows != n.value->rows || cols != n.value->cols) {
            fail(ErrorKind::parse, source + ": array '" + name + "' does not match the model layout (expected '" +
                                       n.name + "' " + n.value->shape_string() + ")");
        }
        for (auto& x : n.value->data) x = cur.get<double>();
    }
    if (!cur.done()) fail(ErrorKind::parse, source + ": trailing bytes after checkpoint");
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + path);
    const auto bytes = serialize_checkpoint(ckpt);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open checkpoint " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str(), path);
}

}  // namespace relgnn
