#include "relgnn/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "relgnn/error.hpp"
#include "relgnn/rng.hpp"
#include "text_util.hpp"

namespace relgnn {

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& source) {
    KeyValueConfig kv;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = text::trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3) {
                fail(ErrorKind::config, source + ":" + std::to_string(line_no) + ": malformed section header");
            }
            section = text::trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            fail(ErrorKind::config, source + ":" + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = text::trim(t.substr(0, eq));
        const std::string value = text::trim(t.substr(eq + 1));
        if (key.empty()) fail(ErrorKind::config, source + ":" + std::to_string(line_no) + ": empty key");
        if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
        kv.values_[key] = value;
    }
    return kv;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::to_text() const {
    std::ostringstream os;
    // top-level keys first so they are not swallowed by a section
    for (const auto& [key, value] : values_) {
        if (key.find('.') == std::string::npos) os << key << " = " << value << "\n";
    }
    std::string current;
    for (const auto& [key, value] : values_) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) continue;
        const std::string section = key.substr(0, dot);
        if (section != current) {
            if (os.tellp() > 0) os << "\n";
            os << "[" << section << "]\n";
            current = section;
        }
        os << key.substr(dot + 1) << " = " << value << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kKeys = {
    "seed", "out",
    "data.nodes", "data.edges", "data.heldout", "data.valid_edges", "data.test_edges", "data.reverse",
    "data.valid_fraction", "data.test_fraction",
    "synthetic.nodes", "synthetic.attr_dims", "synthetic.relations", "synthetic.edges", "synthetic.communities",
    "synthetic.noise", "synthetic.attr_noise", "synthetic.latent_dim", "synthetic.latent_strength",
    "synthetic.latent_attr",
    "synthetic.seed",
    "model.layers", "model.hidden", "model.heads", "model.bases", "model.slope", "model.attention", "model.seed",
    "train.epochs", "train.lr", "train.optimizer", "train.beta1", "train.beta2", "train.eps", "train.batch_size",
    "train.weight_decay", "train.patience", "train.negatives", "train.seed",
    "sampler.strategy", "sampler.pool_size", "sampler.mu", "sampler.schedule", "sampler.rate", "sampler.seed",
    "eval.split", "eval.hits", "eval.checkpoint", "eval.seed",
};

class Reader {
public:
    explicit Reader(const KeyValueConfig& kv) : kv_(kv) {}

    [[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& expected) const {
        fail(ErrorKind::config, "config key " + key + ": expected " + expected + ", got '" + value + "'");
    }

    void str(const std::string& key, std::string& out) const {
        if (auto v = kv_.get(key)) out = *v;
    }
    void size(const std::string& key, std::size_t& out) const {
        if (auto v = kv_.get(key)) {
            std::uint64_t x;
            if (!text::parse_uint(*v, x)) bad(key, *v, "a non-negative integer");
            out = static_cast<std::size_t>(x);
        }
    }
    void real(const std::string& key, double& out) const {
        if (auto v = kv_.get(key)) {
            double x;
            if (!text::parse_double(*v, x) || !std::isfinite(x)) bad(key, *v, "a number");
            out = x;
        }
    }
    void flag(const std::string& key, bool& out) const {
        if (auto v = kv_.get(key)) {
            if (*v == "true" || *v == "1" || *v == "on" || *v == "yes") out = true;
            else if (*v == "false" || *v == "0" || *v == "off" || *v == "no") out = false;
            else bad(key, *v, "true/false");
        }
    }
    void sizes(const std::string& key, std::vector<std::size_t>& out) const {
        if (auto v = kv_.get(key)) {
            out.clear();
            for (const auto& tok : text::split(*v, ',')) {
                std::uint64_t x;
                if (!text::parse_uint(text::trim(tok), x)) bad(key, *v, "a comma-separated list of integers");
                out.push_back(static_cast<std::size_t>(x));
            }
        }
    }
    // "auto" (or absent) derives the seed from the top-level seed.
    void seed(const std::string& key, std::uint64_t top, const char* label, std::uint64_t& out) const {
        auto v = kv_.get(key);
        if (!v || *v == "auto") {
            out = derive_seed(top, label);
            return;
        }
        std::uint64_t x;
        if (!text::parse_uint(*v, x)) bad(key, *v, "a non-negative integer or auto");
        out = x;
    }

private:
    const KeyValueConfig& kv_;
};

std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() { return kKeys; }

RunConfig RunConfig::from(const KeyValueConfig& kv) {
    for (const auto& [key, value] : kv.values()) {
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
            fail(ErrorKind::config, "unknown config key '" + key + "'");
        }
    }
    RunConfig c;
    Reader r(kv);
    if (auto v = kv.get("seed")) {
        std::uint64_t x;
        if (!text::parse_uint(*v, x)) r.bad("seed", *v, "a non-negative integer");
        c.seed = x;
    }
    r.str("out", c.out);

    r.str("data.nodes", c.data.nodes);
    r.str("data.edges", c.data.edges);
    r.str("data.heldout", c.data.heldout);
    r.str("data.valid_edges", c.data.valid_edges);
    r.str("data.test_edges", c.data.test_edges);
    r.flag("data.reverse", c.data.reverse);
    r.real("data.valid_fraction", c.data.valid_fraction);
    r.real("data.test_fraction", c.data.test_fraction);

    r.sizes("synthetic.nodes", c.synthetic.node_counts);
    r.sizes("synthetic.attr_dims", c.synthetic.attr_dims);
    r.size("synthetic.relations", c.synthetic.relations);
    r.size("synthetic.edges", c.synthetic.edges);
    r.size("synthetic.communities", c.synthetic.communities);
    r.real("synthetic.noise", c.synthetic.noise);
    r.real("synthetic.attr_noise", c.synthetic.attr_noise);
    r.size("synthetic.latent_dim", c.synthetic.latent_dim);
    r.real("synthetic.latent_strength", c.synthetic.latent_strength);
    r.real("synthetic.latent_attr", c.synthetic.latent_attr);
    r.seed("synthetic.seed", c.seed, "synthetic", c.synthetic.seed);

    r.size("model.layers", c.model.layers);
    r.size("model.hidden", c.model.hidden);
    r.size("model.heads", c.model.heads);
    r.size("model.bases", c.model.bases);
    r.real("model.slope", c.model.slope);
    r.flag("model.attention", c.model.attention);
    r.seed("model.seed", c.seed, "model", c.model.seed);

    r.size("train.epochs", c.train.epochs);
    r.real("train.lr", c.train.lr);
    if (auto v = kv.get("train.optimizer")) c.train.optimizer = parse_optimizer(*v);
    r.real("train.beta1", c.train.beta1);
    r.real("train.beta2", c.train.beta2);
    r.real("train.eps", c.train.eps);
    r.size("train.batch_size", c.train.batch_size);
    r.real("train.weight_decay", c.train.weight_decay);
    r.size("train.patience", c.train.patience);
    r.size("train.negatives", c.train.sampler.negatives);
    r.seed("train.seed", c.seed, "train", c.train.seed);

    if (auto v = kv.get("sampler.strategy")) c.train.sampler.strategy = parse_strategy(*v);
    r.size("sampler.pool_size", c.train.sampler.pool_size);
    r.real("sampler.mu", c.train.sampler.mu);
    if (auto v = kv.get("sampler.schedule")) c.train.sampler.schedule = parse_schedule(*v);
    r.real("sampler.rate", c.train.sampler.rate);
    r.seed("sampler.seed", c.seed, "sampler", c.train.sampler.seed);

    r.str("eval.split", c.eval.split);
    if (c.eval.split != "test" && c.eval.split != "valid") r.bad("eval.split", c.eval.split, "test or valid");
    r.sizes("eval.hits", c.eval.hits);
    r.str("eval.checkpoint", c.eval.checkpoint);
    r.seed("eval.seed", c.seed, "eval", c.eval.seed);
    for (auto k : c.eval.hits) {
        if (k < 1) r.bad("eval.hits", join(c.eval.hits), "positive integers");
    }

    c.synthetic.validate();
    c.train.validate();
    return c;
}

KeyValueConfig RunConfig::resolved() const {
    KeyValueConfig kv;
    auto num = [](double x) { return text::format_double(x); };
    auto b = [](bool x) { return std::string(x ? "true" : "false"); };
    kv.set("seed", std::to_string(seed));
    kv.set("out", out);
    kv.set("data.nodes", data.nodes);
    kv.set("data.edges", data.edges);
    kv.set("data.heldout", data.heldout);
    kv.set("data.valid_edges", data.valid_edges);
    kv.set("data.test_edges", data.test_edges);
    kv.set("data.reverse", b(data.reverse));
    kv.set("data.valid_fraction", num(data.valid_fraction));
    kv.set("data.test_fraction", num(data.test_fraction));
    kv.set("synthetic.nodes", join(synthetic.node_counts));
    kv.set("synthetic.attr_dims", join(synthetic.attr_dims));
    kv.set("synthetic.relations", std::to_string(synthetic.relations));
    kv.set("synthetic.edges", std::to_string(synthetic.edges));
    kv.set("synthetic.communities", std::to_string(synthetic.communities));
    kv.set("synthetic.noise", num(synthetic.noise));
    kv.set("synthetic.attr_noise", num(synthetic.attr_noise));
    kv.set("synthetic.latent_dim", std::to_string(synthetic.latent_dim));
    kv.set("synthetic.latent_strength", num(synthetic.latent_strength));
    kv.set("synthetic.latent_attr", num(synthetic.latent_attr));
    kv.set("synthetic.seed", std::to_string(synthetic.seed));
    kv.set("model.layers", std::to_string(model.layers));
    kv.set("model.hidden", std::to_string(model.hidden));
    kv.set("model.heads", std::to_string(model.heads));
    kv.set("model.bases", std::to_string(model.bases));
    kv.set("model.slope", num(model.slope));
    kv.set("model.attention", b(model.attention));
    kv.set("model.seed", std::to_string(model.seed));
    kv.set("train.epochs", std::to_string(train.epochs));
    kv.set("train.lr", num(train.lr));
    kv.set("train.optimizer", to_string(train.optimizer));
    kv.set("train.beta1", num(train.beta1));
    kv.set("train.beta2", num(train.beta2));
    kv.set("train.eps", num(train.eps));
    kv.set("train.batch_size", std::to_string(train.batch_size));
    kv.set("train.weight_decay", num(train.weight_decay));
    kv.set("train.patience", std::to_string(train.patience));
    kv.set("train.negatives", std::to_string(train.sampler.negatives));
    kv.set("train.seed", std::to_string(train.seed));
    kv.set("sampler.strategy", to_string(train.sampler.strategy));
    kv.set("sampler.pool_size", std::to_string(train.sampler.pool_size));
    kv.set("sampler.mu", num(train.sampler.mu));
    kv.set("sampler.schedule", to_string(train.sampler.schedule));
    kv.set("sampler.rate", num(train.sampler.rate));
    kv.set("sampler.seed", std::to_string(train.sampler.seed));
    kv.set("eval.split", eval.split);
    kv.set("eval.hits", join(eval.hits));
    kv.set("eval.checkpoint", eval.checkpoint);
    kv.set("eval.seed", std::to_string(eval.seed));
    return kv;
}

}  // namespace relgnn
