#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relgnn/graph.hpp"
#include "relgnn/model.hpp"
#include "relgnn/training.hpp"

namespace relgnn {

/// Flat-sectioned key=value text.
///
///     # comment
///     seed = 3
///     [model]
///     hidden = 16      -> key "model.hidden"
///
/// Keys may also be written fully qualified ("model.hidden = 16") outside
/// any section. Later assignments override earlier ones.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& source = "<config>");
    static KeyValueConfig load(const std::string& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    std::optional<std::string> get(const std::string& key) const;
    bool contains(const std::string& key) const { return values_.contains(key); }
    const std::map<std::string, std::string>& values() const { return values_; }

    /// Grouped by section, keys sorted; parse(to_text()) reproduces *this.
    std::string to_text() const;

private:
    std::map<std::string, std::string> values_;
};

struct DataConfig {
    std::string nodes;
    std::string edges;
    std::string heldout;
    std::string valid_edges;
    std::string test_edges;
    bool reverse = false;
    double valid_fraction = 0.1;
    double test_fraction = 0.1;
};

struct EvalConfig {
    std::string split = "test";
    std::vector<std::size_t> hits{1, 10, 30};
    std::string checkpoint;
    std::uint64_t seed = 0;
};

/// Fully resolved run configuration. Subsystem seeds left unset ("auto")
/// are derived from the top-level seed with fixed labels.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out = "run";
    DataConfig data;
    SyntheticSpec synthetic;
    ModelConfig model;
    TrainConfig train;
    EvalConfig eval;

    /// Unknown keys and malformed values are rejected.
    static RunConfig from(const KeyValueConfig& kv);
    KeyValueConfig resolved() const;

    static const std::vector<std::string>& known_keys();
};

}  // namespace relgnn
