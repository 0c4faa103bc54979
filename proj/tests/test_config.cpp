#include <doctest.h>

#include "relgnn/checkpoint.hpp"
#include "relgnn/config.hpp"
#include "relgnn/error.hpp"
#include "relgnn/rng.hpp"
#include "test_util.hpp"

using namespace relgnn;
using namespace testutil;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::runtime;
}

Checkpoint small_checkpoint() {
    Checkpoint c;
    c.config.layers = 2;
    c.config.hidden = 4;
    c.config.heads = 2;
    c.config.bases = 2;
    c.config.relations = 3;
    c.config.input_dims = {3, 5};
    c.config.seed = 9;
    c.params = init_parameters(c.config);
    return c;
}

}  // namespace

TEST_CASE("key value parsing") {
    auto kv = KeyValueConfig::parse(
        "# top\nseed = 3\nout=run_a\n[model]\nhidden = 16   # trailing\nheads=2\n\n[train]\nlr = 0.01\n"
        "model.layers = 3\n");
    CHECK(kv.get("seed") == "3");
    CHECK(kv.get("out") == "run_a");
    CHECK(kv.get("model.hidden") == "16");
    CHECK(kv.get("model.heads") == "2");
    CHECK(kv.get("train.lr") == "0.01");
    CHECK(kv.get("model.layers") == "3");
    CHECK_FALSE(kv.get("model.bases").has_value());
    CHECK(kind_of([] { KeyValueConfig::parse("[model]\nhidden 16\n"); }) == ErrorKind::config);
    CHECK(kind_of([] { KeyValueConfig::load("/nonexistent/relgnn.cfg"); }) == ErrorKind::io);
}

TEST_CASE("run config rejects unknown keys and bad values") {
    auto kv = KeyValueConfig::parse("[model]\nhiden = 16\n");
    try {
        RunConfig::from(kv);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        CHECK(std::string(e.what()).find("model.hiden") != std::string::npos);
    }
    CHECK(kind_of([] { RunConfig::from(KeyValueConfig::parse("[model]\nhidden = many\n")); }) == ErrorKind::config);
    CHECK(kind_of([] { RunConfig::from(KeyValueConfig::parse("[eval]\nsplit = train\n")); }) == ErrorKind::config);
    CHECK(kind_of([] { RunConfig::from(KeyValueConfig::parse("[eval]\nhits = 1,0\n")); }) == ErrorKind::config);
    CHECK_THROWS_AS(RunConfig::from(KeyValueConfig::parse("[sampler]\nstrategy = hardest\n")), Error);
}

TEST_CASE("resolved config round trips") {
    auto kv = KeyValueConfig::parse(
        "seed = 11\n[model]\nhidden = 8\nattention = false\n[sampler]\nstrategy = asa\nmu = 0.2\n"
        "[eval]\nhits = 1,5\n[synthetic]\nnodes = 30,40\n");
    auto cfg = RunConfig::from(kv);
    CHECK(cfg.seed == 11);
    CHECK(cfg.model.hidden == 8);
    CHECK_FALSE(cfg.model.attention);
    CHECK(cfg.train.sampler.strategy == SamplerStrategy::asa);
    CHECK(cfg.train.sampler.mu == 0.2);
    CHECK(cfg.eval.hits == std::vector<std::size_t>{1, 5});
    CHECK(cfg.synthetic.node_counts == std::vector<std::size_t>{30, 40});

    const auto text = cfg.resolved().to_text();
    auto back = KeyValueConfig::parse(text);
    CHECK(back.values() == cfg.resolved().values());
    CHECK(RunConfig::from(back).resolved().to_text() == text);
    // every known key is present once resolved
    for (const auto& key : RunConfig::known_keys()) {
        CAPTURE(key);
        CHECK(back.contains(key));
    }
}

TEST_CASE("auto seeds derive from the top-level seed") {
    auto a = RunConfig::from(KeyValueConfig::parse("seed = 5\n"));
    auto b = RunConfig::from(KeyValueConfig::parse("seed = 5\n[model]\nseed = auto\n"));
    auto c = RunConfig::from(KeyValueConfig::parse("seed = 6\n"));
    CHECK(a.model.seed == derive_seed(5, "model"));
    CHECK(a.train.seed == derive_seed(5, "train"));
    CHECK(a.train.sampler.seed == derive_seed(5, "sampler"));
    CHECK(a.synthetic.seed == derive_seed(5, "synthetic"));
    CHECK(a.eval.seed == derive_seed(5, "eval"));
    CHECK(b.model.seed == a.model.seed);
    CHECK(c.model.seed != a.model.seed);
    CHECK(a.model.seed != a.train.seed);
    auto pinned = RunConfig::from(KeyValueConfig::parse("seed = 5\n[model]\nseed = 42\n"));
    CHECK(pinned.model.seed == 42);
    CHECK(pinned.train.seed == a.train.seed);
}

TEST_CASE("checkpoint round trip") {
    auto c = small_checkpoint();
    auto bytes = serialize_checkpoint(c);
    CHECK(bytes.substr(0, 8) == "RELGNNCK");
    auto back = deserialize_checkpoint(bytes);
    CHECK(back.params == c.params);
    CHECK(back.config.hidden == 4);
    CHECK(back.config.input_dims == std::vector<std::size_t>{3, 5});
    CHECK(serialize_checkpoint(back) == bytes);

    const auto dir = scratch_dir("config_ckpt");
    const auto path = (dir / "m.ckpt").string();
    save_checkpoint(c, path);
    CHECK(load_checkpoint(path).params == c.params);
}

TEST_CASE("corrupt checkpoints are rejected") {
    auto bytes = serialize_checkpoint(small_checkpoint());
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    try {
        deserialize_checkpoint(bad_magic, "m.ckpt");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parse);
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }
    CHECK(kind_of([&] { deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)); }) == ErrorKind::parse);
    CHECK(kind_of([&] { deserialize_checkpoint(bytes + "x"); }) == ErrorKind::parse);
    CHECK(kind_of([] { deserialize_checkpoint("RELG"); }) == ErrorKind::parse);
    auto bad_version = bytes;
    bad_version[8] = 99;
    CHECK(kind_of([&] { deserialize_checkpoint(bad_version); }) == ErrorKind::parse);
    CHECK(kind_of([] { load_checkpoint("/nonexistent/m.ckpt"); }) == ErrorKind::io);
}
