// relgnn command-line driver; talks to the library only through relgnn.h.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "relgnn/relgnn.h"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_runtime = 2;

int report(relgnn_status st) {
    std::cerr << "error: " << relgnn_last_error() << "\n";
    return (st == RELGNN_ERR_CONFIG || st == RELGNN_ERR_INVALID_ARGUMENT) ? exit_usage : exit_runtime;
}

struct ConfigHandle {
    relgnn_config* p = nullptr;
    ~ConfigHandle() { relgnn_config_free(p); }
};

struct ModelHandle {
    relgnn_model* p = nullptr;
    ~ModelHandle() { relgnn_model_free(p); }
};

std::string take_string(char* s) {
    std::string out = s ? s : "";
    relgnn_string_free(s);
    return out;
}

// "--model.hidden 32" and "--model.hidden=32" become config overrides; CLI11
// sees everything else.
std::vector<std::pair<std::string, std::string>> extract_overrides(std::vector<std::string>& args, std::string& err) {
    std::vector<std::pair<std::string, std::string>> out;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) == 0 && a.find('.') != std::string::npos) {
            std::string key = a.substr(2);
            std::string value;
            if (auto eq = key.find('='); eq != std::string::npos) {
                value = key.substr(eq + 1);
                key = key.substr(0, eq);
            } else if (i + 1 < args.size()) {
                value = args[++i];
            } else {
                err = "missing value for --" + key;
                return out;
            }
            out.emplace_back(key, value);
        } else {
            rest.push_back(a);
        }
    }
    args = std::move(rest);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string err;
    auto overrides = extract_overrides(args, err);
    if (!err.empty()) {
        std::cerr << "error: " << err << "\n";
        return exit_usage;
    }

    CLI::App app{"relgnn: heterogeneous relationship prediction", "relgnn_cli"};
    app.set_version_flag("--version", std::string(relgnn_version()));
    app.require_subcommand(1);

    std::string config_path, out_dir, seed, checkpoint, split, ks, csv_path;
    app.add_option("--config", config_path, "key=value config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "top-level seed");

    auto* gen = app.add_subcommand("generate", "write a synthetic graph");
    auto* train = app.add_subcommand("train", "train a model");
    auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a split");
    auto* diagnose = app.add_subcommand("diagnose", "attention entropy per node");
    for (auto* sub : {gen, train, evaluate, diagnose}) {
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "top-level seed");
    }
    for (auto* sub : {evaluate, diagnose}) sub->add_option("--checkpoint", checkpoint, "checkpoint path");
    evaluate->add_option("--split", split, "train, valid or test");
    evaluate->add_option("--k", ks, "comma-separated Hit@k cutoffs");
    diagnose->add_option("--csv", csv_path, "output CSV (default <out>/entropy.csv)");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_usage;
    }

    ConfigHandle cfg;
    relgnn_status st = config_path.empty() ? relgnn_config_new(&cfg.p) : relgnn_config_load(config_path.c_str(), &cfg.p);
    if (st != RELGNN_OK) {
        std::cerr << "error: " << relgnn_last_error() << "\n";
        return exit_usage;
    }
    if (!seed.empty()) overrides.emplace_back("seed", seed);
    if (!out_dir.empty()) overrides.emplace_back("out", out_dir);
    if (!checkpoint.empty()) overrides.emplace_back("eval.checkpoint", checkpoint);
    if (!split.empty()) overrides.emplace_back("eval.split", split);
    if (!ks.empty()) overrides.emplace_back("eval.hits", ks);
    for (const auto& [k, v] : overrides) {
        if ((st = relgnn_config_set(cfg.p, k.c_str(), v.c_str())) != RELGNN_OK) return report(st);
    }

    char* out_c = nullptr;
    if ((st = relgnn_config_get(cfg.p, "out", &out_c)) != RELGNN_OK) return report(st);
    const std::string out = take_string(out_c);

    if (gen->parsed()) {
        if ((st = relgnn_generate(cfg.p, out.c_str())) != RELGNN_OK) return report(st);
        std::cout << "wrote " << out << "/nodes.tsv, edges.tsv, heldout.tsv\n";
        return exit_ok;
    }
    if (train->parsed()) {
        if ((st = relgnn_train(cfg.p, out.c_str())) != RELGNN_OK) return report(st);
        std::cout << "wrote " << out << "/best.ckpt\n";
        return exit_ok;
    }

    char* ck_c = nullptr;
    if ((st = relgnn_config_get(cfg.p, "eval.checkpoint", &ck_c)) != RELGNN_OK) return report(st);
    std::string ck = take_string(ck_c);
    if (ck.empty()) ck = out + "/best.ckpt";
    ModelHandle model;
    if ((st = relgnn_model_load(ck.c_str(), &model.p)) != RELGNN_OK) return report(st);

    if (evaluate->parsed()) {
        char* json = nullptr;
        if ((st = relgnn_evaluate(cfg.p, model.p, out.c_str(), &json)) != RELGNN_OK) return report(st);
        std::cout << take_string(json) << "\n";
        return exit_ok;
    }
    const std::string csv = csv_path.empty() ? out + "/entropy.csv" : csv_path;
    std::size_t rows = 0;
    if ((st = relgnn_diagnose(cfg.p, model.p, csv.c_str(), &rows)) != RELGNN_OK) return report(st);
    std::cout << "wrote " << rows << " rows to " << csv << "\n";
    return exit_ok;
}
