#include <algorithm>
#include <cmath>

#include "relgnn/error.hpp"
#include "relgnn/graph.hpp"
#include "relgnn/rng.hpp"

namespace relgnn {

namespace {

double normal(Rng& rng) {
    // Box-Muller; one draw per call keeps the stream position simple.
    double u1 = uniform_unit(rng);
    while (u1 <= 0.0) u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

void SyntheticSpec::validate() const {
    auto bad = [](const std::string& why) { fail(ErrorKind::config, "synthetic spec: " + why); };
    if (node_counts.empty()) bad("at least one node type is required");
    if (attr_dims.size() != node_counts.size()) bad("attr_dims must list one dimension per node type");
    for (auto n : node_counts) {
        if (n < 1) bad("node counts must be >= 1");
    }
    for (auto d : attr_dims) {
        if (d < 1) bad("attribute dimensions must be >= 1");
    }
    if (relations < 1) bad("relations must be >= 1");
    if (edges < 1) bad("edges must be >= 1");
    if (communities < 1) bad("communities must be >= 1");
    if (latent_dim < 1) bad("latent_dim must be >= 1");
    if (!(noise >= 0.0 && noise <= 1.0)) bad("noise must lie in [0, 1]");
    if (!(attr_noise >= 0.0) || !std::isfinite(attr_noise)) bad("attr_noise must be >= 0");
    if (!(latent_strength >= 0.0) || !std::isfinite(latent_strength)) bad("latent_strength must be >= 0");
    if (!(latent_attr >= 0.0) || !std::isfinite(latent_attr)) bad("latent_attr must be >= 0");
}

std::pair<NodeTypeId, NodeTypeId> synthetic_relation_types(std::size_t r, std::size_t type_count) {
    return {static_cast<NodeTypeId>(r % type_count), static_cast<NodeTypeId>((r + 1) % type_count)};
}

SyntheticGraph generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, "synthetic"));
    const std::size_t K = spec.node_counts.size();
    const std::size_t C = spec.communities;
    const std::size_t k = spec.latent_dim;

    std::vector<NodeRecord> nodes;
    std::vector<std::size_t> community;
    std::vector<std::vector<NodeId>> by_type(K);
    // members[type][community]
    std::vector<std::vector<std::vector<NodeId>>> members(K, std::vector<std::vector<NodeId>>(C));
    for (std::size_t t = 0; t < K; ++t) {
        std::vector<std::size_t> slots(spec.node_counts[t]);
        for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i % C;
        shuffle(slots, rng);
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const auto v = static_cast<NodeId>(nodes.size());
            NodeRecord rec;
            rec.type = static_cast<NodeTypeId>(t);
            rec.attributes.resize(spec.attr_dims[t]);
            for (auto& a : rec.attributes) a = spec.attr_noise * normal(rng);
            rec.attributes[slots[i] % spec.attr_dims[t]] += 1.0;
            nodes.push_back(std::move(rec));
            community.push_back(slots[i]);
            by_type[t].push_back(v);
            members[t][slots[i]].push_back(v);
        }
    }
    std::vector<double> latent(nodes.size() * k);
    for (auto& z : latent) z = normal(rng);
    std::vector<double> rel_latent(spec.relations * k);
    for (auto& w : rel_latent) w = normal(rng);
    if (spec.latent_attr > 0.0) {
        for (std::size_t v = 0; v < nodes.size(); ++v) {
            auto& attrs = nodes[v].attributes;
            for (std::size_t j = 0; j < k; ++j) attrs[(C + j) % attrs.size()] += spec.latent_attr * latent[v * k + j];
        }
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(k));

    std::vector<Triple> generated;
    generated.reserve(spec.edges);
    TripleSet seen;
    std::vector<double> weights;
    for (std::size_t r = 0; r < spec.relations; ++r) {
        const std::size_t want = spec.edges / spec.relations + (r < spec.edges % spec.relations ? 1 : 0);
        const auto [s_type, d_type] = synthetic_relation_types(r, K);
        const auto& srcs = by_type[s_type];
        const auto& dsts = by_type[d_type];
        const std::size_t capacity = srcs.size() * dsts.size() - (s_type == d_type ? srcs.size() : 0);
        if (want > capacity) {
            fail(ErrorKind::config, "synthetic spec infeasible: relation " + std::to_string(r) + " needs " +
                                        std::to_string(want) + " edges but only " +
                                        std::to_string(capacity) + " distinct triples exist");
        }
        std::size_t made = 0;
        std::size_t budget = 200 * want + 10000;
        while (made < want) {
            if (budget-- == 0) {
                fail(ErrorKind::config, "synthetic spec infeasible: could not place " + std::to_string(want) +
                                            " distinct edges for relation " + std::to_string(r) +
                                            " (too dense for the community structure)");
            }
            const NodeId u = srcs[uniform_index(rng, srcs.size())];
            NodeId v;
            if (uniform_unit(rng) < spec.noise) {
                v = dsts[uniform_index(rng, dsts.size())];
            } else {
                const auto& cand = members[d_type][community[u]];
                if (cand.empty()) continue;
                weights.resize(cand.size());
                double total = 0.0;
                for (std::size_t i = 0; i < cand.size(); ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < k; ++j) {
                        dot += latent[u * k + j] * rel_latent[r * k + j] * latent[cand[i] * k + j];
                    }
                    weights[i] = std::exp(spec.latent_strength * norm * dot);
                    total += weights[i];
                }
                double x = uniform_unit(rng) * total;
                std::size_t pick = cand.size() - 1;
                for (std::size_t i = 0; i < cand.size(); ++i) {
                    x -= weights[i];
                    if (x < 0.0) {
                        pick = i;
                        break;
                    }
                }
                v = cand[pick];
            }
            if (u == v) continue;
            const Triple t{u, static_cast<RelationId>(r), v};
            if (!seen.insert(t).second) continue;
            generated.push_back(t);
            ++made;
        }
    }

    const std::size_t hold = (spec.edges + 5) / 10;
    std::vector<std::size_t> order(generated.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    std::vector<Triple> held_out, kept;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < hold ? held_out : kept).push_back(generated[order[i]]);
    }
    std::sort(held_out.begin(), held_out.end());
    std::sort(kept.begin(), kept.end());

    SyntheticGraph out{HeteroGraph(std::move(nodes), spec.relations, std::move(kept)), std::move(held_out),
                       std::move(community)};
    return out;
}

}  // namespace relgnn
