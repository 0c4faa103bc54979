#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace relgnn {

using NodeId = std::uint32_t;
using RelationId = std::uint32_t;
using NodeTypeId = std::uint32_t;

struct Triple {
    NodeId src = 0;
    RelationId rel = 0;
    NodeId dst = 0;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept;
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

TripleSet make_triple_set(std::span<const Triple> a, std::span<const Triple> b = {},
                          std::span<const Triple> c = {});

struct NodeRecord {
    NodeTypeId type = 0;
    std::vector<double> attributes;
};

/// Attributed heterogeneous multigraph. Immutable after construction.
///
/// Edges are directed (src --rel--> dst). The same node pair may be linked
/// under several relations; a repeated (src, rel, dst) triple is rejected.
/// Incoming edges are indexed by (dst, rel) with sources in ascending order,
/// so the incoming edges of one node across all relations form one
/// contiguous block ordered by (rel, src).
class HeteroGraph {
public:
    HeteroGraph() = default;
    HeteroGraph(std::vector<NodeRecord> nodes, std::size_t relation_count,
                std::vector<Triple> edges);

    std::size_t num_nodes() const { return types_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    std::size_t num_relations() const { return relation_count_; }
    std::size_t num_node_types() const { return type_dims_.size(); }

    NodeTypeId node_type(NodeId v) const;
    std::span<const double> attributes(NodeId v) const;
    std::size_t type_dim(NodeTypeId k) const;
    const std::vector<std::size_t>& type_dims() const { return type_dims_; }
    const std::vector<NodeId>& nodes_of_type(NodeTypeId k) const;

    const std::vector<Triple>& edges() const { return edges_; }
    bool has_edge(const Triple& t) const { return edge_set_.contains(t); }
    const TripleSet& edge_set() const { return edge_set_; }

    std::span<const NodeId> in_neighbors(NodeId v, RelationId r) const;

    /// Incoming edges of v across all relations, in (rel, src) order.
    std::span<const Triple> in_edges(NodeId v) const;
    std::size_t in_degree(NodeId v) const { return in_edges(v).size(); }

    /// Same nodes, different edge set (used to build the propagation graph
    /// from the training split).
    HeteroGraph with_edges(std::vector<Triple> edges) const;

    /// Rebuilds the incoming index from the edge list and compares.
    bool in_index_consistent() const;

    std::vector<NodeRecord> node_records() const;

    friend bool operator==(const HeteroGraph& a, const HeteroGraph& b);

private:
    void check_node(NodeId v) const;
    void build_index();

    std::vector<NodeTypeId> types_;
    std::vector<double> attr_data_;
    std::vector<std::size_t> attr_offset_;
    std::vector<std::size_t> type_dims_;
    std::vector<std::vector<NodeId>> nodes_by_type_;
    std::size_t relation_count_ = 0;
    std::vector<Triple> edges_;
    TripleSet edge_set_;
    // CSR over key dst * |R| + rel.
    std::vector<std::size_t> in_offset_;
    std::vector<NodeId> in_src_;
    std::vector<Triple> in_triples_;
};

struct LoadOptions {
    bool add_reverse = false;
    // 0 means "max relation id in the file + 1".
    std::size_t relation_count = 0;
};

/// Reads nodes.tsv / edges.tsv (header line required in both).
HeteroGraph load_graph(const std::string& nodes_path, const std::string& edges_path,
                       const LoadOptions& options = {});

std::vector<NodeRecord> load_nodes(const std::string& nodes_path);
std::vector<Triple> load_edges(const std::string& edges_path);

void save_nodes(const HeteroGraph& g, const std::string& nodes_path);
void save_edges(std::span<const Triple> edges, const std::string& edges_path);
void save_graph(const HeteroGraph& g, const std::string& nodes_path, const std::string& edges_path);

/// Appends (dst, rel + R, src) for every edge.
std::vector<Triple> with_reverse_edges(std::span<const Triple> edges, std::size_t relation_count);

struct SyntheticSpec {
    std::vector<std::size_t> node_counts{100, 100};
    std::vector<std::size_t> attr_dims{8, 8};
    std::size_t relations = 3;
    std::size_t edges = 1000;
    std::size_t communities = 4;
    double noise = 0.05;
    double attr_noise = 0.3;
    std::size_t latent_dim = 2;
    double latent_strength = 6.0;
    // scale of the latent coordinates copied into attribute slots after the
    // community one-hot (0 keeps the latent structure hidden)
    double latent_attr = 2.0;
    std::uint64_t seed = 7;

    void validate() const;
};

struct SyntheticGraph {
    HeteroGraph graph;
    std::vector<Triple> held_out;
    std::vector<std::size_t> community;
};

/// Community-structured generator. A tenth of the generated positives are
/// withheld and returned separately; they never appear in the graph.
SyntheticGraph generate_synthetic(const SyntheticSpec& spec);

/// Source and destination node types of relation r in generated graphs.
std::pair<NodeTypeId, NodeTypeId> synthetic_relation_types(std::size_t r, std::size_t type_count);

}  // namespace relgnn
