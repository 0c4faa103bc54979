#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relgnn/graph.hpp"
#include "relgnn/tensor.hpp"

namespace relgnn {

struct ModelConfig {
    std::size_t layers = 2;
    std::size_t hidden = 16;
    std::size_t heads = 2;
    std::size_t bases = 2;
    double slope = 0.2;
    std::size_t relations = 0;
    std::vector<std::size_t> input_dims;
    // false: fixed 1/|N(v)| weights over all incoming edges (R-GCN style mean).
    bool attention = true;
    std::uint64_t seed = 0;

    void validate() const;
    void check_graph(const HeteroGraph& g) const;
};

ModelConfig config_for_graph(ModelConfig base, const HeteroGraph& g);

struct LayerParameters {
    std::vector<Matrix> basis;  // B matrices, d x d
    Matrix coeff;               // |R| x B; W_r = sum_b coeff(r, b) basis[b]
    Matrix self;                // d x d
    std::vector<Matrix> attn;   // one 3d x 1 vector per head

    friend bool operator==(const LayerParameters&, const LayerParameters&) = default;
};

/// All learnable arrays. Matrices act on row vectors: a message from u over
/// relation r is h_u * W_r.
struct ModelParameters {
    std::vector<Matrix> encoder;       // per node type, input_dim x d
    std::vector<Matrix> encoder_bias;  // per node type, 1 x d
    std::vector<LayerParameters> layers;
    Matrix relation;  // |R| x d; attention relation state and DistMult diagonal
    Matrix fusion;    // d x heads; column l is the fusion attention vector of head l

    struct Named {
        std::string name;
        Matrix* value;
    };
    std::vector<Named> named();
    std::vector<const Matrix*> arrays() const;
    std::size_t count() const;

    friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

/// Glorot-uniform matrices and attention vectors, zero biases.
ModelParameters init_parameters(const ModelConfig& cfg);

/// Parameters of one layer that encode relation messages: B*d*d + |R|*B.
std::size_t layer_relation_parameter_count(const LayerParameters& layer);

/// Index arrays for a graph laid out for the vectorised forward pass. Edges
/// are ordered by destination, then relation, then source, so the incoming
/// edges of each node are one contiguous block.
struct GraphTensors {
    std::size_t nodes = 0;
    std::size_t relations = 0;
    std::vector<Matrix> type_features;       // per type: rows follow nodes_of_type
    std::vector<std::size_t> stacked_row;    // node -> row in the stacked per-type output
    std::vector<Triple> edges;
    std::vector<std::size_t> edge_dst;
    std::vector<std::size_t> edge_rel;
    std::vector<std::size_t> edge_message;   // rel * nodes + src
    std::vector<std::size_t> node_offset;    // nodes + 1
    std::vector<std::size_t> group_offset;   // boundaries of non-empty blocks
    Matrix inv_degree;                        // E x 1, 1 / in_degree(dst)
};

GraphTensors make_graph_tensors(const HeteroGraph& g);

/// Tape handles mirroring ModelParameters.
struct ParameterVars {
    std::vector<Var> encoder;
    std::vector<Var> encoder_bias;
    struct Layer {
        std::vector<Var> basis;
        Var coeff;
        Var self;
        std::vector<Var> attn;
    };
    std::vector<Layer> layers;
    Var relation;
    Var fusion;

    std::vector<Var> all() const;
};

ParameterVars bind_parameters(Tape& tape, const ModelParameters& p, bool requires_grad);

struct LayerOutput {
    Var states;
    std::vector<Var> logits;   // per head, E x 1, after leaky-relu
    std::vector<Var> weights;  // per head, E x 1
};

struct ForwardResult {
    std::vector<Var> states;  // h^(0) .. h^(T)
    Var final;
    std::vector<LayerOutput> layers;
};

Var attribute_embed(const ParameterVars& p, const GraphTensors& gt, double slope);
LayerOutput propagate_layer(const ParameterVars& p, const GraphTensors& gt, Var prev, std::size_t t,
                            const ModelConfig& cfg);
Var final_embedding(const ParameterVars& p, Var h0, Var last, double slope);
ForwardResult forward(const ParameterVars& p, const GraphTensors& gt, const ModelConfig& cfg);

/// DistMult probabilities sigmoid(sum_k h_src[k] * h_rel[k] * h_dst[k]) as a
/// column, one row per triple.
Var score_triples(Var final, Var relation, std::span<const Triple> triples);
double score(std::span<const double> h_src, std::span<const double> h_rel, std::span<const double> h_dst);

/// Plain-value forward pass for inference and diagnostics.
struct Embeddings {
    std::vector<Matrix> states;
    Matrix final;
    Matrix relation;
    // attention[t][l]: weights over GraphTensors edge order, layer t+1, head l
    std::vector<std::vector<Matrix>> attention;
    std::vector<std::vector<Matrix>> logits;
};

Embeddings compute_embeddings(const ModelParameters& p, const GraphTensors& gt, const ModelConfig& cfg);

/// Frozen final embeddings; scores triples without a tape.
class Scorer {
public:
    Scorer() = default;
    Scorer(Matrix final, Matrix relation) : final_(std::move(final)), relation_(std::move(relation)) {}
    double operator()(const Triple& t) const;
    const Matrix& final() const { return final_; }
    const Matrix& relation() const { return relation_; }

private:
    Matrix final_;
    Matrix relation_;
};

Scorer make_scorer(const ModelParameters& p, const GraphTensors& gt, const ModelConfig& cfg);

/// Attention slice of node v: the weights of its incoming edges.
std::span<const double> node_attention(const Embeddings& e, const GraphTensors& gt, NodeId v,
                                       std::size_t layer, std::size_t head);

struct EntropyRow {
    NodeId node;
    std::size_t layer;  // 1-based
    std::size_t in_degree;
    double entropy;     // natural log, mean over heads
};

/// One row per (layer, node with at least one incoming edge).
std::vector<EntropyRow> attention_entropy(const Embeddings& e, const GraphTensors& gt);

double entropy(std::span<const double> weights);

}  // namespace relgnn
