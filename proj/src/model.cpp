#include "relgnn/model.hpp"

#include <algorithm>
#include <cmath>

#include "relgnn/error.hpp"
#include "relgnn/rng.hpp"

namespace relgnn {

void ModelConfig::validate() const {
    auto bad = [](const std::string& why) { fail(ErrorKind::config, "model config: " + why); };
    if (layers < 1) bad("layers must be >= 1");
    if (hidden < 1) bad("hidden must be >= 1");
    if (heads < 1) bad("heads must be >= 1");
    if (bases < 1) bad("bases must be >= 1");
    if (relations < 1) bad("relation count must be >= 1");
    if (bases > relations) {
        bad("bases (" + std::to_string(bases) + ") must not exceed the relation count (" +
            std::to_string(relations) + ")");
    }
    if (!(slope > 0.0 && slope < 1.0)) bad("slope must lie in (0, 1)");
    if (input_dims.empty()) bad("at least one node type input dimension is required");
}

void ModelConfig::check_graph(const HeteroGraph& g) const {
    if (g.num_relations() != relations) {
        fail(ErrorKind::invalid_argument, "model expects " + std::to_string(relations) +
                                              " relations, graph has " + std::to_string(g.num_relations()));
    }
    if (g.type_dims() != input_dims) {
        fail(ErrorKind::invalid_argument, "graph attribute schema does not match the model input dimensions");
    }
}

ModelConfig config_for_graph(ModelConfig base, const HeteroGraph& g) {
    base.relations = g.num_relations();
    base.input_dims = g.type_dims();
    return base;
}

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (auto& x : m.data) x = uniform_real(rng, -limit, limit);
    return m;
}

}  // namespace

ModelParameters init_parameters(const ModelConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, "init"));
    const std::size_t d = cfg.hidden;
    ModelParameters p;
    for (auto in : cfg.input_dims) {
        p.encoder.push_back(glorot(in, d, rng));
        p.encoder_bias.emplace_back(1, d);
    }
    for (std::size_t t = 0; t < cfg.layers; ++t) {
        LayerParameters layer;
        for (std::size_t b = 0; b < cfg.bases; ++b) layer.basis.push_back(glorot(d, d, rng));
        layer.coeff = glorot(cfg.relations, cfg.bases, rng);
        layer.self = glorot(d, d, rng);
        for (std::size_t l = 0; l < cfg.heads; ++l) layer.attn.push_back(glorot(3 * d, 1, rng));
        p.layers.push_back(std::move(layer));
    }
    p.relation = glorot(cfg.relations, d, rng);
    p.fusion = glorot(d, cfg.heads, rng);
    return p;
}

std::vector<ModelParameters::Named> ModelParameters::named() {
    std::vector<Named> out;
    for (std::size_t k = 0; k < encoder.size(); ++k) {
        out.push_back({"encoder." + std::to_string(k), &encoder[k]});
        out.push_back({"encoder_bias." + std::to_string(k), &encoder_bias[k]});
    }
    for (std::size_t t = 0; t < layers.size(); ++t) {
        const std::string prefix = "layer" + std::to_string(t) + ".";
        auto& layer = layers[t];
        for (std::size_t b = 0; b < layer.basis.size(); ++b) {
            out.push_back({prefix + "basis" + std::to_string(b), &layer.basis[b]});
        }
        out.push_back({prefix + "coeff", &layer.coeff});
        out.push_back({prefix + "self", &layer.self});
        for (std::size_t l = 0; l < layer.attn.size(); ++l) {
            out.push_back({prefix + "attn" + std::to_string(l), &layer.attn[l]});
        }
    }
    out.push_back({"relation", &relation});
    out.push_back({"fusion", &fusion});
    return out;
}

std::vector<const Matrix*> ModelParameters::arrays() const {
    auto named_params = const_cast<ModelParameters*>(this)->named();
    std::vector<const Matrix*> out;
    for (const auto& n : named_params) out.push_back(n.value);
    return out;
}

std::size_t ModelParameters::count() const {
    std::size_t n = 0;
    for (const auto* m : arrays()) n += m->size();
    return n;
}

std::size_t layer_relation_parameter_count(const LayerParameters& layer) {
    std::size_t n = layer.coeff.size();
    for (const auto& b : layer.basis) n += b.size();
    return n;
}

GraphTensors make_graph_tensors(const HeteroGraph& g) {
    GraphTensors gt;
    gt.nodes = g.num_nodes();
    gt.relations = g.num_relations();
    gt.stacked_row.assign(gt.nodes, 0);
    std::size_t row = 0;
    for (NodeTypeId k = 0; k < g.num_node_types(); ++k) {
        const auto& members = g.nodes_of_type(k);
        Matrix x(members.size(), g.type_dim(k));
        for (std::size_t i = 0; i < members.size(); ++i) {
            auto a = g.attributes(members[i]);
            std::copy(a.begin(), a.end(), x.row_span(i).begin());
            gt.stacked_row[members[i]] = row++;
        }
        gt.type_features.push_back(std::move(x));
    }
    gt.node_offset.push_back(0);
    gt.group_offset.push_back(0);
    for (NodeId v = 0; v < gt.nodes; ++v) {
        for (const auto& e : g.in_edges(v)) {
            gt.edges.push_back(e);
            gt.edge_dst.push_back(e.dst);
            gt.edge_rel.push_back(e.rel);
            gt.edge_message.push_back(static_cast<std::size_t>(e.rel) * gt.nodes + e.src);
        }
        gt.node_offset.push_back(gt.edges.size());
        if (gt.edges.size() != gt.group_offset.back()) gt.group_offset.push_back(gt.edges.size());
    }
    gt.inv_degree = Matrix(gt.edges.size(), 1);
    for (std::size_t i = 0; i < gt.edges.size(); ++i) {
        const auto v = gt.edge_dst[i];
        gt.inv_degree.data[i] = 1.0 / static_cast<double>(gt.node_offset[v + 1] - gt.node_offset[v]);
    }
    return gt;
}

std::vector<Var> ParameterVars::all() const {
    std::vector<Var> out;
    for (std::size_t k = 0; k < encoder.size(); ++k) {
        out.push_back(encoder[k]);
        out.push_back(encoder_bias[k]);
    }
    for (const auto& layer : layers) {
        out.insert(out.end(), layer.basis.begin(), layer.basis.end());
        out.push_back(layer.coeff);
        out.push_back(layer.self);
        out.insert(out.end(), layer.attn.begin(), layer.attn.end());
    }
    out.push_back(relation);
    out.push_back(fusion);
    return out;
}

ParameterVars bind_parameters(Tape& tape, const ModelParameters& p, bool requires_grad) {
    ParameterVars v;
    for (std::size_t k = 0; k < p.encoder.size(); ++k) {
        v.encoder.push_back(tape.leaf(p.encoder[k], requires_grad));
        v.encoder_bias.push_back(tape.leaf(p.encoder_bias[k], requires_grad));
    }
    for (const auto& layer : p.layers) {
        ParameterVars::Layer lv;
        for (const auto& b : layer.basis) lv.basis.push_back(tape.leaf(b, requires_grad));
        lv.coeff = tape.leaf(layer.coeff, requires_grad);
        lv.self = tape.leaf(layer.self, requires_grad);
        for (const auto& a : layer.attn) lv.attn.push_back(tape.leaf(a, requires_grad));
        v.layers.push_back(std::move(lv));
    }
    v.relation = tape.leaf(p.relation, requires_grad);
    v.fusion = tape.leaf(p.fusion, requires_grad);
    return v;
}

Var attribute_embed(const ParameterVars& p, const GraphTensors& gt, double slope) {
    Tape& tape = *p.relation.tape();
    if (gt.type_features.size() != p.encoder.size()) {
        fail(ErrorKind::invalid_argument, "graph has " + std::to_string(gt.type_features.size()) +
                                              " node types, model has " + std::to_string(p.encoder.size()) +
                                              " attribute encoders");
    }
    std::vector<Var> parts;
    for (std::size_t k = 0; k < gt.type_features.size(); ++k) {
        const Matrix& x = gt.type_features[k];
        if (x.rows == 0) continue;
        if (x.cols != p.encoder[k].rows()) {
            fail(ErrorKind::invalid_argument, "node type " + std::to_string(k) + " attributes have dimension " +
                                                  std::to_string(x.cols) + ", encoder expects " +
                                                  std::to_string(p.encoder[k].rows()));
        }
        parts.push_back(add(matmul(tape.constant(x), p.encoder[k]), p.encoder_bias[k]));
    }
    Var stacked = stack_rows(parts);
    return leaky_relu(gather_rows(stacked, gt.stacked_row), slope);
}

LayerOutput propagate_layer(const ParameterVars& p, const GraphTensors& gt, Var prev, std::size_t t,
                            const ModelConfig& cfg) {
    if (t < 1 || t > p.layers.size()) {
        fail(ErrorKind::invalid_argument, "layer index " + std::to_string(t) + " outside [1, " +
                                              std::to_string(p.layers.size()) + "]");
    }
    const auto& layer = p.layers[t - 1];
    Tape& tape = *prev.tape();
    LayerOutput out;

    Var self_term = matmul(prev, layer.self);
    if (gt.edges.empty()) {
        out.states = leaky_relu(self_term, cfg.slope);
        return out;
    }
    std::vector<Var> per_relation;
    for (std::size_t r = 0; r < gt.relations; ++r) {
        per_relation.push_back(matmul(prev, basis_combine(layer.basis, layer.coeff, r)));
    }
    Var messages = gather_rows(stack_rows(per_relation), gt.edge_message);

    Var aggregate;
    if (cfg.attention) {
        // [W_self h_v || h_r || W_r h_u] per incoming edge
        std::vector<Var> pieces{gather_rows(self_term, gt.edge_dst), gather_rows(p.relation, gt.edge_rel),
                                messages};
        Var joint = concat_rows(pieces);
        std::vector<Var> heads;
        for (const auto& a : layer.attn) {
            Var logits = leaky_relu(matmul(joint, a), cfg.slope);
            Var weights = masked_softmax(logits, gt.group_offset);
            heads.push_back(segment_sum(elementwise_mul(messages, weights), gt.edge_dst, gt.nodes));
            out.logits.push_back(logits);
            out.weights.push_back(weights);
        }
        aggregate = heads[0];
        for (std::size_t l = 1; l < heads.size(); ++l) aggregate = add(aggregate, heads[l]);
        if (heads.size() > 1) aggregate = scale(aggregate, 1.0 / static_cast<double>(heads.size()));
    } else {
        Var weights = tape.constant(gt.inv_degree);
        aggregate = segment_sum(elementwise_mul(messages, weights), gt.edge_dst, gt.nodes);
        out.weights.push_back(weights);
    }
    out.states = leaky_relu(add(aggregate, self_term), cfg.slope);
    return out;
}

Var final_embedding(const ParameterVars& p, Var h0, Var last, double slope) {
    // Two-way softmax over (attr, graph) logits == sigmoid of their difference.
    Var attr_logit = leaky_relu(matmul(h0, p.fusion), slope);
    Var graph_logit = leaky_relu(matmul(last, p.fusion), slope);
    Var alpha_attr = sigmoid(sub(attr_logit, graph_logit));  // n x heads
    const auto heads = static_cast<double>(p.fusion.cols());
    Var mean_attr = scale(sum_cols(alpha_attr), 1.0 / heads);
    Var mean_graph = affine(mean_attr, -1.0, 1.0);
    return add(elementwise_mul(h0, mean_attr), elementwise_mul(last, mean_graph));
}

ForwardResult forward(const ParameterVars& p, const GraphTensors& gt, const ModelConfig& cfg) {
    ForwardResult out;
    out.states.push_back(attribute_embed(p, gt, cfg.slope));
    for (std::size_t t = 1; t <= p.layers.size(); ++t) {
        out.layers.push_back(propagate_layer(p, gt, out.states.back(), t, cfg));
        out.states.push_back(out.layers.back().states);
    }
    out.final = final_embedding(p, out.states.front(), out.states.back(), cfg.slope);
    return out;
}

Var score_triples(Var final, Var relation, std::span<const Triple> triples) {
    std::vector<std::size_t> src(triples.size()), rel(triples.size()), dst(triples.size());
    for (std::size_t i = 0; i < triples.size(); ++i) {
        src[i] = triples[i].src;
        rel[i] = triples[i].rel;
        dst[i] = triples[i].dst;
    }
    Var prod = elementwise_mul(elementwise_mul(gather_rows(final, src), gather_rows(relation, rel)),
                               gather_rows(final, dst));
    return sigmoid(sum_cols(prod));
}

double score(std::span<const double> h_src, std::span<const double> h_rel, std::span<const double> h_dst) {
    if (h_src.size() != h_rel.size() || h_dst.size() != h_rel.size()) {
        fail(ErrorKind::invalid_argument, "score: embedding dimensions differ");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < h_rel.size(); ++k) s += h_src[k] * h_rel[k] * h_dst[k];
    return sigmoid(s);
}

Embeddings compute_embeddings(const ModelParameters& p, const GraphTensors& gt, const ModelConfig& cfg) {
    Tape tape;
    auto vars = bind_parameters(tape, p, false);
    auto fwd = forward(vars, gt, cfg);
    Embeddings e;
    for (const auto& s : fwd.states) e.states.push_back(s.value());
    e.final = fwd.final.value();
    e.relation = p.relation;
    for (const auto& layer : fwd.layers) {
        std::vector<Matrix> w, lg;
        for (const auto& x : layer.weights) w.push_back(x.value());
        for (const auto& x : layer.logits) lg.push_back(x.value());
        e.attention.push_back(std::move(w));
        e.logits.push_back(std::move(lg));
    }
    return e;
}

double Scorer::operator()(const Triple& t) const {
    return score(final_.row_span(t.src), relation_.row_span(t.rel), final_.row_span(t.dst));
}

Scorer make_scorer(const ModelParameters& p, const GraphTensors& gt, const ModelConfig& cfg) {
    auto e = compute_embeddings(p, gt, cfg);
    return Scorer(std::move(e.final), std::move(e.relation));
}

std::span<const double> node_attention(const Embeddings& e, const GraphTensors& gt, NodeId v,
                                       std::size_t layer, std::size_t head) {
    if (v >= gt.nodes) fail(ErrorKind::invalid_argument, "node id out of range");
    if (layer < 1 || layer > e.attention.size() || head >= e.attention[layer - 1].size()) {
        fail(ErrorKind::invalid_argument, "attention layer/head out of range");
    }
    const Matrix& w = e.attention[layer - 1][head];
    if (gt.edges.empty()) return {};
    return {w.data.data() + gt.node_offset[v], gt.node_offset[v + 1] - gt.node_offset[v]};
}

double entropy(std::span<const double> weights) {
    double h = 0.0;
    for (double w : weights) {
        if (w > 0.0) h -= w * std::log(w);
    }
    return h;
}

std::vector<EntropyRow> attention_entropy(const Embeddings& e, const GraphTensors& gt) {
    std::vector<EntropyRow> rows;
    for (std::size_t t = 1; t <= e.attention.size(); ++t) {
        const std::size_t heads = e.attention[t - 1].size();
        for (NodeId v = 0; v < gt.nodes; ++v) {
            const std::size_t deg = gt.node_offset[v + 1] - gt.node_offset[v];
            if (deg == 0) continue;
            double h = 0.0;
            for (std::size_t l = 0; l < heads; ++l) h += entropy(node_attention(e, gt, v, t, l));
            rows.push_back({v, t, deg, h / static_cast<double>(heads)});
        }
    }
    return rows;
}

}  // namespace relgnn
