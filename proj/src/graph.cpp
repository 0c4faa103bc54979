#include "relgnn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "relgnn/error.hpp"
#include "relgnn/rng.hpp"
#include "text_util.hpp"

namespace relgnn {

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
    std::uint64_t k = (static_cast<std::uint64_t>(t.src) << 32) | t.dst;
    return static_cast<std::size_t>(splitmix64(k ^ (static_cast<std::uint64_t>(t.rel) * 0x9e3779b97f4a7c15ULL)));
}

TripleSet make_triple_set(std::span<const Triple> a, std::span<const Triple> b,
                          std::span<const Triple> c) {
    TripleSet s;
    s.reserve(a.size() + b.size() + c.size());
    s.insert(a.begin(), a.end());
    s.insert(b.begin(), b.end());
    s.insert(c.begin(), c.end());
    return s;
}

HeteroGraph::HeteroGraph(std::vector<NodeRecord> nodes, std::size_t relation_count,
                         std::vector<Triple> edges)
    : relation_count_(relation_count), edges_(std::move(edges)) {
    types_.reserve(nodes.size());
    attr_offset_.reserve(nodes.size() + 1);
    attr_offset_.push_back(0);
    std::vector<bool> dim_known;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.type >= type_dims_.size()) {
            type_dims_.resize(n.type + 1, 0);
            dim_known.resize(n.type + 1, false);
        }
        if (!dim_known[n.type]) {
            type_dims_[n.type] = n.attributes.size();
            dim_known[n.type] = true;
        } else if (type_dims_[n.type] != n.attributes.size()) {
            fail(ErrorKind::invalid_argument,
                 "node " + std::to_string(i) + " of type " + std::to_string(n.type) + " has " +
                     std::to_string(n.attributes.size()) + " attributes, type dimension is " +
                     std::to_string(type_dims_[n.type]));
        }
        types_.push_back(n.type);
        attr_data_.insert(attr_data_.end(), n.attributes.begin(), n.attributes.end());
        attr_offset_.push_back(attr_data_.size());
    }
    nodes_by_type_.resize(type_dims_.size());
    for (NodeId v = 0; v < types_.size(); ++v) nodes_by_type_[types_[v]].push_back(v);

    edge_set_.reserve(edges_.size());
    for (const auto& e : edges_) {
        if (e.src >= types_.size() || e.dst >= types_.size()) {
            fail(ErrorKind::invalid_argument,
                 "edge (" + std::to_string(e.src) + ", " + std::to_string(e.rel) + ", " +
                     std::to_string(e.dst) + ") has a dangling endpoint; node count is " +
                     std::to_string(types_.size()));
        }
        if (e.rel >= relation_count_) {
            fail(ErrorKind::invalid_argument,
                 "edge relation " + std::to_string(e.rel) + " out of range; relation count is " +
                     std::to_string(relation_count_));
        }
        if (!edge_set_.insert(e).second) {
            fail(ErrorKind::invalid_argument,
                 "duplicate edge (" + std::to_string(e.src) + ", " + std::to_string(e.rel) + ", " +
                     std::to_string(e.dst) + ")");
        }
    }
    build_index();
}

void HeteroGraph::build_index() {
    const std::size_t R = relation_count_;
    const std::size_t keys = types_.size() * R;
    in_offset_.assign(keys + 1, 0);
    for (const auto& e : edges_) ++in_offset_[static_cast<std::size_t>(e.dst) * R + e.rel + 1];
    for (std::size_t k = 0; k < keys; ++k) in_offset_[k + 1] += in_offset_[k];
    in_triples_.assign(edges_.size(), Triple{});
    std::vector<std::size_t> cursor(in_offset_.begin(), in_offset_.end() - 1);
    for (const auto& e : edges_) in_triples_[cursor[static_cast<std::size_t>(e.dst) * R + e.rel]++] = e;
    for (std::size_t k = 0; k < keys; ++k) {
        std::sort(in_triples_.begin() + static_cast<std::ptrdiff_t>(in_offset_[k]),
                  in_triples_.begin() + static_cast<std::ptrdiff_t>(in_offset_[k + 1]),
                  [](const Triple& a, const Triple& b) { return a.src < b.src; });
    }
    in_src_.resize(in_triples_.size());
    std::transform(in_triples_.begin(), in_triples_.end(), in_src_.begin(),
                   [](const Triple& t) { return t.src; });
}

void HeteroGraph::check_node(NodeId v) const {
    if (v >= types_.size()) {
        fail(ErrorKind::invalid_argument, "node id " + std::to_string(v) + " out of range (" +
                                              std::to_string(types_.size()) + " nodes)");
    }
}

NodeTypeId HeteroGraph::node_type(NodeId v) const {
    check_node(v);
    return types_[v];
}

std::span<const double> HeteroGraph::attributes(NodeId v) const {
    check_node(v);
    return {attr_data_.data() + attr_offset_[v], attr_offset_[v + 1] - attr_offset_[v]};
}

std::size_t HeteroGraph::type_dim(NodeTypeId k) const {
    if (k >= type_dims_.size()) {
        fail(ErrorKind::invalid_argument, "node type " + std::to_string(k) + " out of range");
    }
    return type_dims_[k];
}

const std::vector<NodeId>& HeteroGraph::nodes_of_type(NodeTypeId k) const {
    if (k >= nodes_by_type_.size()) {
        fail(ErrorKind::invalid_argument, "node type " + std::to_string(k) + " out of range");
    }
    return nodes_by_type_[k];
}

std::span<const NodeId> HeteroGraph::in_neighbors(NodeId v, RelationId r) const {
    check_node(v);
    if (r >= relation_count_) {
        fail(ErrorKind::invalid_argument, "relation id " + std::to_string(r) + " out of range (" +
                                              std::to_string(relation_count_) + " relations)");
    }
    const std::size_t k = static_cast<std::size_t>(v) * relation_count_ + r;
    return {in_src_.data() + in_offset_[k], in_offset_[k + 1] - in_offset_[k]};
}

std::span<const Triple> HeteroGraph::in_edges(NodeId v) const {
    check_node(v);
    const std::size_t b = in_offset_[static_cast<std::size_t>(v) * relation_count_];
    const std::size_t e = in_offset_[static_cast<std::size_t>(v + 1) * relation_count_];
    return {in_triples_.data() + b, e - b};
}

HeteroGraph HeteroGraph::with_edges(std::vector<Triple> edges) const {
    return HeteroGraph(node_records(), relation_count_, std::move(edges));
}

bool HeteroGraph::in_index_consistent() const {
    HeteroGraph rebuilt;
    rebuilt.types_ = types_;
    rebuilt.relation_count_ = relation_count_;
    rebuilt.edges_ = edges_;
    rebuilt.build_index();
    return rebuilt.in_offset_ == in_offset_ && rebuilt.in_src_ == in_src_ &&
           rebuilt.in_triples_ == in_triples_;
}

std::vector<NodeRecord> HeteroGraph::node_records() const {
    std::vector<NodeRecord> out(types_.size());
    for (NodeId v = 0; v < types_.size(); ++v) {
        out[v].type = types_[v];
        auto a = attributes(v);
        out[v].attributes.assign(a.begin(), a.end());
    }
    return out;
}

bool operator==(const HeteroGraph& a, const HeteroGraph& b) {
    return a.types_ == b.types_ && a.attr_data_ == b.attr_data_ &&
           a.attr_offset_ == b.attr_offset_ && a.type_dims_ == b.type_dims_ &&
           a.relation_count_ == b.relation_count_ && a.edges_ == b.edges_;
}

// ---------------------------------------------------------------------------
// TSV io

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open " + path);
    return in;
}

[[noreturn]] void bad_line(const std::string& path, std::size_t line_no, const std::string& why) {
    fail(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": " + why);
}

// A first line that starts with a number is data, not a header.
void read_header(std::ifstream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) bad_line(path, 1, "missing header line");
    std::uint64_t id = 0;
    if (text::parse_uint(text::split(line, '\t')[0], id)) bad_line(path, 1, "missing header line");
}

}  // namespace

std::vector<NodeRecord> load_nodes(const std::string& nodes_path) {
    auto in = open_input(nodes_path);
    read_header(in, nodes_path);
    std::string line;
    std::size_t line_no = 1;
    std::vector<NodeRecord> nodes;
    std::vector<bool> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = text::split(line, '\t');
        if (fields.size() != 3 && fields.size() != 2) {
            bad_line(nodes_path, line_no, "expected 3 tab-separated fields");
        }
        std::uint64_t id = 0, type = 0;
        if (!text::parse_uint(fields[0], id)) bad_line(nodes_path, line_no, "bad node id '" + fields[0] + "'");
        if (!text::parse_uint(fields[1], type)) bad_line(nodes_path, line_no, "bad node type '" + fields[1] + "'");
        NodeRecord rec;
        rec.type = static_cast<NodeTypeId>(type);
        if (fields.size() == 3 && !fields[2].empty()) {
            for (const auto& tok : text::split(fields[2], ',')) {
                double x = 0;
                if (!text::parse_double(tok, x) || !std::isfinite(x)) {
                    bad_line(nodes_path, line_no, "bad attribute value '" + tok + "'");
                }
                rec.attributes.push_back(x);
            }
        }
        if (id >= nodes.size()) {
            nodes.resize(id + 1);
            seen.resize(id + 1, false);
        }
        if (seen[id]) bad_line(nodes_path, line_no, "duplicate node id " + fields[0]);
        seen[id] = true;
        nodes[id] = std::move(rec);
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) fail(ErrorKind::parse, nodes_path + ": node ids are not contiguous, missing " + std::to_string(i));
    }
    return nodes;
}

std::vector<Triple> load_edges(const std::string& edges_path) {
    auto in = open_input(edges_path);
    read_header(in, edges_path);
    std::string line;
    std::size_t line_no = 1;
    std::vector<Triple> edges;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = text::split(line, '\t');
        if (fields.size() != 3) bad_line(edges_path, line_no, "expected 3 tab-separated fields");
        std::uint64_t s = 0, r = 0, d = 0;
        if (!text::parse_uint(fields[0], s) || !text::parse_uint(fields[1], r) ||
            !text::parse_uint(fields[2], d) || s > UINT32_MAX || r > UINT32_MAX || d > UINT32_MAX) {
            bad_line(edges_path, line_no, "expected three non-negative integers");
        }
        edges.push_back({static_cast<NodeId>(s), static_cast<RelationId>(r), static_cast<NodeId>(d)});
    }
    return edges;
}

std::vector<Triple> with_reverse_edges(std::span<const Triple> edges, std::size_t relation_count) {
    std::vector<Triple> out(edges.begin(), edges.end());
    out.reserve(edges.size() * 2);
    for (const auto& e : edges) {
        out.push_back({e.dst, static_cast<RelationId>(e.rel + relation_count), e.src});
    }
    return out;
}

HeteroGraph load_graph(const std::string& nodes_path, const std::string& edges_path,
                       const LoadOptions& options) {
    auto nodes = load_nodes(nodes_path);
    auto edges = load_edges(edges_path);
    std::size_t R = options.relation_count;
    if (R == 0) {
        for (const auto& e : edges) R = std::max<std::size_t>(R, e.rel + 1);
        R = std::max<std::size_t>(R, 1);
    }
    if (options.add_reverse) {
        edges = with_reverse_edges(edges, R);
        R *= 2;
    }
    try {
        return HeteroGraph(std::move(nodes), R, std::move(edges));
    } catch (const Error& e) {
        fail(e.kind(), edges_path + ": " + e.what());
    }
}

void save_nodes(const HeteroGraph& g, const std::string& nodes_path) {
    std::ofstream out(nodes_path);
    if (!out) fail(ErrorKind::io, "cannot write " + nodes_path);
    out << "node_id\tnode_type_id\tattributes\n";
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        out << v << '\t' << g.node_type(v) << '\t';
        auto a = g.attributes(v);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i) out << ',';
            out << text::format_double(a[i]);
        }
        out << '\n';
    }
    if (!out) fail(ErrorKind::io, "write failed: " + nodes_path);
}

void save_edges(std::span<const Triple> edges, const std::string& edges_path) {
    std::ofstream out(edges_path);
    if (!out) fail(ErrorKind::io, "cannot write " + edges_path);
    out << "src_id\trelation_id\tdst_id\n";
    for (const auto& e : edges) out << e.src << '\t' << e.rel << '\t' << e.dst << '\n';
    if (!out) fail(ErrorKind::io, "write failed: " + edges_path);
}

void save_graph(const HeteroGraph& g, const std::string& nodes_path, const std::string& edges_path) {
    save_nodes(g, nodes_path);
    save_edges(g.edges(), edges_path);
}

}  // namespace relgnn
