#pragma once

#include "dynstack/error.hpp"
#include "dynstack/parallel.hpp"
#include "dynstack/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dynstack {

using NodeId = std::size_t;
using ClassIndex = int;

struct Neighbor {
    NodeId node;
    double weight;
};

/// Undirected weighted graph with optional node labels. Immutable once built;
/// label changes produce a new graph.
class Graph {
public:
    class Builder;

    Graph() = default;

    std::size_t node_count() const noexcept { return ids_.size(); }
    std::size_t edge_count() const noexcept { return edge_count_; }
    bool empty() const noexcept { return ids_.empty(); }

    std::span<const Neighbor> neighbors(NodeId v) const { return adjacency_.at(v); }

    /// Weight of edge {a, b}, or 0 if absent.
    double weight(NodeId a, NodeId b) const {
        const auto& adj = adjacency_.at(a);
        auto it = std::lower_bound(adj.begin(), adj.end(), b,
                                   [](const Neighbor& n, NodeId x) { return n.node < x; });
        return (it != adj.end() && it->node == b) ? it->weight : 0.0;
    }

    const std::string& id(NodeId v) const { return ids_.at(v); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    std::optional<NodeId> find(std::string_view id) const {
        auto it = index_.find(std::string(id));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<ClassIndex> label(NodeId v) const { return labels_.at(v); }
    const std::vector<std::optional<ClassIndex>>& labels() const noexcept { return labels_; }
    int class_count() const noexcept { return static_cast<int>(class_names_.size()); }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }

    /// Copy of this graph carrying a different labelling.
    Graph with_labels(std::vector<std::optional<ClassIndex>> labels,
                      std::vector<std::string> class_names) const {
        if (labels.size() != node_count())
            throw InvalidArgument("label vector length does not match node count");
        for (const auto& l : labels)
            if (l && (*l < 0 || *l >= static_cast<int>(class_names.size())))
                throw InvalidArgument("label index out of range");
        Graph g = *this;
        g.labels_ = std::move(labels);
        g.class_names_ = std::move(class_names);
        return g;
    }

    /// Induced subgraph on `keep` (indices in any order; result preserves
    /// ascending original order).
    Graph induced(std::vector<NodeId> keep) const;

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, NodeId> index_;
    std::vector<std::vector<Neighbor>> adjacency_;
    std::vector<std::optional<ClassIndex>> labels_;
    std::vector<std::string> class_names_;
    std::size_t edge_count_ = 0;
};

class Graph::Builder {
public:
    NodeId intern(std::string_view id) {
        auto [it, inserted] = index_.try_emplace(std::string(id), ids_.size());
        if (inserted) {
            ids_.emplace_back(id);
            edges_.emplace_back();
        }
        return it->second;
    }

    /// Adds {a, b}; repeated pairs accumulate weight.
    void add_edge(std::string_view a, std::string_view b, double w = 1.0) {
        if (a == b) throw InvalidArgument("self-loop on node '" + std::string(a) + "'");
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("edge weight must be finite and nonnegative");
        const NodeId i = intern(a);
        const NodeId j = intern(b);
        edges_[i][j] += w;
        edges_[j][i] += w;
    }

    Graph build() && {
        Graph g;
        g.adjacency_.resize(ids_.size());
        std::size_t half_edges = 0;
        for (NodeId v = 0; v < ids_.size(); ++v) {
            auto& adj = g.adjacency_[v];
            adj.reserve(edges_[v].size());
            for (const auto& [u, w] : edges_[v]) adj.push_back({u, w});
            half_edges += adj.size();
        }
        g.edge_count_ = half_edges / 2;
        g.labels_.assign(ids_.size(), std::nullopt);
        g.ids_ = std::move(ids_);
        g.index_ = std::move(index_);
        return g;
    }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, NodeId> index_;
    std::vector<std::map<NodeId, double>> edges_;
};

inline Graph Graph::induced(std::vector<NodeId> keep) const {
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    constexpr NodeId absent = std::numeric_limits<NodeId>::max();
    std::vector<NodeId> remap(node_count(), absent);
    for (NodeId k = 0; k < keep.size(); ++k) remap.at(keep[k]) = k;

    Graph g;
    g.class_names_ = class_names_;
    g.ids_.reserve(keep.size());
    g.adjacency_.resize(keep.size());
    g.labels_.reserve(keep.size());
    std::size_t half_edges = 0;
    for (NodeId k = 0; k < keep.size(); ++k) {
        const NodeId old = keep[k];
        g.ids_.push_back(ids_[old]);
        g.index_.emplace(ids_[old], k);
        g.labels_.push_back(labels_[old]);
        for (const Neighbor& n : adjacency_[old]) {
            if (remap[n.node] != absent) g.adjacency_[k].push_back({remap[n.node], n.weight});
        }
        half_edges += g.adjacency_[k].size();
    }
    g.edge_count_ = half_edges / 2;
    return g;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        const std::size_t b = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
        if (i > b) out.push_back(s.substr(b, i - b));
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

inline std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
    return lines;
}

} // namespace detail

/// Parses `id1 id2 [weight]` lines; blank lines and `#` comments are skipped.
inline Graph parse_edge_list(std::span<const std::string> lines) {
    Graph::Builder builder;
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto line = detail::trim(lines[n]);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = detail::split_ws(line);
        if (fields.size() != 2 && fields.size() != 3)
            throw ParseError(n + 1, "expected 'id1 id2 [weight]', got " + std::to_string(fields.size()) + " fields");
        double w = 1.0;
        if (fields.size() == 3) {
            auto parsed = detail::parse_double(fields[2]);
            if (!parsed || !std::isfinite(*parsed)) throw ParseError(n + 1, "non-numeric weight '" + std::string(fields[2]) + "'");
            if (*parsed < 0.0) throw ParseError(n + 1, "negative weight");
            w = *parsed;
        }
        if (fields[0] == fields[1]) throw ParseError(n + 1, "self-loop on '" + std::string(fields[0]) + "'");
        builder.add_edge(fields[0], fields[1], w);
    }
    return std::move(builder).build();
}

inline Graph parse_edge_list(std::istream& in) {
    const auto lines = detail::read_lines(in);
    return parse_edge_list(lines);
}

struct LabelRow {
    std::string node_id;
    std::string label;
};

/// Reads `node_id,label` rows; an initial `node_id,label` header is skipped.
inline std::vector<LabelRow> read_label_csv(std::istream& in) {
    std::vector<LabelRow> rows;
    std::size_t n = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++n;
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos) throw ParseError(n, "expected 'node_id,label'");
        const auto id = detail::trim(line.substr(0, comma));
        const auto label = detail::trim(line.substr(comma + 1));
        if (n == 1 && id == "node_id" && label == "label") continue;
        if (id.empty() || label.empty()) throw ParseError(n, "empty node id or label");
        rows.push_back({std::string(id), std::string(label)});
    }
    return rows;
}

/// Labels nodes from (id, label) rows. Class indices follow the sorted label
/// vocabulary; nodes absent from `rows` stay unlabelled.
inline Graph attach_labels(const Graph& graph, std::span<const LabelRow> rows) {
    std::set<std::string> vocabulary;
    for (const auto& r : rows) vocabulary.insert(r.label);
    std::vector<std::string> names(vocabulary.begin(), vocabulary.end());

    std::vector<std::optional<std::string_view>> assigned(graph.node_count());
    std::vector<std::optional<ClassIndex>> labels(graph.node_count());
    for (const auto& r : rows) {
        const auto v = graph.find(r.node_id);
        if (!v) throw InvalidArgument("label for unknown node '" + r.node_id + "'");
        if (assigned[*v] && *assigned[*v] != r.label)
            throw InvalidArgument("conflicting labels for node '" + r.node_id + "'");
        assigned[*v] = r.label;
        labels[*v] = static_cast<ClassIndex>(std::lower_bound(names.begin(), names.end(), r.label) - names.begin());
    }
    return graph.with_labels(std::move(labels), std::move(names));
}

/// Connected components as ascending node lists, ordered by smallest member.
inline std::vector<std::vector<NodeId>> connected_components(const Graph& graph) {
    std::vector<std::vector<NodeId>> components;
    std::vector<bool> seen(graph.node_count(), false);
    for (NodeId start = 0; start < graph.node_count(); ++start) {
        if (seen[start]) continue;
        std::vector<NodeId> members{start};
        seen[start] = true;
        for (std::size_t head = 0; head < members.size(); ++head) {
            for (const Neighbor& n : graph.neighbors(members[head])) {
                if (!seen[n.node]) {
                    seen[n.node] = true;
                    members.push_back(n.node);
                }
            }
        }
        std::sort(members.begin(), members.end());
        components.push_back(std::move(members));
    }
    return components;
}

/// Induced subgraph on the largest component; ties go to the component
/// holding the smallest node index.
inline Graph largest_connected_component(const Graph& graph) {
    if (graph.empty()) throw InvalidArgument("largest_connected_component: empty graph");
    auto components = connected_components(graph);
    std::size_t best = 0;
    for (std::size_t c = 1; c < components.size(); ++c)
        if (components[c].size() > components[best].size()) best = c;
    return graph.induced(std::move(components[best]));
}

enum class CovariateKind { degree, closeness_centrality };

inline std::string_view to_string(CovariateKind k) {
    return k == CovariateKind::degree ? "degree" : "closeness";
}

inline CovariateKind parse_covariate_kind(std::string_view s) {
    if (s == "degree") return CovariateKind::degree;
    if (s == "closeness" || s == "closeness_centrality") return CovariateKind::closeness_centrality;
    throw InvalidArgument("unknown covariate kind '" + std::string(s) + "'");
}

struct NodeCovariate {
    CovariateKind kind;
    std::vector<double> values;
};

inline NodeCovariate degree(const Graph& graph) {
    NodeCovariate c{CovariateKind::degree, std::vector<double>(graph.node_count())};
    for (NodeId v = 0; v < graph.node_count(); ++v) c.values[v] = static_cast<double>(graph.neighbors(v).size());
    return c;
}

/// Unweighted hop distances from `source`; unreachable nodes get -1.
inline std::vector<long> bfs_distances(const Graph& graph, NodeId source) {
    std::vector<long> dist(graph.node_count(), -1);
    std::vector<NodeId> frontier{source};
    dist[source] = 0;
    for (std::size_t head = 0; head < frontier.size(); ++head) {
        const NodeId v = frontier[head];
        for (const Neighbor& n : graph.neighbors(v)) {
            if (dist[n.node] < 0) {
                dist[n.node] = dist[v] + 1;
                frontier.push_back(n.node);
            }
        }
    }
    return dist;
}

/// 1 / (sum of hop distances to every other node). Edge weights are ignored.
/// Throws on disconnected graphs.
inline NodeCovariate closeness_centrality(const Graph& graph, unsigned threads = 1) {
    const std::size_t n = graph.node_count();
    NodeCovariate c{CovariateKind::closeness_centrality, std::vector<double>(n, 0.0)};
    if (n <= 1) return c;
    std::vector<char> disconnected(n, 0);
    parallel_for(n, threads, [&](std::size_t v) {
        const auto dist = bfs_distances(graph, v);
        long total = 0;
        for (long d : dist) {
            if (d < 0) {
                disconnected[v] = 1;
                return;
            }
            total += d;
        }
        c.values[v] = 1.0 / static_cast<double>(total);
    });
    if (std::find(disconnected.begin(), disconnected.end(), 1) != disconnected.end())
        throw InvalidArgument("closeness centrality needs a connected graph; reduce to the largest connected component first");
    return c;
}

struct SplitSpec {
    double test_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<NodeId> train; ///< ascending
    std::vector<NodeId> test;  ///< ascending
    Graph working;             ///< input graph with test labels masked
};

/// Random train/test partition with |test| = round(N * test_fraction).
inline Split split_nodes(const Graph& graph, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
        throw InvalidArgument("test fraction must lie strictly between 0 and 1");
    for (NodeId v = 0; v < graph.node_count(); ++v)
        if (!graph.label(v)) throw InvalidArgument("split_nodes: node '" + graph.id(v) + "' is unlabelled");

    const std::size_t n = graph.node_count();
    std::vector<NodeId> order(n);
    for (NodeId v = 0; v < n; ++v) order[v] = v;
    Rng rng(spec.seed);
    rng.shuffle(std::span<NodeId>(order));

    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.test_fraction));
    Split s;
    s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(s.test.begin(), s.test.end());
    std::sort(s.train.begin(), s.train.end());

    auto labels = graph.labels();
    for (NodeId v : s.test) labels[v].reset();
    s.working = graph.with_labels(std::move(labels), graph.class_names());
    return s;
}

inline void write_covariate_csv(std::ostream& out, const Graph& graph, const NodeCovariate& covariate) {
    out << "node_id,value\n";
    std::ostringstream buf;
    buf.precision(17);
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        buf.str({});
        buf << covariate.values.at(v);
        out << graph.id(v) << ',' << buf.str() << '\n';
    }
}

} // namespace dynstack
