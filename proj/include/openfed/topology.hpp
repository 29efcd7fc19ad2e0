#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "openfed/errors.hpp"

namespace openfed {

struct node_id {
    std::string id;
    std::string address;  // optional transport endpoint "host:port"; empty when unset

    friend bool operator==(const node_id&, const node_id&) = default;
};

// The atomic unit of a federation: one hub plus its direct members, forming
// a star. Directed edges produce one group per leader; undirected edges
// produce one gossip neighborhood per node. A node may appear in several
// groups (member of its parent's, hub of its own).
struct federated_group {
    std::uint32_t group_id = 0;
    std::string hub;
    std::vector<std::string> members;  // sorted, never contains the hub
    int depth = 0;                     // hub's longest distance from a directed root
    bool gossip = false;               // built from undirected edges

    friend bool operator==(const federated_group&, const federated_group&) = default;
};

enum class diagnostic_severity { warning, error };

struct diagnostic {
    diagnostic_severity severity = diagnostic_severity::warning;
    std::string kind;    // "isolated_node" | "directed_cycle"
    std::string message;
    std::vector<std::string> nodes;
};

// Directed edges express leadership (leader -> follower); undirected edges
// express decentralized neighborhoods. Graphs are built single-threaded and
// treated as frozen afterwards.
class topology_graph {
public:
    using edge_set = std::set<std::pair<std::string, std::string>>;

    void add_node(const node_id& n);
    void add_edge(const std::string& leader, const std::string& follower, bool directed = true);

    bool has_node(const std::string& id) const { return nodes_.count(id) != 0; }
    std::size_t node_count() const { return nodes_.size(); }

    // id -> address (possibly empty)
    const std::map<std::string, std::string>& nodes() const { return nodes_; }
    const std::string& address_of(const std::string& id) const;

    const edge_set& directed_edges() const { return directed_; }
    // stored normalized with first < second
    const edge_set& undirected_edges() const { return undirected_; }

    friend bool operator==(const topology_graph&, const topology_graph&) = default;

private:
    std::map<std::string, std::string> nodes_;
    edge_set directed_;
    edge_set undirected_;
};

// Splits the graph into its atomic star-shaped groups. Every node with
// out-degree >= 1 hubs a group over its followers; every node with an
// undirected neighbor hubs a gossip group over its neighborhood. Output is
// sorted by (depth descending, hub id, directed before gossip) and group ids
// are assigned in that order, so the result is bit-stable across runs.
// Throws cyclic_leadership when the directed edges contain a cycle.
std::vector<federated_group> decompose(const topology_graph& g);

// Structural diagnostics: directed cycles (error) and nodes that take part
// in no group (warning). Diagnostics are data, never thrown.
std::vector<diagnostic> validate(const topology_graph& g);

enum class export_format { dot, json };

// Deterministic textual rendering; the json form round-trips through
// import_graph_json.
std::string export_graph(const topology_graph& g, export_format format);

topology_graph import_graph_json(const std::string& text);

}  // namespace openfed
