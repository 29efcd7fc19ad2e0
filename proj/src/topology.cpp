#include "openfed/topology.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include <nlohmann/json.hpp>

namespace openfed {

namespace {

using json = nlohmann::ordered_json;

// Kahn's algorithm over the directed edges. Returns node ids in topological
// order; nodes left over sit on a cycle.
struct topo_sort_result {
    std::vector<std::string> order;
    std::vector<std::string> cyclic;  // sorted ids of nodes on directed cycles
};

topo_sort_result topo_sort(const topology_graph& g) {
    std::map<std::string, int> in_degree;
    std::map<std::string, std::vector<std::string>> out_edges;
    for (const auto& [id, addr] : g.nodes()) {
        (void)addr;
        in_degree[id] = 0;
    }
    for (const auto& [u, v] : g.directed_edges()) {
        out_edges[u].push_back(v);
        in_degree[v] += 1;
    }

    std::deque<std::string> ready;
    for (const auto& [id, deg] : in_degree) {
        if (deg == 0) ready.push_back(id);
    }

    topo_sort_result result;
    while (!ready.empty()) {
        std::string id = ready.front();
        ready.pop_front();
        result.order.push_back(id);
        for (const std::string& next : out_edges[id]) {
            if (--in_degree[next] == 0) ready.push_back(next);
        }
    }
    for (const auto& [id, deg] : in_degree) {
        if (deg > 0) result.cyclic.push_back(id);
    }
    return result;
}

// longest distance from any in-degree-0 root, per node; requires acyclic input
std::map<std::string, int> longest_depths(const topology_graph& g,
                                          const std::vector<std::string>& topo_order) {
    std::map<std::string, std::vector<std::string>> in_edges;
    for (const auto& [u, v] : g.directed_edges()) in_edges[v].push_back(u);

    std::map<std::string, int> depth;
    for (const std::string& id : topo_order) {
        int d = 0;
        for (const std::string& parent : in_edges[id]) {
            d = std::max(d, depth.at(parent) + 1);
        }
        depth[id] = d;
    }
    return depth;
}

}  // namespace

void topology_graph::add_node(const node_id& n) {
    if (n.id.empty()) throw unknown_node("node id must be non-empty");
    auto [it, inserted] = nodes_.emplace(n.id, n.address);
    (void)it;
    if (!inserted) throw duplicate_node("node '" + n.id + "' already exists");
}

void topology_graph::add_edge(const std::string& leader, const std::string& follower,
                              bool directed) {
    if (!has_node(leader)) throw unknown_node("unknown node '" + leader + "'");
    if (!has_node(follower)) throw unknown_node("unknown node '" + follower + "'");
    if (leader == follower) throw self_loop("self loop on '" + leader + "'");
    if (directed) {
        auto [it, inserted] = directed_.emplace(leader, follower);
        (void)it;
        if (!inserted) {
            throw duplicate_edge("directed edge " + leader + " -> " + follower + " already exists");
        }
    } else {
        auto pair = std::minmax(leader, follower);
        auto [it, inserted] = undirected_.emplace(pair.first, pair.second);
        (void)it;
        if (!inserted) {
            throw duplicate_edge("undirected edge " + leader + " -- " + follower + " already exists");
        }
    }
}

const std::string& topology_graph::address_of(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw unknown_node("unknown node '" + id + "'");
    return it->second;
}

std::vector<federated_group> decompose(const topology_graph& g) {
    auto sorted = topo_sort(g);
    if (!sorted.cyclic.empty()) {
        std::string msg = "directed edges contain a cycle through:";
        for (const std::string& id : sorted.cyclic) msg += " " + id;
        throw cyclic_leadership(msg);
    }
    auto depth = longest_depths(g, sorted.order);

    std::map<std::string, std::vector<std::string>> followers;
    for (const auto& [u, v] : g.directed_edges()) followers[u].push_back(v);

    std::map<std::string, std::vector<std::string>> neighbors;
    for (const auto& [a, b] : g.undirected_edges()) {
        neighbors[a].push_back(b);
        neighbors[b].push_back(a);
    }

    std::vector<federated_group> groups;
    for (auto& [hub, members] : followers) {
        std::sort(members.begin(), members.end());
        groups.push_back({0, hub, members, depth.at(hub), false});
    }
    for (auto& [hub, members] : neighbors) {
        std::sort(members.begin(), members.end());
        groups.push_back({0, hub, members, depth.at(hub), true});
    }

    std::sort(groups.begin(), groups.end(), [](const federated_group& a, const federated_group& b) {
        if (a.depth != b.depth) return a.depth > b.depth;
        if (a.hub != b.hub) return a.hub < b.hub;
        return a.gossip < b.gossip;
    });
    for (std::size_t i = 0; i < groups.size(); ++i) {
        groups[i].group_id = static_cast<std::uint32_t>(i);
    }
    return groups;
}

std::vector<diagnostic> validate(const topology_graph& g) {
    std::vector<diagnostic> out;

    auto sorted = topo_sort(g);
    if (!sorted.cyclic.empty()) {
        std::string msg = "directed cycle: no leader ordering exists for";
        for (const std::string& id : sorted.cyclic) msg += " " + id;
        out.push_back({diagnostic_severity::error, "directed_cycle", msg, sorted.cyclic});
    }

    std::set<std::string> touched;
    for (const auto& [u, v] : g.directed_edges()) {
        touched.insert(u);
        touched.insert(v);
    }
    for (const auto& [a, b] : g.undirected_edges()) {
        touched.insert(a);
        touched.insert(b);
    }
    for (const auto& [id, addr] : g.nodes()) {
        (void)addr;
        if (!touched.count(id)) {
            out.push_back({diagnostic_severity::warning, "isolated_node",
                           "node '" + id + "' has no edges and no role in any federated group",
                           {id}});
        }
    }
    return out;
}

std::string export_graph(const topology_graph& g, export_format format) {
    if (format == export_format::json) {
        json doc;
        doc["nodes"] = json::array();
        for (const auto& [id, addr] : g.nodes()) {
            json n;
            n["id"] = id;
            if (!addr.empty()) n["address"] = addr;
            doc["nodes"].push_back(n);
        }
        doc["directed"] = json::array();
        for (const auto& [u, v] : g.directed_edges()) {
            doc["directed"].push_back(json::array({u, v}));
        }
        doc["undirected"] = json::array();
        for (const auto& [a, b] : g.undirected_edges()) {
            doc["undirected"].push_back(json::array({a, b}));
        }
        return doc.dump(2) + "\n";
    }

    std::ostringstream dot;
    dot << "digraph federation {\n";
    for (const auto& [id, addr] : g.nodes()) {
        dot << "  \"" << id << "\"";
        if (!addr.empty()) dot << " [label=\"" << id << "\\n" << addr << "\"]";
        dot << ";\n";
    }
    for (const auto& [u, v] : g.directed_edges()) {
        dot << "  \"" << u << "\" -> \"" << v << "\";\n";
    }
    for (const auto& [a, b] : g.undirected_edges()) {
        dot << "  \"" << a << "\" -> \"" << b << "\" [dir=none];\n";
    }
    dot << "}\n";
    return dot.str();
}

topology_graph import_graph_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("topology json: ") + e.what());
    }

    topology_graph g;
    if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
        throw config_error("topology json: missing \"nodes\" array");
    }
    for (const auto& n : doc["nodes"]) {
        node_id id;
        if (n.is_string()) {
            id.id = n.get<std::string>();
        } else if (n.is_object()) {
            if (!n.contains("id")) throw config_error("topology json: node entry without \"id\"");
            id.id = n["id"].get<std::string>();
            if (n.contains("address")) id.address = n["address"].get<std::string>();
        } else {
            throw config_error("topology json: node entries must be strings or objects");
        }
        g.add_node(id);
    }
    auto read_edges = [&](const char* key, bool directed) {
        if (!doc.contains(key)) return;
        if (!doc[key].is_array()) {
            throw config_error(std::string("topology json: \"") + key + "\" must be an array");
        }
        for (const auto& e : doc[key]) {
            if (!e.is_array() || e.size() != 2) {
                throw config_error(std::string("topology json: \"") + key +
                                   "\" entries must be [from, to] pairs");
            }
            g.add_edge(e[0].get<std::string>(), e[1].get<std::string>(), directed);
        }
    };
    read_edges("directed", true);
    read_edges("undirected", false);
    return g;
}

}  // namespace openfed
