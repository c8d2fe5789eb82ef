#include "gridshare/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gridshare {

std::optional<std::size_t> Neighborhood::slot_of(NodeId node) const {
    auto it = std::lower_bound(members.begin(), members.end(), node);
    if (it == members.end() || *it != node) return std::nullopt;
    return static_cast<std::size_t>(it - members.begin());
}

NetworkGraph::NetworkGraph(std::size_t n, std::vector<std::uint8_t> adjacency,
                           std::optional<std::vector<Point2>> positions)
    : n_(n), adjacency_(std::move(adjacency)), positions_(std::move(positions)) {
    neighborhoods_.resize(n_);
    for (NodeId i = 0; i < n_; ++i) {
        Neighborhood& nb = neighborhoods_[i];
        nb.center = i;
        for (NodeId j = 0; j < n_; ++j) {
            if (i == j || adjacency_[i * n_ + j]) nb.members.push_back(j);
        }
    }
}

NetworkGraph NetworkGraph::from_positions(std::span<const Point2> positions, double threshold) {
    if (positions.empty()) throw std::invalid_argument("from_positions: no positions given");
    if (!(threshold >= 0.0)) throw std::invalid_argument("from_positions: threshold must be >= 0");
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!std::isfinite(positions[i].x) || !std::isfinite(positions[i].y)) {
            throw std::invalid_argument("from_positions: non-finite coordinate at index " +
                                        std::to_string(i));
        }
    }
    const std::size_t n = positions.size();
    std::vector<std::uint8_t> adj(n * n, 0);
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
            const double d = std::hypot(positions[i].x - positions[j].x, positions[i].y - positions[j].y);
            if (d <= threshold) adj[i * n + j] = adj[j * n + i] = 1;
        }
    }
    return NetworkGraph(n, std::move(adj), std::vector<Point2>(positions.begin(), positions.end()));
}

NetworkGraph NetworkGraph::from_edges(std::size_t n, std::span<const Edge> edges) {
    if (n == 0) throw std::invalid_argument("from_edges: node count must be positive");
    std::vector<std::uint8_t> adj(n * n, 0);
    for (const auto& [i, j] : edges) {
        if (i >= n || j >= n) {
            throw std::invalid_argument("from_edges: edge (" + std::to_string(i) + "," +
                                        std::to_string(j) + ") out of range for n=" + std::to_string(n));
        }
        if (i == j) throw std::invalid_argument("from_edges: self-loop at node " + std::to_string(i));
        adj[i * n + j] = adj[j * n + i] = 1;
    }
    return NetworkGraph(n, std::move(adj), std::nullopt);
}

void NetworkGraph::check_node(NodeId i) const {
    if (i >= n_) {
        throw std::out_of_range("node " + std::to_string(i) + " out of range (N=" + std::to_string(n_) + ")");
    }
}

bool NetworkGraph::adjacent(NodeId i, NodeId j) const {
    check_node(i);
    check_node(j);
    return adjacency_[i * n_ + j] != 0;
}

std::size_t NetworkGraph::degree(NodeId i) const {
    return neighborhood(i).local_dim() - 1;
}

const Neighborhood& NetworkGraph::neighborhood(NodeId i) const {
    check_node(i);
    return neighborhoods_[i];
}

std::vector<Edge> NetworkGraph::edges() const {
    std::vector<Edge> out;
    for (NodeId i = 0; i < n_; ++i)
        for (NodeId j = i + 1; j < n_; ++j)
            if (adjacency_[i * n_ + j]) out.emplace_back(i, j);
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

}  // namespace

std::vector<Point2> read_positions_csv(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "id,x,y") {
        throw std::invalid_argument(path.string() + ": expected header 'id,x,y'");
    }
    std::vector<std::pair<long long, Point2>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id_s, x_s, y_s;
        if (!std::getline(ss, id_s, ',') || !std::getline(ss, x_s, ',') || !std::getline(ss, y_s)) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
        }
        try {
            rows.push_back({std::stoll(id_s), Point2{std::stod(x_s), std::stod(y_s)}});
        } catch (const std::logic_error&) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Point2> out;
    out.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].first != static_cast<long long>(k)) {
            throw std::invalid_argument(path.string() + ": ids must be exactly 0..N-1");
        }
        out.push_back(rows[k].second);
    }
    return out;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::vector<Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        std::stringstream ss(line);
        long long i = -1, j = -1;
        if (!(ss >> i >> j) || i < 0 || j < 0) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected 'i j'");
        }
        edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
    return edges;
}

}  // namespace gridshare
