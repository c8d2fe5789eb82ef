#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace gridshare {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Closed neighborhood of a node: its neighbors plus the node itself,
/// sorted ascending. Allocation vectors are indexed in this order.
struct Neighborhood {
    NodeId center = 0;
    std::vector<NodeId> members;

    std::size_t local_dim() const { return members.size(); }

    /// Position of `node` inside `members`, or nullopt if it is not a member.
    std::optional<std::size_t> slot_of(NodeId node) const;
};

/// Undirected prosumer topology. Immutable after construction.
class NetworkGraph {
public:
    /// Connects every pair of distinct positions whose Euclidean distance is
    /// at most `threshold`. Throws std::invalid_argument on empty input,
    /// negative/NaN threshold or non-finite coordinates.
    static NetworkGraph from_positions(std::span<const Point2> positions, double threshold);

    /// Throws std::invalid_argument on n == 0, self-loops or out-of-range ids.
    /// Duplicate edges (in either orientation) are idempotent.
    static NetworkGraph from_edges(std::size_t n, std::span<const Edge> edges);

    std::size_t node_count() const { return n_; }
    bool adjacent(NodeId i, NodeId j) const;
    /// Number of neighbors, excluding the node itself.
    std::size_t degree(NodeId i) const;
    /// Throws std::out_of_range for i >= node_count().
    const Neighborhood& neighborhood(NodeId i) const;
    std::vector<Edge> edges() const;
    const std::optional<std::vector<Point2>>& positions() const { return positions_; }

private:
    NetworkGraph(std::size_t n, std::vector<std::uint8_t> adjacency,
                 std::optional<std::vector<Point2>> positions);

    void check_node(NodeId i) const;

    std::size_t n_ = 0;
    std::vector<std::uint8_t> adjacency_;  // row-major n_ x n_, zero diagonal
    std::vector<Neighborhood> neighborhoods_;
    std::optional<std::vector<Point2>> positions_;
};

/// Free-function form of NetworkGraph::neighborhood.
inline const Neighborhood& neighborhood(const NetworkGraph& g, NodeId i) { return g.neighborhood(i); }

/// Reads a facility CSV with header `id,x,y`. Rows may appear in any order
/// but the ids must be exactly 0..N-1. Returned positions are ordered by id.
std::vector<Point2> read_positions_csv(const std::filesystem::path& path);

/// Reads an edge list with one whitespace-separated `i j` pair per line.
/// Blank lines and lines starting with '#' are skipped.
std::vector<Edge> read_edge_list(const std::filesystem::path& path);

}  // namespace gridshare
