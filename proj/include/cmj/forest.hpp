#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace cmj {

using UlamLabel = std::vector<std::uint32_t>;

enum class NodeStatus : std::uint8_t { kept, pruned };

struct ForestNode {
    std::int32_t parent;     // -1 for an ancestor
    std::int32_t ancestor;
    std::uint32_t rank;      // 1-based among siblings; 0 for an ancestor
    std::uint32_t depth;     // |u|
    double birth_time;       // potential birth time, also stored for pruned nodes
    NodeStatus status;
};

// Ulam-Harris labelled forest, one tree per ancestor, nodes in a flat array.
// Pruned nodes are leaves; their σ is +∞ in the model and on export.
class Forest {
public:
    Forest() = default;
    Forest(int n_ancestors, double horizon);

    std::int32_t add_ancestor(double birth_time);
    std::int32_t add_child(std::int32_t parent, std::uint32_t rank, double birth_time, NodeStatus status);

    int n_ancestors() const { return n_ancestors_; }
    double horizon() const { return horizon_; }
    std::size_t size() const { return nodes_.size(); }
    const ForestNode& node(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)]; }
    std::span<const ForestNode> nodes() const { return nodes_; }
    std::int32_t root(int ancestor) const { return roots_[static_cast<std::size_t>(ancestor)]; }
    std::span<const std::int32_t> children(std::int32_t i) const { return children_[static_cast<std::size_t>(i)]; }

    std::optional<std::int32_t> find(int ancestor, const UlamLabel& label) const;
    UlamLabel label(std::int32_t i) const;

    // kept nodes with σ ≤ t
    std::size_t kept_count(double t) const;

    // Same ancestors, labels, statuses and exact times.
    friend bool operator==(const Forest& a, const Forest& b);

private:
    int n_ancestors_ = 0;
    double horizon_ = 0.0;
    std::vector<ForestNode> nodes_;
    std::vector<std::vector<std::int32_t>> children_;
    std::vector<std::int32_t> roots_;
};

// Kept nodes with |u| ≤ K and σ ≤ T.
Forest truncate(const Forest& f, unsigned K, double T);

// (σ_u, σ_parent, ..., σ_ancestor); u must be present and kept.
std::vector<double> birth_chain(const Forest& f, int ancestor, const UlamLabel& u);
std::vector<double> birth_chain(const Forest& f, std::int32_t node);

enum class LocalComparison { equal, differ };

// Compares the (K, T)-truncations of tree a1 of f1 and tree a2 of f2.
LocalComparison local_distance(const Forest& f1, int a1, const Forest& f2, int a2, unsigned K, double T);

// "# forest n_ancestors=N horizon=T" then ancestor,label,birth_time,status,sigma
// in preorder. birth_time is inf for pruned nodes; sigma keeps the potential
// time so that reading back is exact.
void write_forest(std::ostream& os, const Forest& f);
Forest read_forest(std::istream& is);

}  // namespace cmj
