#include "cmj/forest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cmj/errors.hpp"

namespace cmj {

Forest::Forest(int n_ancestors, double horizon) : n_ancestors_(n_ancestors), horizon_(horizon) {
    if (n_ancestors < 0) throw ConfigError("forest: negative ancestor count");
    roots_.reserve(static_cast<std::size_t>(n_ancestors));
}

std::int32_t Forest::add_ancestor(double birth_time) {
    if (static_cast<int>(roots_.size()) >= n_ancestors_) throw ContractViolation("forest: too many ancestors");
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({-1, static_cast<std::int32_t>(roots_.size()), 0, 0, birth_time, NodeStatus::kept});
    children_.emplace_back();
    roots_.push_back(id);
    return id;
}

std::int32_t Forest::add_child(std::int32_t parent, std::uint32_t rank, double birth_time, NodeStatus status) {
    if (parent < 0 || static_cast<std::size_t>(parent) >= nodes_.size()) throw ContractViolation("forest: bad parent");
    const ForestNode p = nodes_[static_cast<std::size_t>(parent)];
    if (p.status != NodeStatus::kept) throw ContractViolation("forest: pruned nodes have no offspring");
    if (rank == 0) throw ContractViolation("forest: ranks are 1-based");
    if (birth_time < p.birth_time) throw ContractViolation("forest: child born before its parent");
    auto& sib = children_[static_cast<std::size_t>(parent)];
    if (!sib.empty()) {
        const ForestNode& last = nodes_[static_cast<std::size_t>(sib.back())];
        if (rank <= last.rank || birth_time < last.birth_time)
            throw ContractViolation("forest: siblings must arrive in birth order");
    }
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({parent, p.ancestor, rank, p.depth + 1, birth_time, status});
    children_[static_cast<std::size_t>(parent)].push_back(id);
    children_.emplace_back();
    return id;
}

std::optional<std::int32_t> Forest::find(int ancestor, const UlamLabel& label) const {
    if (ancestor < 0 || static_cast<std::size_t>(ancestor) >= roots_.size()) return std::nullopt;
    std::int32_t cur = roots_[static_cast<std::size_t>(ancestor)];
    for (std::uint32_t r : label) {
        const auto& ch = children_[static_cast<std::size_t>(cur)];
        auto it = std::lower_bound(ch.begin(), ch.end(), r, [&](std::int32_t c, std::uint32_t v) {
            return nodes_[static_cast<std::size_t>(c)].rank < v;
        });
        if (it == ch.end() || nodes_[static_cast<std::size_t>(*it)].rank != r) return std::nullopt;
        cur = *it;
    }
    return cur;
}

UlamLabel Forest::label(std::int32_t i) const {
    UlamLabel out;
    while (nodes_[static_cast<std::size_t>(i)].parent >= 0) {
        out.push_back(nodes_[static_cast<std::size_t>(i)].rank);
        i = nodes_[static_cast<std::size_t>(i)].parent;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::size_t Forest::kept_count(double t) const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [t](const ForestNode& n) {
        return n.status == NodeStatus::kept && n.birth_time <= t;
    }));
}

namespace {

bool same_subtree(const Forest& a, std::int32_t i, const Forest& b, std::int32_t j) {
    const auto& x = a.node(i);
    const auto& y = b.node(j);
    if (x.rank != y.rank || x.status != y.status || x.birth_time != y.birth_time) return false;
    auto ca = a.children(i);
    auto cb = b.children(j);
    if (ca.size() != cb.size()) return false;
    for (std::size_t k = 0; k < ca.size(); ++k)
        if (!same_subtree(a, ca[k], b, cb[k])) return false;
    return true;
}

// kept nodes of the (K,T)-truncation, compared in preorder
bool same_truncation(const Forest& a, std::int32_t i, const Forest& b, std::int32_t j, unsigned K, double T) {
    const auto& x = a.node(i);
    const auto& y = b.node(j);
    if (x.rank != y.rank || x.birth_time != y.birth_time) return false;
    auto visible = [&](const Forest& f, std::int32_t c) {
        const auto& n = f.node(c);
        return n.status == NodeStatus::kept && n.birth_time <= T && n.depth <= K;
    };
    std::vector<std::int32_t> ca, cb;
    for (auto c : a.children(i))
        if (visible(a, c)) ca.push_back(c);
    for (auto c : b.children(j))
        if (visible(b, c)) cb.push_back(c);
    if (ca.size() != cb.size()) return false;
    for (std::size_t k = 0; k < ca.size(); ++k)
        if (!same_truncation(a, ca[k], b, cb[k], K, T)) return false;
    return true;
}

void copy_truncated(const Forest& src, std::int32_t from, Forest& dst, std::int32_t to, unsigned K, double T) {
    for (auto c : src.children(from)) {
        const auto& n = src.node(c);
        if (n.status != NodeStatus::kept || n.birth_time > T || n.depth > K) continue;
        const auto id = dst.add_child(to, n.rank, n.birth_time, NodeStatus::kept);
        copy_truncated(src, c, dst, id, K, T);
    }
}

}  // namespace

bool operator==(const Forest& a, const Forest& b) {
    if (a.n_ancestors_ != b.n_ancestors_ || a.horizon_ != b.horizon_ || a.roots_.size() != b.roots_.size())
        return false;
    for (std::size_t i = 0; i < a.roots_.size(); ++i)
        if (!same_subtree(a, a.roots_[i], b, b.roots_[i])) return false;
    return true;
}

Forest truncate(const Forest& f, unsigned K, double T) {
    Forest out(f.n_ancestors(), std::min(f.horizon(), T));
    for (int i = 0; i < f.n_ancestors(); ++i) {
        const auto r = f.root(i);
        const auto id = out.add_ancestor(f.node(r).birth_time);
        copy_truncated(f, r, out, id, K, T);
    }
    return out;
}

std::vector<double> birth_chain(const Forest& f, std::int32_t node) {
    if (node < 0 || static_cast<std::size_t>(node) >= f.size()) throw DomainError("birth_chain: no such node");
    if (f.node(node).status != NodeStatus::kept) throw DomainError("birth_chain: node is pruned");
    std::vector<double> out;
    for (std::int32_t i = node; i >= 0; i = f.node(i).parent) out.push_back(f.node(i).birth_time);
    return out;
}

std::vector<double> birth_chain(const Forest& f, int ancestor, const UlamLabel& u) {
    auto id = f.find(ancestor, u);
    if (!id) throw DomainError("birth_chain: label absent");
    return birth_chain(f, *id);
}

LocalComparison local_distance(const Forest& f1, int a1, const Forest& f2, int a2, unsigned K, double T) {
    return same_truncation(f1, f1.root(a1), f2, f2.root(a2), K, T) ? LocalComparison::equal : LocalComparison::differ;
}

void write_forest(std::ostream& os, const Forest& f) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", f.horizon());
    os << "# forest n_ancestors=" << f.n_ancestors() << " horizon=" << buf << '\n';
    os << "ancestor,label,birth_time,status,sigma\n";
    std::vector<std::int32_t> stack;
    std::string path;
    for (int a = 0; a < f.n_ancestors(); ++a) {
        stack.assign(1, f.root(a));
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            const auto& n = f.node(i);
            path.clear();
            for (auto r : f.label(i)) {
                if (!path.empty()) path += '.';
                path += std::to_string(r);
            }
            std::snprintf(buf, sizeof buf, "%.17g", n.birth_time);
            const bool kept = n.status == NodeStatus::kept;
            os << a << ',' << path << ',' << (kept ? buf : "inf") << ',' << (kept ? "kept" : "pruned") << ',' << buf
               << '\n';
            auto ch = f.children(i);
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
        }
    }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("forest csv: bad number '" + s + "'");
    return v;
}

}  // namespace

Forest read_forest(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("forest csv: empty input");
    int n = 0;
    double horizon = 0.0;
    {
        const auto p = line.find("n_ancestors=");
        const auto q = line.find("horizon=");
        if (line.rfind("# forest", 0) != 0 || p == std::string::npos || q == std::string::npos)
            throw ConfigError("forest csv: missing header comment");
        n = std::stoi(line.substr(p + 12));
        horizon = parse_double(line.substr(q + 8));
    }
    if (!std::getline(is, line) || line != "ancestor,label,birth_time,status,sigma")
        throw ConfigError("forest csv: bad column header");
    Forest f(n, horizon);
    int next_ancestor = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 5) throw ConfigError("forest csv: expected 5 columns");
        const int a = std::stoi(cols[0]);
        UlamLabel label;
        if (!cols[1].empty())
            for (const auto& part : split(cols[1], '.')) label.push_back(static_cast<std::uint32_t>(std::stoul(part)));
        const NodeStatus st = cols[3] == "kept" ? NodeStatus::kept : NodeStatus::pruned;
        if (st == NodeStatus::pruned && cols[3] != "pruned") throw ConfigError("forest csv: bad status");
        const double sigma = parse_double(cols[4]);
        if (label.empty()) {
            if (a != next_ancestor++) throw ConfigError("forest csv: ancestors out of order");
            f.add_ancestor(sigma);
            continue;
        }
        const UlamLabel parent(label.begin(), label.end() - 1);
        auto p = f.find(a, parent);
        if (!p) throw ConfigError("forest csv: child listed before its parent");
        f.add_child(*p, label.back(), sigma, st);
    }
    return f;
}

}  // namespace cmj
