#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cmj/errors.hpp"
#include "cmj/forest.hpp"

using namespace cmj;

namespace {

// ancestor 0: children 1 (kept, t=.5) with child 1.1 (t=1.2), 2 (pruned, t=.8), 3 (kept, t=2)
// ancestor 1: childless, born at -0.3
Forest sample_forest() {
    Forest f(2, 3.0);
    const auto r0 = f.add_ancestor(-1.0);
    const auto c1 = f.add_child(r0, 1, 0.5, NodeStatus::kept);
    f.add_child(c1, 1, 1.2, NodeStatus::kept);
    f.add_child(r0, 2, 0.8, NodeStatus::pruned);
    f.add_child(r0, 3, 2.0, NodeStatus::kept);
    f.add_ancestor(-0.3);
    return f;
}

}  // namespace

TEST_CASE("labels, lookup and counts") {
    const auto f = sample_forest();
    CHECK(f.size() == 6);
    const auto n = f.find(0, {1, 1});
    REQUIRE(n);
    CHECK(f.label(*n) == UlamLabel{1, 1});
    CHECK(f.node(*n).depth == 2);
    CHECK(f.node(*n).birth_time == 1.2);
    CHECK_FALSE(f.find(0, {4}));
    CHECK_FALSE(f.find(1, {1}));
    CHECK(f.find(1, {}) == f.root(1));
    CHECK(f.kept_count(0.0) == 2);
    CHECK(f.kept_count(1.5) == 4);
    CHECK(f.kept_count(3.0) == 5);
}

TEST_CASE("structural contracts") {
    Forest f(1, 1.0);
    const auto r = f.add_ancestor(0.0);
    const auto p = f.add_child(r, 2, 0.5, NodeStatus::pruned);
    CHECK_THROWS_AS(f.add_child(p, 1, 0.7, NodeStatus::kept), ContractViolation);
    CHECK_THROWS_AS(f.add_child(r, 1, 0.6, NodeStatus::kept), ContractViolation);
    CHECK_THROWS_AS(f.add_child(r, 3, 0.4, NodeStatus::kept), ContractViolation);
    CHECK_THROWS_AS(f.add_child(r, 0, 0.9, NodeStatus::kept), ContractViolation);
    CHECK_THROWS_AS(f.add_ancestor(0.0), ContractViolation);
    CHECK_THROWS_AS(f.add_child(99, 1, 0.9, NodeStatus::kept), ContractViolation);
}

TEST_CASE("birth chains") {
    const auto f = sample_forest();
    CHECK(birth_chain(f, 0, {1, 1}) == std::vector<double>{1.2, 0.5, -1.0});
    CHECK(birth_chain(f, 1, {}) == std::vector<double>{-0.3});
    CHECK_THROWS_AS(birth_chain(f, 0, {2}), DomainError);
    CHECK_THROWS_AS(birth_chain(f, 0, {7}), DomainError);
}

TEST_CASE("truncation and local comparison") {
    const auto f = sample_forest();
    const auto t = truncate(f, 1, 1.5);
    CHECK(t.size() == 3);  // two roots and child 1
    CHECK(t.find(0, {1}));
    CHECK_FALSE(t.find(0, {1, 1}));
    CHECK_FALSE(t.find(0, {2}));
    CHECK(local_distance(f, 0, t, 0, 1, 1.5) == LocalComparison::equal);
    CHECK(local_distance(f, 0, t, 0, 2, 1.5) == LocalComparison::differ);
    CHECK(local_distance(f, 0, f, 1, 0, 0.0) == LocalComparison::differ);  // root times differ
    // pruned siblings do not matter
    Forest g(1, 3.0);
    const auto r = g.add_ancestor(-1.0);
    const auto c1 = g.add_child(r, 1, 0.5, NodeStatus::kept);
    g.add_child(c1, 1, 1.2, NodeStatus::kept);
    g.add_child(r, 3, 2.0, NodeStatus::kept);
    CHECK(local_distance(f, 0, g, 0, 5, 3.0) == LocalComparison::equal);
    CHECK_FALSE(f == g);
}

TEST_CASE("csv round trip is exact") {
    Forest f(1, 2.0);
    const auto r = f.add_ancestor(-0.1234567890123456789);
    const auto c = f.add_child(r, 1, std::nextafter(0.3, 1.0), NodeStatus::kept);
    f.add_child(c, 1, 1.0 / 3.0, NodeStatus::pruned);
    f.add_child(c, 2, 1.0 / 3.0 + 1e-15, NodeStatus::kept);
    f.add_child(r, 5, 1.9, NodeStatus::kept);
    std::stringstream ss;
    write_forest(ss, f);
    const std::string text = ss.str();
    CHECK(text.rfind("# forest n_ancestors=1 horizon=2\nancestor,label,birth_time,status,sigma\n", 0) == 0);
    CHECK(text.find("0,1.1,inf,pruned,") != std::string::npos);
    const auto back = read_forest(ss);
    CHECK(back == f);
    std::stringstream again;
    write_forest(again, back);
    CHECK(again.str() == text);

    std::stringstream bad("# forest n_ancestors=1 horizon=1\nancestor,label,birth_time,status,sigma\n0,2,0.5,kept,0.5\n");
    CHECK_THROWS_AS(read_forest(bad), ConfigError);
}
