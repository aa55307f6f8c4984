#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "rvmlab/geometry.hpp"

using namespace rvmlab;

TEST_CASE("grid classification on a torus meridian") {
    MeridianGrid g = build_grid({1.0, 2.0, 0.0, 1.0}, 3, 3);
    CHECK(g.n_nodes() == 9);
    int boundary = 0, interior = 0;
    for (NodeKind k : g.kind) {
        if (k == NodeKind::boundary) ++boundary;
        if (k == NodeKind::interior) ++interior;
    }
    CHECK(boundary == 8);
    CHECK(interior == 1);
    CHECK(g.h_r == doctest::Approx(0.5));
    CHECK(g.h_z == doctest::Approx(0.5));
}

TEST_CASE("axis column classified separately when the domain touches the axis") {
    MeridianGrid g = build_grid({0.0, 1.0, 0.0, 1.0}, 5, 5);
    int axis = 0, boundary = 0, interior = 0;
    for (NodeKind k : g.kind) {
        if (k == NodeKind::axis) ++axis;
        if (k == NodeKind::boundary) ++boundary;
        if (k == NodeKind::interior) ++interior;
    }
    CHECK(axis == 3);          // r = 0 column minus the two corners
    CHECK(boundary == 13);
    CHECK(interior == 9);
    CHECK(g.kind_at(0, 0) == NodeKind::boundary);
    CHECK(g.kind_at(0, 2) == NodeKind::axis);
}

TEST_CASE("node coordinates are exact multiples of the spacing") {
    MeridianGrid g = build_grid({1.0, 2.0, -1.0, 1.0}, 5, 9);
    for (int i = 0; i < g.n_r; ++i) CHECK(g.r(i) == 1.0 + i * g.h_r);
    for (int j = 0; j < g.n_z; ++j) CHECK(g.z(j) == -1.0 + j * g.h_z);
}

TEST_CASE("grid preconditions rejected") {
    CHECK_THROWS(build_grid({1.0, 2.0, 0.0, 1.0}, 2, 5));
    CHECK_THROWS(build_grid({1.0, 2.0, 0.0, 1.0}, 5, 2));
    CHECK_THROWS(build_grid({-0.5, 2.0, 0.0, 1.0}, 5, 5));
    CHECK_THROWS(build_grid({2.0, 1.0, 0.0, 1.0}, 5, 5));
}

TEST_CASE("outward normals are axis-aligned and unit length") {
    MeridianGrid g = build_grid({1.0, 2.0, 0.0, 1.0}, 5, 5);
    Vec2 n = outward_normal(g, 4, 2);
    CHECK(n.r == 1.0);
    CHECK(n.z == 0.0);
    n = outward_normal(g, 2, 0);
    CHECK(n.r == 0.0);
    CHECK(n.z == -1.0);
    n = outward_normal(g, 0, 2);
    CHECK(n.r == -1.0);
    for (int i = 0; i < g.n_r; ++i)
        for (int j = 0; j < g.n_z; ++j) {
            if (g.kind_at(i, j) != NodeKind::boundary) continue;
            bool corner = (i == 0 || i == g.n_r - 1) && (j == 0 || j == g.n_z - 1);
            if (corner) {
                CHECK_THROWS_WITH_AS(outward_normal(g, i, j),
                                     "outward_normal: ambiguous normal at corner node",
                                     std::invalid_argument);
            } else {
                Vec2 v = outward_normal(g, i, j);
                CHECK(std::hypot(v.r, v.z) == doctest::Approx(1.0));
            }
        }
}

TEST_CASE("normal query rejected off the physical boundary") {
    MeridianGrid g = build_grid({0.0, 1.0, 0.0, 1.0}, 5, 5);
    CHECK_THROWS(outward_normal(g, 2, 2));
    CHECK_THROWS(outward_normal(g, 0, 2));   // axis node
}

TEST_CASE("wall distance on the torus meridian") {
    MeridianGrid g = build_grid({1.0, 2.0, 0.0, 1.0}, 5, 5);
    CHECK(wall_distance(g, 1.5, 0.5) == doctest::Approx(0.5));
    CHECK(wall_distance(g, 1.1, 0.5) == doctest::Approx(0.1));
    CHECK_THROWS(wall_distance(g, 3.0, 0.5));
}

TEST_CASE("axis edge is not a wall") {
    MeridianGrid g = build_grid({0.0, 1.0, 0.0, 1.0}, 5, 5);
    CHECK(wall_distance(g, 0.2, 0.5) == doctest::Approx(0.5));
    CHECK(wall_distance(g, 0.0, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("wall distance vanishes exactly on boundary nodes, positive inside") {
    MeridianGrid g = build_grid({1.0, 2.0, 0.0, 1.0}, 9, 9);
    for (int j = 0; j < g.n_z; ++j)
        for (int i = 0; i < g.n_r; ++i) {
            double d = wall_distance(g, g.r(i), g.z(j));
            if (g.kind_at(i, j) == NodeKind::boundary)
                CHECK(d == 0.0);
            else
                CHECK(d > 0.0);
        }
}
