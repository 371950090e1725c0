#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "aniso/error.hpp"
#include "aniso/mesh.hpp"
#include "doctest.h"

using namespace aniso;

namespace {

const Rect kUnit{0.0, 0.0, 1.0, 1.0};
const Rect kStrip{0.0, 0.0, std::numbers::pi, 1.0};

std::vector<int> touching_bottom(const QuadtreeMesh& m) {
  std::vector<int> marked;
  for (std::size_t i = 0; i < m.num_leaves(); ++i) {
    if (m.rect(m.leaves()[i]).y0 == 0.0) marked.push_back(static_cast<int>(i));
  }
  return marked;
}

QuadtreeMesh random_refinement(bool periodic, unsigned seed, int rounds) {
  std::mt19937 rng(seed);
  QuadtreeMesh m(kUnit, 2, 1, periodic);
  for (int r = 0; r < rounds; ++r) {
    std::vector<int> marked;
    std::bernoulli_distribution pick(0.15);
    for (std::size_t i = 0; i < m.num_leaves(); ++i) {
      if (pick(rng)) marked.push_back(static_cast<int>(i));
    }
    m = m.refined(marked);
  }
  return m;
}

// Brute-force edge adjacency check on the finest lattice.
bool brute_force_one_irregular(const LeafGrid& g) {
  const std::int64_t nj = g.y_axis().intervals();
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = 0; b < g.size(); ++b) {
      if (a == b) continue;
      const LeafCell& p = g.cell(a);
      const LeafCell& q = g.cell(b);
      bool adjacent = false;
      if ((p.i1 == q.i0 || q.i1 == p.i0) && std::max(p.j0, q.j0) < std::min(p.j1, q.j1)) {
        adjacent = true;
      }
      for (std::int64_t shift : {std::int64_t{0}, nj, -nj}) {
        if (!g.periodic_y() && shift != 0) continue;
        if ((p.j1 == q.j0 + shift || q.j1 + shift == p.j0) &&
            std::max(p.i0, q.i0) < std::min(p.i1, q.i1)) {
          adjacent = true;
        }
      }
      if (adjacent && std::abs(p.key.level - q.key.level) > 1) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("uniform_tensor examples") {
  const auto m = uniform_tensor(2, 2, kUnit);
  CHECK(m.num_cells() == 4);
  const auto g = m.leaf_grid();
  for (const auto& c : g.cells()) {
    CHECK(c.rect.hx == doctest::Approx(0.5));
    CHECK(c.rect.hy == doctest::Approx(0.5));
  }
  const auto s = uniform_tensor(10, 10, kStrip).leaf_grid();
  CHECK(s.cell(0).rect.hx == doctest::Approx(std::numbers::pi / 10).epsilon(1e-14));
  CHECK(s.cell(0).rect.hy == doctest::Approx(0.1).epsilon(1e-14));
  const auto r = uniform_tensor(3, 100, kStrip).leaf_grid();
  CHECK(r.cell(0).rect.hx / r.cell(0).rect.hy ==
        doctest::Approx(100 * std::numbers::pi / 3).epsilon(1e-12));
  CHECK_THROWS_AS(uniform_tensor(0, 3, kUnit), MeshError);
  CHECK_THROWS_AS(uniform_tensor(3, 0, kUnit), MeshError);
}

TEST_CASE("graded_tensor_y zero rate is uniform") {
  CHECK(graded_tensor_y(1, 0.25, 0.0, kUnit).my() == 4);
  CHECK(graded_tensor_y(1, 0.5, 0.0, kUnit).my() == 2);
  CHECK_THROWS_AS(graded_tensor_y(1, 0.0, 1.0, kUnit), MeshError);
  CHECK_THROWS_AS(graded_tensor_y(1, 1.5, 1.0, kUnit), MeshError);
  CHECK_THROWS_AS(graded_tensor_y(1, 1e-20, 1.0, kUnit), MeshError);
}

TEST_CASE("graded_tensor_y bounds and sibling minimality") {
  // p = 3, ratio 1e4: rate = 100 / 4.
  const double hs = 0.01, rate = 25.0;
  CHECK(hs * std::exp(0.2 * rate) == doctest::Approx(1.4841316).epsilon(1e-6));
  for (double h : {0.01, 0.003, 0.05}) {
    for (double rt : {25.0, 50.0, 5.0}) {
      const auto m = graded_tensor_y(3, h, rt, kStrip);
      const auto ys = m.ys();
      CHECK(m.min_element_size() <= h);
      CHECK(ys.front() == 0.0);
      CHECK(ys.back() == 1.0);
      for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
        const double y = ys[j], hy = ys[j + 1] - ys[j];
        CHECK(hy <= h * std::exp(y * rt) * (1 + 1e-12));
        CHECK(hy <= h * std::exp((1.0 - y - hy) * rt) * (1 + 1e-12));
      }
      // Rows come from bisection: merging any sibling pair violates a bound.
      for (std::size_t j = 0; j + 2 < ys.size(); ++j) {
        const double a = ys[j + 1] - ys[j];
        const double b = ys[j + 2] - ys[j + 1];
        const double merged = a + b;
        const double k = std::round(ys[j] / merged);
        const bool siblings = std::abs(a - b) < 1e-14 && std::abs(k * merged - ys[j]) < 1e-12 &&
                              static_cast<long long>(k) % 2 == 0;
        if (!siblings) continue;
        const bool ok = merged <= h * std::exp(ys[j] * rt) &&
                        merged <= h * std::exp((1.0 - ys[j] - merged) * rt);
        CHECK_FALSE(ok);
      }
    }
  }
}

TEST_CASE("refine_leaves examples") {
  QuadtreeMesh m(kUnit);
  CHECK(m.num_leaves() == 1);
  const std::vector<int> first{0};
  m = m.refined(first);
  CHECK(m.num_leaves() == 4);
  m = m.refined(first);
  CHECK(m.num_leaves() == 7);
  CHECK(m.is_one_irregular());
}

TEST_CASE("boundary layer marking reproduces 3*2^J - 2 leaves") {
  QuadtreeMesh m(kUnit);
  for (int j = 1; j <= 12; ++j) {
    m = m.refined(touching_bottom(m));
    CHECK(m.num_leaves() == static_cast<std::size_t>(3 * (1 << j) - 2));
    CHECK(m.is_one_irregular());
  }
}

TEST_CASE("min_element_size") {
  CHECK(QuadtreeMesh::uniform(kUnit, 10, 10, 0).min_element_size() == doctest::Approx(0.1));
  QuadtreeMesh m(kUnit);
  const std::vector<int> first{0};
  CHECK(m.refined(first).min_element_size() == 0.5);
  const auto g = graded_tensor_y(2, 0.01, 25.0, kUnit);
  CHECK(g.min_element_size() <= 0.01);
}

TEST_CASE("closure keeps 1-irregularity, tiling and hanging-vertex rule") {
  for (bool periodic : {false, true}) {
    for (unsigned seed = 1; seed <= 6; ++seed) {
      const auto m = random_refinement(periodic, seed, 6);
      CHECK(m.is_one_irregular());
      const auto g = m.leaf_grid();
      CHECK(brute_force_one_irregular(g));
      double area = 0.0;
      for (const auto& c : g.cells()) area += c.rect.area();
      CHECK(std::abs(area - 1.0) <= 1e-12);

      // A vertex interior to another leaf's edge sits at that edge's midpoint.
      std::set<std::pair<std::int64_t, std::int64_t>> verts;
      for (const auto& c : g.cells()) {
        for (auto i : {c.i0, c.i1})
          for (auto j : {c.j0, c.j1}) verts.insert({i, j});
      }
      for (const auto& c : g.cells()) {
        for (const auto& [i, j] : verts) {
          const bool on_h = (j == c.j0 || j == c.j1) && i > c.i0 && i < c.i1;
          const bool on_v = (i == c.i0 || i == c.i1) && j > c.j0 && j < c.j1;
          if (on_h) CHECK(2 * i == c.i0 + c.i1);
          if (on_v) CHECK(2 * j == c.j0 + c.j1);
        }
      }
    }
  }
}

TEST_CASE("periodic closure crosses the y seam") {
  QuadtreeMesh m(kUnit, 1, 1, true);
  m = m.refined_uniformly();  // 4 leaves
  // Refine the lower-left leaf twice; the upper-left leaf is its periodic
  // neighbour across y = 0 and must follow.
  std::vector<int> mark{0};
  m = m.refined(mark);
  m = m.refined(mark);
  CHECK(m.is_one_irregular());
  CHECK(brute_force_one_irregular(m.leaf_grid()));
  QuadtreeMesh np(kUnit, 1, 1, false);
  np = np.refined_uniformly();
  np = np.refined(mark);
  np = np.refined(mark);
  CHECK(m.num_leaves() > np.num_leaves());
}

TEST_CASE("refined rejects non-leaf positions") {
  QuadtreeMesh m(kUnit);
  const std::vector<int> bad{3};
  CHECK_THROWS_AS(m.refined(bad), MeshError);
}

TEST_CASE("leaf grid locates points") {
  const auto m = random_refinement(false, 11, 5);
  const auto g = m.leaf_grid();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const Point p{u(rng), u(rng)};
    const auto c = g.locate(p);
    REQUIRE(c.has_value());
    CHECK(g.cell(static_cast<std::size_t>(*c)).rect.contains(p, 1e-14));
  }
  CHECK_FALSE(g.locate({1.5, 0.5}).has_value());
  CHECK(g.locate({1.0, 1.0}).has_value());
}

TEST_CASE("refinement is deterministic") {
  const auto a = random_refinement(true, 3, 5).leaf_keys();
  const auto b = random_refinement(true, 3, 5).leaf_keys();
  CHECK(a == b);
}
