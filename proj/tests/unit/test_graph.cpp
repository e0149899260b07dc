#include <numeric>

#include "graph.hpp"
#include "helpers.hpp"

using namespace fk_test;

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); }
  void join(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

TEST_CASE("graph edges follow the support of U") {
  const Domain dom = Domain::free_space(2);
  const Potential u(CompactBump{1.0}, dom);
  Matrix two = Matrix::Zero(2, 2);
  CHECK(is_connected(build_graph(two, u)));
  two(1, 0) = 2.0;
  CHECK_FALSE(is_connected(build_graph(two, u)));

  Matrix chain = Matrix::Zero(5, 2);
  for (int i = 0; i < 5; ++i) chain(i, 0) = 0.9 * i;
  CHECK(is_connected(build_graph(chain, u)));
  Matrix cut(4, 2);
  cut << chain.row(0), chain.row(1), chain.row(3), chain.row(4);
  CHECK_FALSE(is_connected(build_graph(cut, u)));

  CHECK(is_connected(build_graph(Matrix::Zero(1, 2), u)));
  Matrix pairs(4, 2);
  pairs << 0, 0, 0.5, 0, 5, 5, 5.5, 5;
  CHECK_FALSE(is_connected(build_graph(pairs, u)));
}

TEST_CASE("connectivity agrees with union-find on random geometric graphs") {
  Rng rng = make_rng(1, "graph.uf");
  const Domain dom = Domain::torus(2, 3.0);
  const Potential u(CompactBump{1.0}, dom);
  int connected_count = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + static_cast<int>(uniform01(rng) * 20);
    const Matrix q = random_matrix(rng, n, 2, 0.0, 3.0);
    const CommGraph g = build_graph(q, u);
    UnionFind uf(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        CHECK(g.edge(i, j) == g.edge(j, i));
        if (dom.distance(q.row(i).data(), q.row(j).data()) < 1.0) uf.join(i, j);
      }
    bool one = true;
    for (int i = 1; i < n; ++i) one = one && uf.find(i) == uf.find(0);
    CHECK(is_connected(g) == one);
    connected_count += one;
  }
  // Both outcomes occur, so the comparison is not vacuous.
  CHECK(connected_count > 5);
  CHECK(connected_count < 95);
}

TEST_CASE("threshold removes weak edges") {
  const Domain dom = Domain::free_space(1);
  const Potential u(CompactBump{1.0}, dom);
  Matrix q(2, 1);
  q << 0.0, 0.8;
  CHECK(is_connected(build_graph(q, u, 0.0)));
  CHECK_FALSE(is_connected(build_graph(q, u, 0.5)));
}

TEST_CASE("flock detection") {
  const Domain dom = Domain::free_space(2);
  const Potential u(CompactBump{1.0}, dom);
  SUBCASE("manifold data flocks from the start") {
    Matrix q(3, 2), p(3, 2);
    q << 0, 0, 0.5, 0, 1.0, 0;
    p.rowwise() = Eigen::RowVector2d(0.3, 0.1);
    const Trajectory tr = integrate(ParticleEnsemble::make(dom, q, p), u, Plain{}, 2.0, 0.01,
                                    {.save_every = 10});
    const FlockReport f = detect_flocking(tr, u, 1e-6);
    CHECK(f.flocking);
    REQUIRE(f.t_detect);
    CHECK(*f.t_detect == 0.0);
    REQUIRE(f.v);
    CHECK((*f.v - Eigen::Vector2d(0.3, 0.1)).norm() < 1e-12);
  }
  SUBCASE("counter-moving strangers do not flock") {
    Matrix q(2, 2), p(2, 2);
    q << 0, 0, 0, 3;
    p << 0.5, 0, -0.5, 0;
    const Trajectory tr = integrate(ParticleEnsemble::make(dom, q, p), u, Plain{}, 2.0, 0.01,
                                    {.save_every = 10});
    const FlockReport f = detect_flocking(tr, u, 1e-3);
    CHECK_FALSE(f.flocking);
    CHECK_FALSE(f.connected.back());
  }
}
