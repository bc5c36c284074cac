#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "sepsaddle/block_matrix.hpp"

using sepsaddle::BlockMatrix;

namespace {

BlockMatrix random_blocks(std::mt19937_64& rng, int d, std::vector<int> widths,
                          double density) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<BlockMatrix::Entry> entries;
  int col = 0;
  for (int w : widths) {
    for (int c = col; c < col + w; ++c)
      for (int r = 0; r < d; ++r)
        if (unit(rng) < density) entries.push_back({r, c, gauss(rng)});
    col += w;
  }
  return BlockMatrix(d, std::move(widths), std::move(entries));
}

}  // namespace

TEST_CASE("single column norm is the euclidean norm") {
  BlockMatrix A(2, {1}, {{0, 0, 3.0}, {1, 0, 4.0}});
  CHECK(A.spectral_norm(0) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("identity block has unit norm") {
  BlockMatrix A(2, {2}, {{0, 0, 1.0}, {1, 1, 1.0}});
  CHECK(A.spectral_norm(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero block: norm 0, matvec 0, column dot 0") {
  BlockMatrix A(3, {2, 1}, {{0, 2, 1.0}});
  CHECK(A.block_is_zero(0));
  CHECK_FALSE(A.block_is_zero(1));
  CHECK(A.spectral_norm(0) == 0.0);

  std::vector<double> v{1.0, -2.0}, out(3, 7.0);
  A.block_matvec(0, v, out);
  for (double e : out) CHECK(e == 0.0);

  std::vector<double> x{1.0, 2.0, 3.0}, dot(2, 7.0);
  A.block_column_dot(0, x, dot);
  CHECK(dot[0] == 0.0);
  CHECK(dot[1] == 0.0);
}

TEST_CASE("wide block norm matches dense SVD oracle") {
  std::mt19937_64 rng(7);
  BlockMatrix A = random_blocks(rng, 5, {3}, 1.0);
  const double oracle = oracles::top_singular_value(oracles::dense_block(A, 0));
  CHECK(A.spectral_norm(0) ==
        doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("power iteration survives a start orthogonal to the top space") {
  // Columns (1,1,0) and (-1,0,1): the cross-product matrix is
  // [[2,-1],[-1,2]], whose top eigenvector (1,-1)/sqrt(2) is orthogonal
  // to the all-ones start. The cross-check start must repair this.
  BlockMatrix A(3, {2}, {{0, 0, 1.0}, {1, 0, 1.0}, {0, 1, -1.0}, {2, 1, 1.0}});
  CHECK(A.spectral_norm(0) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-10));
}

TEST_CASE("block matvec matches dense oracle") {
  std::mt19937_64 rng(11);
  BlockMatrix A = random_blocks(rng, 4, {2}, 1.0);
  Eigen::MatrixXd M = oracles::dense_block(A, 0);
  std::vector<double> v{0.3, -1.7}, out(4);
  A.block_matvec(0, v, out);
  Eigen::Vector2d ve(v[0], v[1]);
  Eigen::VectorXd expect = M * ve;
  for (int r = 0; r < 4; ++r)
    CHECK(out[r] == doctest::Approx(expect(r)).epsilon(1e-12));

  SUBCASE("identity block returns its input") {
    BlockMatrix I(3, {3}, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}});
    std::vector<double> w{1.0, 2.0, 3.0}, iout(3);
    I.block_matvec(0, w, iout);
    CHECK(iout == w);
  }
}

TEST_CASE("column dot matches dense transpose oracle") {
  std::mt19937_64 rng(13);
  BlockMatrix A = random_blocks(rng, 6, {1, 3, 2}, 0.4);
  std::vector<double> x(6);
  std::normal_distribution<double> gauss;
  for (double& e : x) e = gauss(rng);
  Eigen::Map<const Eigen::VectorXd> xe(x.data(), 6);

  for (int i = 0; i < A.num_blocks(); ++i) {
    std::vector<double> out(A.block_width(i));
    A.block_column_dot(i, x, out);
    Eigen::VectorXd expect = oracles::dense_block(A, i).transpose() * xe;
    for (int c = 0; c < A.block_width(i); ++c)
      CHECK(out[c] == doctest::Approx(expect(c)).epsilon(1e-12));
  }
}

TEST_CASE("operator norm properties on random instances") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 20; ++rep) {
    std::uniform_int_distribution<int> d_pick(1, 12), w_pick(1, 4);
    const int d = d_pick(rng);
    std::vector<int> widths(3);
    for (int& w : widths) w = w_pick(rng);
    BlockMatrix A = random_blocks(rng, d, widths, 0.7);

    for (int i = 0; i < A.num_blocks(); ++i) {
      Eigen::MatrixXd M = oracles::dense_block(A, i);
      const double r = A.spectral_norm(i);

      // spectral norm never exceeds the Frobenius norm
      CHECK(r * r <= M.squaredNorm() + 1e-10);

      std::vector<double> v(A.block_width(i)), av(d);
      for (double& e : v) e = gauss(rng);
      A.block_matvec(i, v, av);
      double vn = 0.0, avn = 0.0;
      for (double e : v) vn += e * e;
      for (double e : av) avn += e * e;
      CHECK(std::sqrt(avn) <= r * std::sqrt(vn) + 1e-8);

      // adjointness <A_i v, x> == <v, A_i^T x>
      std::vector<double> x(d), atx(A.block_width(i));
      for (double& e : x) e = gauss(rng);
      A.block_column_dot(i, x, atx);
      double lhs = 0.0, rhs = 0.0;
      for (int k = 0; k < d; ++k) lhs += av[k] * x[k];
      for (int k = 0; k < A.block_width(i); ++k) rhs += v[k] * atx[k];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("full spectral norm matches dense oracle") {
  std::mt19937_64 rng(19);
  BlockMatrix A = random_blocks(rng, 8, {1, 2, 1, 3}, 0.6);
  const double oracle = oracles::top_singular_value(oracles::dense_full(A));
  CHECK(A.spectral_norm() == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("construction validates and accumulates duplicates") {
  CHECK_THROWS_AS(BlockMatrix(2, {1}, {{2, 0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(BlockMatrix(2, {1}, {{0, 1, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(BlockMatrix(2, {0}, {}), std::invalid_argument);
  CHECK_THROWS_AS(BlockMatrix(0, {1}, {}), std::invalid_argument);

  BlockMatrix A(2, {1}, {{0, 0, 1.0}, {0, 0, 2.0}});
  CHECK(A.nnz() == 1);
  std::vector<double> x{1.0, 0.0};
  CHECK(A.column_dot(0, x) == 3.0);

  // exactly cancelling duplicates leave a structurally zero block
  BlockMatrix Z(2, {1}, {{0, 0, 1.0}, {0, 0, -1.0}});
  CHECK(Z.block_is_zero(0));
  CHECK(Z.nnz() == 0);
}

TEST_CASE("dimension mismatches throw") {
  BlockMatrix A(3, {2}, {{0, 0, 1.0}});
  std::vector<double> bad1(1), good2(2), bad4(4), good3(3);
  CHECK_THROWS_AS(A.block_matvec(0, bad1, good3), std::invalid_argument);
  CHECK_THROWS_AS(A.block_matvec(0, good2, bad4), std::invalid_argument);
  CHECK_THROWS_AS(A.block_column_dot(0, bad4, good2), std::invalid_argument);
  CHECK_THROWS_AS(A.block_column_dot(0, good3, bad1), std::invalid_argument);
  CHECK_THROWS_AS(A.spectral_norm(2), std::invalid_argument);
  CHECK_THROWS_AS(A.column_dot(0, good3), std::invalid_argument);
}

TEST_CASE("from_columns builds width-1 blocks") {
  BlockMatrix A = BlockMatrix::from_columns(2, {{3.0, 4.0}, {0.0, 0.0}});
  CHECK(A.num_blocks() == 2);
  CHECK(A.block_width(0) == 1);
  CHECK(A.spectral_norm(0) == doctest::Approx(5.0));
  CHECK(A.block_is_zero(1));
  CHECK_THROWS_AS(BlockMatrix::from_columns(3, {{1.0, 2.0}}),
                  std::invalid_argument);
}

TEST_CASE("norm cache is stable under concurrent readers") {
  std::mt19937_64 rng(23);
  BlockMatrix A = random_blocks(rng, 10, {3, 3, 2}, 0.8);
  std::vector<double> results(8, -1.0);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      double acc = 0.0;
      for (int i = 0; i < A.num_blocks(); ++i) acc += A.spectral_norm(i);
      results[t] = acc + A.spectral_norm();
    });
  for (auto& th : threads) th.join();
  for (int t = 1; t < 8; ++t) CHECK(results[t] == results[0]);
}
