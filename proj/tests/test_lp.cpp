#include <cmath>
#include <random>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "tailbound/lp.hpp"

using namespace tailbound::lp;
using Catch::Approx;

namespace {

// Solves the k x k system M y = r by Gaussian elimination; false if singular.
bool solve_square(std::vector<std::vector<double>> M, std::vector<double> r, std::vector<double>& y) {
  const std::size_t k = r.size();
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < k; ++i) {
      if (std::abs(M[i][c]) > std::abs(M[piv][c])) piv = i;
    }
    if (std::abs(M[piv][c]) < 1e-10) return false;
    std::swap(M[c], M[piv]);
    std::swap(r[c], r[piv]);
    for (std::size_t i = 0; i < k; ++i) {
      if (i == c) continue;
      const double f = M[i][c] / M[c][c];
      for (std::size_t j = c; j < k; ++j) M[i][j] -= f * M[c][j];
      r[i] -= f * r[c];
    }
  }
  y.resize(k);
  for (std::size_t i = 0; i < k; ++i) y[i] = r[i] / M[i][i];
  return true;
}

// Optimum of min c.x s.t. A x <= b, 0 <= x <= u by enumerating every basic
// solution; NaN when none is feasible.
double vertex_enumeration(const std::vector<double>& c, const std::vector<std::vector<double>>& A,
                          const std::vector<double>& b, const std::vector<double>& u) {
  const std::size_t n = c.size();
  std::vector<std::vector<double>> H = A;
  std::vector<double> h = b;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = -1.0;
    H.push_back(e);
    h.push_back(0.0);
    e[i] = 1.0;
    H.push_back(e);
    h.push_back(u[i]);
  }
  const std::size_t m = H.size();
  double best = NAN;
  std::vector<std::size_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    std::vector<std::vector<double>> M;
    std::vector<double> r;
    for (auto i : pick) {
      M.push_back(H[i]);
      r.push_back(h[i]);
    }
    std::vector<double> x;
    if (solve_square(M, r, x)) {
      bool ok = true;
      for (std::size_t i = 0; i < m && ok; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += H[i][j] * x[j];
        ok = s <= h[i] + 1e-9;
      }
      if (ok) {
        double v = 0.0;
        for (std::size_t j = 0; j < n; ++j) v += c[j] * x[j];
        if (std::isnan(best) || v < best) best = v;
      }
    }
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == m - n + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

}  // namespace

TEST_CASE("small programs with known optima", "[lp]") {
  LinearProgram a(1);
  a.objective = {1.0};
  a.lower = {3.0};
  a.upper = {10.0};
  auto s = solve(a);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.x[0] == Approx(3.0));
  CHECK(s.objective_value == Approx(3.0));

  LinearProgram b(2);
  b.objective = {-1.0, -1.0};
  b.add_row({1.0, 1.0}, Relation::less_equal, 1.0);
  s = solve(b);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.objective_value == Approx(-1.0));

  // Same bound, stated as a row.
  LinearProgram c(1);
  c.objective = {1.0};
  c.add_row({-1.0}, Relation::less_equal, -3.0);
  c.add_row({1.0}, Relation::less_equal, 10.0);
  s = solve(c);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.objective_value == Approx(3.0));
}

TEST_CASE("infeasible and unbounded programs are reported", "[lp]") {
  LinearProgram inf(2);
  inf.add_row({1.0, 1.0}, Relation::less_equal, 1.0);
  inf.add_row({-1.0, -1.0}, Relation::less_equal, -2.0);
  CHECK(solve(inf).status == Status::infeasible);

  LinearProgram unb(2);
  unb.objective = {-1.0, 0.0};
  unb.add_row({1.0, -1.0}, Relation::less_equal, 1.0);
  CHECK(solve(unb).status == Status::unbounded);

  LinearProgram eq(2);
  eq.objective = {1.0, 2.0};
  eq.add_row({1.0, 1.0}, Relation::equal, 4.0);
  eq.upper = {3.0, kInf};
  const auto s = solve(eq);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.x[0] == Approx(3.0));
  CHECK(s.x[1] == Approx(1.0));
}

TEST_CASE("free variables", "[lp]") {
  // min |x - 2| + |y + 1| written with free x, y.
  LinearProgram p(4);
  p.objective = {0.0, 0.0, 1.0, 1.0};
  p.lower = {-kInf, -kInf, 0.0, 0.0};
  p.add_row({1.0, 0.0, -1.0, 0.0}, Relation::less_equal, 2.0);
  p.add_row({-1.0, 0.0, -1.0, 0.0}, Relation::less_equal, -2.0);
  p.add_row({0.0, 1.0, 0.0, -1.0}, Relation::less_equal, -1.0);
  p.add_row({0.0, -1.0, 0.0, -1.0}, Relation::less_equal, 1.0);
  const auto s = solve(p);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.objective_value == Approx(0.0).margin(1e-12));
  CHECK(s.x[0] == Approx(2.0));
  CHECK(s.x[1] == Approx(-1.0));
}

TEST_CASE("degenerate program that cycles under naive pricing terminates", "[lp]") {
  LinearProgram p(4);
  p.objective = {-0.75, 20.0, -0.5, 6.0};
  p.add_row({0.25, -8.0, -1.0, 9.0}, Relation::less_equal, 0.0);
  p.add_row({0.5, -12.0, -0.5, 3.0}, Relation::less_equal, 0.0);
  p.add_row({0.0, 0.0, 1.0, 0.0}, Relation::less_equal, 1.0);
  const auto s = solve(p);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.objective_value == Approx(-1.25));
}

TEST_CASE("random programs match vertex enumeration", "[lp]") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> nv(2, 6);
  std::uniform_int_distribution<int> nr(1, 8);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::uniform_real_distribution<double> pos(0.5, 6.0);
  int feasible = 0;
  for (int rep = 0; rep < 150; ++rep) {
    const auto n = static_cast<std::size_t>(nv(rng));
    const auto m = static_cast<std::size_t>(nr(rng));
    std::vector<double> c(n), u(n);
    std::vector<std::vector<double>> A(m, std::vector<double>(n));
    std::vector<double> b(m);
    for (auto& x : c) x = coef(rng);
    for (auto& x : u) x = pos(rng);
    for (auto& row : A) {
      for (auto& x : row) x = coef(rng);
    }
    for (auto& x : b) x = coef(rng) + 1.0;

    LinearProgram lp(n);
    lp.objective = c;
    lp.upper = u;
    for (std::size_t i = 0; i < m; ++i) lp.add_row(A[i], Relation::less_equal, b[i]);
    const auto s = solve(lp);
    const double ref = vertex_enumeration(c, A, b, u);
    if (std::isnan(ref)) {
      CHECK(s.status == Status::infeasible);
      continue;
    }
    ++feasible;
    REQUIRE(s.status == Status::optimal);
    CHECK(std::abs(s.objective_value - ref) <= 1e-7 * std::max(1.0, std::abs(ref)));
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(s.x[j] >= -1e-9);
      CHECK(s.x[j] <= u[j] + 1e-9);
    }
  }
  CHECK(feasible > 50);
}

TEST_CASE("row duals certify optimality", "[lp]") {
  // min c.x, A x <= b, x >= 0; dual y <= 0 with A^T y <= c and b.y = c.x.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.1, 3.0);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 5;
    const std::size_t m = 4;
    std::vector<std::vector<double>> A(m, std::vector<double>(n));
    std::vector<double> b(m), c(n);
    for (auto& row : A) {
      for (auto& x : row) x = pos(rng);
    }
    for (auto& x : b) x = pos(rng);
    for (auto& x : c) x = -pos(rng);
    LinearProgram lp(n);
    lp.objective = c;
    for (std::size_t i = 0; i < m; ++i) lp.add_row(A[i], Relation::less_equal, b[i]);
    const auto s = solve(lp);
    REQUIRE(s.status == Status::optimal);
    REQUIRE(s.duals.size() == m);
    double dual_obj = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(s.duals[i] <= 1e-9);
      dual_obj += b[i] * s.duals[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
      double aty = 0.0;
      for (std::size_t i = 0; i < m; ++i) aty += A[i][j] * s.duals[i];
      CHECK(aty <= c[j] + 1e-8);
    }
    CHECK(dual_obj == Approx(s.objective_value).epsilon(1e-9));
  }
}

TEST_CASE("iteration limit is reported rather than thrown", "[lp]") {
  LinearProgram p(3);
  p.objective = {-1.0, -1.0, -1.0};
  p.add_row({1.0, 2.0, 1.0}, Relation::less_equal, 4.0);
  p.add_row({2.0, 1.0, 1.0}, Relation::less_equal, 4.0);
  SolverOptions opt;
  opt.max_iterations = 1;
  CHECK(solve(p, opt).status == Status::iteration_limit);
  CHECK(std::string(to_string(Status::unbounded)) == "unbounded");
}
