#include <doctest.h>

#include <cmath>
#include <random>

#include "levyhomog/errors.hpp"
#include "levyhomog/fft.hpp"
#include "levyhomog/grid.hpp"

using namespace levyhomog;

namespace {

GridFunction make_1d(int n, double (*fn)(double)) {
  TorusGrid g(1, n);
  std::vector<double> v(g.size());
  for (int i = 0; i < n; ++i) v[i] = fn(g.point(i, 0)[0]);
  return GridFunction(g, std::move(v));
}

VectorField constant_drift(const TorusGrid& g, double w) {
  VectorField d(g);
  for (int ax = 0; ax < g.dim; ++ax)
    std::fill(d.comp[ax].begin(), d.comp[ax].end(), w);
  return d;
}

}  // namespace

TEST_CASE("grid invariants") {
  CHECK_THROWS_AS(TorusGrid(1, 4), ValidationError);
  CHECK_THROWS_AS(TorusGrid(3, 16), ValidationError);
  TorusGrid g(2, 16);
  CHECK(g.size() == 256);
  CHECK(g.h() == doctest::Approx(1.0 / 16));
  CHECK(g.wrap(-1) == 15);
  CHECK(g.wrap(16) == 0);
}

TEST_CASE("upwind gradient of a constant vanishes") {
  TorusGrid g(1, 64);
  GridFunction gf(g, 3.25);
  for (double w : {1.0, -2.0, 0.0}) {
    VectorField grad = upwind_gradient(gf, constant_drift(g, w));
    for (double v : grad.comp[0]) CHECK(v == doctest::Approx(0.0));
  }
}

TEST_CASE("upwind gradient of sine matches the analytic derivative") {
  const int n = 256;
  GridFunction gf = make_1d(n, [](double x) { return std::sin(2 * M_PI * x); });
  VectorField grad = upwind_gradient(gf, constant_drift(gf.grid(), 1.0));
  double err = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = gf.grid().point(i, 0)[0];
    err = std::max(err, std::abs(grad.comp[0][i] - 2 * M_PI * std::cos(2 * M_PI * x)));
  }
  CHECK(err < 0.03 * 2 * M_PI);
}

TEST_CASE("positive drift takes backward differences (hat function)") {
  const int n = 64;
  TorusGrid g(1, n);
  std::vector<double> v(n);
  const double peak = 1.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.point(i, 0)[0];
    v[i] = x <= 0.5 ? 2.0 * peak * x : 2.0 * peak * (1.0 - x);
  }
  GridFunction hat(g, v);
  VectorField grad = upwind_gradient(hat, constant_drift(g, 1.0));
  // on the rising piece the backward slope is +2 peak, on the falling -2 peak
  CHECK(grad.comp[0][10] == doctest::Approx(2.0 * peak));
  CHECK(grad.comp[0][40] == doctest::Approx(-2.0 * peak));
  // at the peak node the backward difference still sees the rising piece
  CHECK(grad.comp[0][n / 2] == doctest::Approx(2.0 * peak));
}

TEST_CASE("upwind gradient grid mismatch") {
  GridFunction gf(TorusGrid(1, 32), 0.0);
  VectorField d(TorusGrid(1, 64));
  CHECK_THROWS_AS(upwind_gradient(gf, d), ValidationError);
}

TEST_CASE("upwind drift term is monotone under nodal perturbations") {
  const int n = 16;
  TorusGrid g(1, n);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(n), b(n);
    for (int i = 0; i < n; ++i) {
      v[i] = unif(rng);
      b[i] = unif(rng);
    }
    GridFunction u(g, v);
    VectorField drift(g);
    // the solver upwinds against the drift: gradient argument -b
    for (int i = 0; i < n; ++i) drift.comp[0][i] = -b[i];
    VectorField grad = upwind_gradient(u, drift);
    const int j = int(unif(rng) * 8 + 8) % n;
    std::vector<double> v2 = v;
    v2[j] += 0.37;
    VectorField grad2 = upwind_gradient(GridFunction(g, v2), drift);
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      const double before = b[i] * grad.comp[0][i];
      const double after = b[i] * grad2.comp[0][i];
      CHECK(after >= before - 1e-12);
    }
  }
}

TEST_CASE("lipschitz seminorm") {
  TorusGrid g(1, 256);
  CHECK(lipschitz_seminorm(GridFunction(g, 7.0)) == 0.0);

  GridFunction s = make_1d(256, [](double x) { return std::sin(2 * M_PI * x); });
  CHECK(lipschitz_seminorm(s) == doctest::Approx(2 * M_PI).epsilon(0.01));

  std::vector<double> v(256, 0.0);
  v[100] = 1.0;
  CHECK(lipschitz_seminorm(GridFunction(g, v)) == doctest::Approx(256.0));
}

TEST_CASE("lipschitz seminorm scales with |alpha|") {
  GridFunction s = make_1d(128, [](double x) { return std::sin(2 * M_PI * x) + 0.3 * std::cos(6 * M_PI * x); });
  const double base = lipschitz_seminorm(s);
  for (double a : {2.0, -3.5, 0.0}) {
    std::vector<double> v = s.values();
    for (double& x : v) x *= a;
    CHECK(lipschitz_seminorm(s.with_values(std::move(v))) ==
          doctest::Approx(std::abs(a) * base));
  }
}

TEST_CASE("sample_at: nodes, midpoints, periodicity") {
  const int n = 64;
  GridFunction s = make_1d(n, [](double x) { return std::cos(2 * M_PI * x); });
  const TorusGrid& g = s.grid();
  CHECK(s.sample_at(g.point(17, 0)) == s.at(17));
  const double mid = 0.5 * (s.at(3) + s.at(4));
  CHECK(s.sample_at(Point{3.5 / n, 0.0}) == doctest::Approx(mid));
  CHECK(s.sample_at(Point{1.25, 0.0}) == doctest::Approx(s.sample_at(Point{0.25, 0.0})));
  CHECK(s.sample_at(Point{-0.75, 0.0}) == doctest::Approx(s.sample_at(Point{0.25, 0.0})));
}

TEST_CASE("sample_at is invariant under integer translations (2d)") {
  TorusGrid g(2, 16);
  std::vector<double> v(g.size());
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (double& x : v) x = unif(rng);
  GridFunction f(g, v);
  for (int trial = 0; trial < 50; ++trial) {
    const Point p{unif(rng) * 2, unif(rng) * 2};
    const Point q{p[0] + 3.0, p[1] - 2.0};
    CHECK(f.sample_at(p) == doctest::Approx(f.sample_at(q)).epsilon(1e-12));
  }
}

TEST_CASE("sup_norm_diff") {
  GridFunction f = make_1d(128, [](double x) { return std::sin(2 * M_PI * x); });
  GridFunction zero(f.grid(), 0.0);
  std::vector<Point> dense;
  for (int i = 0; i < 1024; ++i) dense.push_back(Point{i / 1024.0, 0.0});

  CHECK(sup_norm_diff(f, f, dense) == 0.0);

  std::vector<double> shifted = f.values();
  for (double& v : shifted) v += -1.7;
  CHECK(sup_norm_diff(f, f.with_values(std::move(shifted)), dense) ==
        doctest::Approx(1.7));

  CHECK(sup_norm_diff(f, zero, dense) == doctest::Approx(1.0).epsilon(0.01));
  CHECK_THROWS_AS(sup_norm_diff(f, zero, {}), ValidationError);
}

TEST_CASE("csv round trip") {
  GridFunction f = make_1d(32, [](double x) { return std::sin(2 * M_PI * x) * 1e-3; });
  const std::string path = "/tmp/levyhomog_test_grid.csv";
  write_csv(f, path);
  GridFunction g = read_csv(1, path);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == g[i]);
}

TEST_CASE("fft matches a naive dft and inverts") {
  const int n = 32;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<std::complex<double>> a(n);
  for (auto& z : a) z = {unif(rng), unif(rng)};
  auto b = a;
  fft(b);
  for (int k = 0; k < n; ++k) {
    std::complex<double> s{0.0, 0.0};
    for (int j = 0; j < n; ++j)
      s += a[j] * std::exp(std::complex<double>(0, -2.0 * M_PI * k * j / n));
    CHECK(std::abs(s - b[k]) < 1e-10);
  }
  ifft(b);
  for (int j = 0; j < n; ++j) CHECK(std::abs(a[j] - b[j]) < 1e-12);
}
