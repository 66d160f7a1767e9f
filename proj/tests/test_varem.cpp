#include "resbm/error.hpp"
#include "resbm/graph.hpp"
#include "resbm/metrics.hpp"
#include "resbm/rng.hpp"
#include "resbm/simulate.hpp"
#include "resbm/varem.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace resbm;

namespace {

Matrix random_rows(int n, int k, Philox& rng) {
  Matrix m(n, k);
  for (int i = 0; i < n; ++i) {
    for (int q = 0; q < k; ++q) m(i, q) = 0.1 + rng.uniform();
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

VariationalState random_state(const NetworkSample& s, int k, Philox& rng) {
  VariationalState st;
  const int n = s.n();
  st.tau_bar = random_rows(n, k, rng);
  Matrix t = random_rows(k, k, rng);
  st.t = TransitionMatrix(t);
  st.params.alpha = random_rows(1, k, rng).transpose();
  for (int m = 0; m < s.size(); ++m) {
    Matrix eps(n, k * k);
    for (int q = 0; q < k; ++q) eps.middleCols(q * k, k) = random_rows(n, k, rng);
    st.epsilon.push_back(eps);
    st.tau.push_back(random_rows(n, k, rng));
    Matrix p(k, k);
    for (int q = 0; q < k; ++q)
      for (int l = 0; l <= q; ++l) p(q, l) = p(l, q) = 0.05 + 0.9 * rng.uniform();
    st.params.pi.push_back(p);
  }
  return st;
}

double log_b(int a, double pi) { return std::log(a == 1 ? pi : 1.0 - pi); }

// Straight-line evaluation of the three fixed-point displays, node 0 then node 1.
void oracle_ve_two_nodes(VariationalState& st, const NetworkSample& s) {
  const int k = st.k();
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    std::vector<double> bar(static_cast<size_t>(k));
    for (int q = 0; q < k; ++q) bar[static_cast<size_t>(q)] = std::log(st.params.alpha(q));
    for (int m = 0; m < st.members(); ++m) {
      const int a = static_cast<int>(s[m](i, j));
      for (int q = 0; q < k; ++q) {
        std::vector<double> w(static_cast<size_t>(k));
        double z = 0.0;
        for (int l = 0; l < k; ++l) {
          double g = 0.0;
          for (int p = 0; p < k; ++p) g += st.tau[static_cast<size_t>(m)](j, p) * log_b(a, st.params.pi[static_cast<size_t>(m)](l, p));
          w[static_cast<size_t>(l)] = st.t(q, l) * std::exp(g);
          z += w[static_cast<size_t>(l)];
        }
        for (int l = 0; l < k; ++l) {
          const double e = w[static_cast<size_t>(l)] / z;
          st.epsilon[static_cast<size_t>(m)](i, q * k + l) = e;
          double g = 0.0;
          for (int p = 0; p < k; ++p) g += st.tau[static_cast<size_t>(m)](j, p) * log_b(a, st.params.pi[static_cast<size_t>(m)](l, p));
          bar[static_cast<size_t>(q)] += e * std::log(st.t(q, l) / e) + e * g;
        }
      }
    }
    double z = 0.0;
    for (int q = 0; q < k; ++q) z += std::exp(bar[static_cast<size_t>(q)]);
    for (int q = 0; q < k; ++q) st.tau_bar(i, q) = std::exp(bar[static_cast<size_t>(q)]) / z;
    for (int m = 0; m < st.members(); ++m)
      for (int l = 0; l < k; ++l) {
        double v = 0.0;
        for (int q = 0; q < k; ++q) v += st.tau_bar(i, q) * st.epsilon[static_cast<size_t>(m)](i, q * k + l);
        st.tau[static_cast<size_t>(m)](i, l) = v;
      }
  }
}

Matrix random_graph(int n, double p, Philox& rng) {
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) a(i, j) = a(j, i) = 1.0;
  return a;
}

Matrix one_hot(const std::vector<int>& labels, int k) { return HardAssignment(labels, k).matrix(); }

}  // namespace

TEST_CASE("bernoulli kernel") {
  CHECK(bernoulli_kernel(1, 0.3) == doctest::Approx(0.3));
  CHECK(bernoulli_kernel(0, 0.3) == doctest::Approx(0.7));
  CHECK(bernoulli_kernel(1, 1.0) == 1.0 - 1e-9);
  CHECK(bernoulli_kernel(0, 0.0) == 1.0 - 1e-9);
}

TEST_CASE("VE step on two nodes matches the direct formulas") {
  Philox rng(1, 0);
  for (int t = 0; t < 20; ++t) {
    const int k = 2 + static_cast<int>(rng.below(2));
    Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
    a(0, 1) = a(1, 0) = 1.0;
    if (t % 2) b(0, 1) = b(1, 0) = 1.0;
    const NetworkSample s({a, b});
    VariationalState st = random_state(s, k, rng);
    VariationalState want = st;
    oracle_ve_two_nodes(want, s);
    const VariationalState got = ve_step(st, s);
    CHECK((got.tau_bar - want.tau_bar).cwiseAbs().maxCoeff() < 1e-12);
    for (int m = 0; m < 2; ++m) {
      CHECK((got.epsilon[static_cast<size_t>(m)] - want.epsilon[static_cast<size_t>(m)]).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((got.tau[static_cast<size_t>(m)] - want.tau[static_cast<size_t>(m)]).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK_NOTHROW(got.validate());
  }
}

TEST_CASE("identity transitions collapse member marginals onto the mean") {
  Philox rng(2, 0);
  const NetworkSample s({random_graph(12, 0.4, rng)});
  VariationalState st = random_state(s, 3, rng);
  st.t = TransitionMatrix::identity(3);
  const VariationalState out = ve_step(st, s);
  CHECK((out.tau[0] - out.tau_bar).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("uniform start with equal blocks is a symmetry fixed point") {
  Philox rng(3, 0);
  const NetworkSample s({random_graph(15, 0.3, rng), random_graph(15, 0.3, rng)});
  VariationalState st;
  const int k = 3;
  st.tau_bar = Matrix::Constant(15, k, 1.0 / k);
  st.t = TransitionMatrix::from_kappa(k, 0.2);
  st.params.alpha = Vector::Constant(k, 1.0 / k);
  for (int m = 0; m < 2; ++m) {
    st.tau.push_back(Matrix::Constant(15, k, 1.0 / k));
    st.epsilon.push_back(Matrix::Constant(15, k * k, 1.0 / k));
    st.params.pi.push_back(Matrix::Constant(k, k, 0.3));
  }
  const VariationalState out = ve_step(st, s);
  CHECK((out.tau_bar.array() - 1.0 / k).abs().maxCoeff() < 1e-12);
  CHECK(m_step(out, s).params.alpha.isApproxToConstant(1.0 / k, 1e-12));
}

TEST_CASE("M-step on hard assignments equals counting") {
  // Four nodes, k = 2, two members; every member community has two nodes.
  const std::vector<int> zbar{0, 0, 1, 1};
  const std::vector<std::vector<int>> zm{{0, 1, 0, 1}, {0, 0, 1, 1}};
  Matrix a0 = Matrix::Zero(4, 4), a1 = Matrix::Zero(4, 4);
  a0(0, 2) = a0(2, 0) = 1;
  a0(0, 1) = a0(1, 0) = 1;
  a0(1, 3) = a0(3, 1) = 1;
  a1(0, 1) = a1(1, 0) = 1;
  a1(1, 2) = a1(2, 1) = 1;
  const NetworkSample s({a0, a1});

  VariationalState st;
  st.tau_bar = one_hot(zbar, 2);
  st.t = TransitionMatrix::uniform(2);
  st.params.alpha = Vector::Constant(2, 0.5);
  for (int m = 0; m < 2; ++m) {
    const Matrix h = one_hot(zm[static_cast<size_t>(m)], 2);
    st.tau.push_back(h);
    Matrix eps(4, 4);
    eps << h, h;
    st.epsilon.push_back(eps);
    st.params.pi.push_back(Matrix::Constant(2, 2, 0.5));
  }
  const VariationalState out = m_step(st, s);

  Matrix tc = Matrix::Zero(2, 2);
  for (const auto& z : zm)
    for (int i = 0; i < 4; ++i) tc(zbar[static_cast<size_t>(i)], z[static_cast<size_t>(i)]) += 1;
  for (int q = 0; q < 2; ++q)
    for (int l = 0; l < 2; ++l) CHECK(out.t(q, l) == doctest::Approx(tc(q, l) / tc.row(q).sum()));

  std::array<double, 2> diag_e{0, 0}, diag_p{0, 0};
  for (int m = 0; m < 2; ++m) {
    const auto& z = zm[static_cast<size_t>(m)];
    double off_e = 0, off_p = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        const int q = z[static_cast<size_t>(i)], l = z[static_cast<size_t>(j)];
        if (q == l) {
          diag_e[static_cast<size_t>(q)] += s[m](i, j);
          diag_p[static_cast<size_t>(q)] += 1;
        } else {
          off_e += s[m](i, j);
          off_p += 1;
        }
      }
    CHECK(out.params.pi[static_cast<size_t>(m)](0, 1) == doctest::Approx(std::clamp(off_e / off_p, 1e-9, 1 - 1e-9)));
  }
  for (int m = 0; m < 2; ++m)
    for (int q = 0; q < 2; ++q)
      CHECK(out.params.pi[static_cast<size_t>(m)](q, q) ==
            doctest::Approx(std::clamp(diag_e[static_cast<size_t>(q)] / diag_p[static_cast<size_t>(q)], 1e-9, 1 - 1e-9)));
  CHECK(out.params.alpha(0) == doctest::Approx(0.5));
}

TEST_CASE("conditionals equal to the mean label give identity transitions") {
  Philox rng(4, 0);
  const NetworkSample s({random_graph(10, 0.3, rng)});
  VariationalState st = random_state(s, 3, rng);
  st.epsilon[0].setZero();
  for (int q = 0; q < 3; ++q) st.epsilon[0].col(q * 3 + q).setOnes();
  CHECK(m_step(st, s).t.matrix() == Matrix::Identity(3, 3));
}

TEST_CASE("one-community ELBO has a closed form") {
  Philox rng(5, 0);
  const Matrix a = random_graph(25, 0.2, rng);
  const NetworkSample s({a});
  const VariationalState st = init_state(s, Matrix::Ones(25, 1), {Matrix::Ones(25, 1)});
  const double p = density(a);
  double want = 0.0;
  for (int i = 0; i < 25; ++i)
    for (int j = i + 1; j < 25; ++j) want += a(i, j) * std::log(p) + (1 - a(i, j)) * std::log(1 - p);
  CHECK(st.params.pi[0](0, 0) == doctest::Approx(p).epsilon(1e-14));
  CHECK(elbo(st, s) == doctest::Approx(want).epsilon(1e-12));
  CHECK(elbo(st, s) == elbo(st, s));
}

TEST_CASE("ELBO never decreases across VE and M cycles") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    Philox rng(seed, 77);
    const int n = 10 + static_cast<int>(rng.below(31));
    const int k = 2 + static_cast<int>(rng.below(2));
    std::vector<Matrix> nets;
    for (int m = 0; m < 3; ++m) nets.push_back(random_graph(n, 0.25, rng));
    const NetworkSample s(nets);
    VariationalState st = random_state(s, k, rng);
    st = m_step(st, s);
    double prev = elbo(st, s);
    for (int it = 0; it < 30; ++it) {
      st = m_step(ve_step(st, s), s);
      CHECK_NOTHROW(st.validate());
      const double cur = elbo(st, s);
      CHECK(cur >= prev - 1e-6);
      prev = cur;
    }
  }
}

TEST_CASE("fit_varem argument errors") {
  Philox rng(6, 0);
  const NetworkSample s({random_graph(5, 0.5, rng)});
  CHECK_THROWS_AS(fit_varem(s, 6), ValidationError);
  CHECK_THROWS_AS(fit_varem(NetworkSample({Matrix::Zero(5, 5)}), 2), ValidationError);
}

TEST_CASE("fit_varem with one community") {
  Philox rng(7, 0);
  const NetworkSample s({random_graph(20, 0.3, rng), random_graph(20, 0.3, rng)});
  const ResbmFit fit = fit_varem(s, 1);
  for (int i = 0; i < 20; ++i) CHECK(fit.z_bar[i] == 0);
  CHECK(fit.t.matrix() == Matrix::Ones(1, 1));
}

TEST_CASE("fit_varem recovers a noiseless high-signal sample") {
  for (std::uint64_t seed : {1ull, 2ull}) {
    SimConfig c;
    c.n = 200;
    c.k = 2;
    c.members = 3;
    c.kappa = 0.0;
    c.rho = 4.0;
    c.seed = seed;
    const Simulation sim = simulate(c);
    const ResbmFit fit = fit_varem(sim.sample, 2);
    CHECK_NOTHROW(fit.validate());
    for (int m = 0; m < 3; ++m)
      CHECK(nmi(fit.z_members[static_cast<size_t>(m)], sim.truth.z_members[static_cast<size_t>(m)]) ==
            doctest::Approx(1.0));
    CHECK(nmi(fit.z_bar, sim.truth.z_bar) == doctest::Approx(1.0));
    for (size_t i = 1; i < fit.objective_trace.size(); ++i)
      CHECK(fit.objective_trace[i] >= fit.objective_trace[i - 1] - 1e-6);
  }
}

TEST_CASE("multi-layer SBM mode keeps identity transitions") {
  SimConfig c;
  c.n = 60;
  c.k = 2;
  c.members = 2;
  c.kappa = 0.1;
  c.rho = 4;
  const Simulation sim = simulate(c);
  VarEmOptions o;
  o.mlsbm = true;
  const ResbmFit fit = fit_varem(sim.sample, 2, o);
  CHECK(fit.t.matrix() == Matrix::Identity(2, 2));
}

TEST_CASE("fit_varem is equivariant to a node permutation") {
  SimConfig c;
  c.n = 40;
  c.k = 2;
  c.members = 2;
  c.kappa = 0.05;
  c.rho = 4;
  c.seed = 8;
  const Simulation sim = simulate(c);
  std::vector<int> order(40);
  for (int i = 0; i < 40; ++i) order[static_cast<size_t>(i)] = (i * 13) % 40;
  std::vector<Matrix> permuted;
  for (const Matrix& a : sim.sample.adjacency()) {
    Matrix p(40, 40);
    for (int i = 0; i < 40; ++i)
      for (int j = 0; j < 40; ++j) p(i, j) = a(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    permuted.push_back(p);
  }
  const ResbmFit base = fit_varem(sim.sample, 2);
  const ResbmFit perm = fit_varem(NetworkSample(permuted), 2);
  CHECK(nmi(perm.z_bar, base.z_bar.permuted_nodes(order)) == doctest::Approx(1.0));
}
