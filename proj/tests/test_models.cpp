#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <unsupported/Eigen/KroneckerProduct>

#include "mpdo/models.hpp"

using namespace mpdo;

namespace {

RealVector eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Brute-force transverse-field Ising chain assembled from explicit Kronecker
// products, independent of the library's embedding loops.
Matrix tfim_reference(int n, double J, double g) {
  Matrix x(2, 2), z(2, 2), id = Matrix::Identity(2, 2);
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;

  auto embed = [&](const Matrix& op, int site) {
    Matrix out = Matrix::Identity(1, 1);
    for (int s = 1; s <= n; ++s) {
      const Matrix& factor = (s == site) ? op : id;
      out = Eigen::kroneckerProduct(out, factor).eval();
    }
    return out;
  };

  const std::int64_t dim = std::int64_t{1} << n;
  Matrix h = Matrix::Zero(dim, dim);
  for (int s = 1; s < n; ++s) h -= J * embed(z, s) * embed(z, s + 1);
  for (int s = 1; s <= n; ++s) h -= g * embed(x, s);
  return h;
}

}  // namespace

TEST_CASE("TFIM two-site spectra in the classical and field-only limits") {
  SiteChain chain(2, 2);

  const RealVector zz = eigenvalues(build_hamiltonian(chain, HamiltonianSpec::tfim(1.0, 0.0)).mat());
  CHECK(zz(0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(zz(1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(zz(2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(zz(3) == doctest::Approx(1.0).epsilon(1e-12));

  const RealVector xx = eigenvalues(build_hamiltonian(chain, HamiltonianSpec::tfim(0.0, 1.0)).mat());
  CHECK(xx(0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(std::abs(xx(1)) < 1e-12);
  CHECK(std::abs(xx(2)) < 1e-12);
  CHECK(xx(3) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("TFIM matches the Kronecker-product reference") {
  for (int n : {2, 3, 4}) {
    SiteChain chain(n, 2);
    const Matrix built = build_hamiltonian(chain, HamiltonianSpec::tfim(1.0, 1.0)).mat();
    const Matrix ref = tfim_reference(n, 1.0, 1.0);
    CHECK((built - ref).norm() < 1e-12);
  }
  // Ground energy of the N=4 critical chain against the reference spectrum.
  const RealVector ev = eigenvalues(tfim_reference(4, 1.0, 1.0));
  SiteChain chain(4, 2);
  const RealVector got = eigenvalues(build_hamiltonian(chain, HamiltonianSpec::tfim(1.0, 1.0)).mat());
  CHECK(got(0) == doctest::Approx(ev(0)).epsilon(1e-12));
}

TEST_CASE("XXZ two-site Heisenberg point has the singlet-triplet spectrum") {
  SiteChain chain(2, 2);
  const RealVector ev = eigenvalues(build_hamiltonian(chain, HamiltonianSpec::xxz(1.0, 1.0, 0.0)).mat());
  CHECK(ev(0) == doctest::Approx(-3.0).epsilon(1e-12));
  for (int i = 1; i < 4; ++i) CHECK(ev(i) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("random nearest-neighbour Hamiltonians are Hermitian and seeded") {
  SiteChain chain(3, 2);
  const Matrix h1 = build_hamiltonian(chain, HamiltonianSpec::random_nn(5, 1.0)).mat();
  const Matrix h2 = build_hamiltonian(chain, HamiltonianSpec::random_nn(5, 1.0)).mat();
  const Matrix h3 = build_hamiltonian(chain, HamiltonianSpec::random_nn(6, 1.0)).mat();
  CHECK((h1 - h1.adjoint()).norm() < 1e-12);
  CHECK(h1 == h2);  // deterministic given seed
  CHECK((h1 - h3).norm() > 1e-6);

  const Matrix scaled = build_hamiltonian(chain, HamiltonianSpec::random_nn(5, 2.0)).mat();
  CHECK((scaled - 2.0 * h1).norm() < 1e-12);
}

TEST_CASE("Gibbs state limits: infinite temperature and ground projector") {
  SiteChain chain(3, 2);
  const DenseOperator h = build_hamiltonian(chain, HamiltonianSpec::tfim(1.0, 1.0));

  const DenseOperator hot = gibbs_state(chain, h, GibbsSpec{0.0});
  CHECK((hot.mat() - Matrix::Identity(8, 8) / 8.0).norm() < 1e-12);

  const DenseOperator cold = gibbs_state(chain, h, GibbsSpec{1e6});
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.mat());
  const Vector ground = es.eigenvectors().col(0);
  CHECK(trace_norm(cold.mat() - ground * ground.adjoint()) < 1e-8);
}

TEST_CASE("Gibbs state passes density invariants and commutes with H") {
  SiteChain chain(4, 2);
  const DenseOperator h = build_hamiltonian(chain, HamiltonianSpec::tfim(1.0, 1.0));
  const DenseOperator rho = gibbs_state(chain, h, GibbsSpec{1.0});
  CHECK(rho.is_density_matrix());
  CHECK(two_norm(rho.mat() * h.mat() - h.mat() * rho.mat()) <= 1e-10);

  // Energy expectation against the spectral sum.
  const RealVector ev = eigenvalues(tfim_reference(4, 1.0, 1.0));
  double z = 0.0, e = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double w = std::exp(-(ev(i) - ev(0)));
    z += w;
    e += ev(i) * w;
  }
  const double expected = e / z;
  const double got = (rho.mat() * h.mat()).trace().real();
  CHECK(got == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("Gibbs energy is non-increasing in beta") {
  SiteChain chain(3, 2);
  const DenseOperator h = build_hamiltonian(chain, HamiltonianSpec::xxz(1.0, 0.5, 0.2));
  double prev = std::numeric_limits<double>::infinity();
  for (double beta : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const DenseOperator rho = gibbs_state(chain, h, GibbsSpec{beta});
    const double energy = (rho.mat() * h.mat()).trace().real();
    CHECK(energy <= prev + 1e-12);
    prev = energy;
  }
}

TEST_CASE("test states match their definitions") {
  SiteChain chain(3, 2);

  const DenseOperator mm = test_state(chain, TestStateKind::MaximallyMixed, 0);
  CHECK((mm.mat() - Matrix::Identity(8, 8) / 8.0).norm() < 1e-12);

  const DenseOperator ghz = test_state(chain, TestStateKind::DephasedGhz, 0);
  Matrix expect = Matrix::Zero(8, 8);
  expect(0, 0) = 0.5;
  expect(7, 7) = 0.5;
  CHECK((ghz.mat() - expect).norm() < 1e-12);

  const DenseOperator pure = test_state(chain, TestStateKind::PureRandom, 3);
  RealVector ev = eigenvalues(pure.mat());
  CHECK(ev(ev.size() - 1) == doctest::Approx(1.0).epsilon(1e-10));

  const DenseOperator r2 = test_state(chain, TestStateKind::RankRandom, 4, 2);
  ev = eigenvalues(r2.mat());
  int rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-12) ++rank;
  CHECK(rank == 2);

  const DenseOperator prod = test_state(chain, TestStateKind::Product, 5);
  SiteChain c(3, 2);
  for (int k = 1; k <= 2; ++k)
    CHECK(schmidt_rank(operator_schmidt_spectrum(prod, Cut(c, k))) == 1);

  for (TestStateKind kind : {TestStateKind::Product, TestStateKind::DephasedGhz,
                             TestStateKind::PureRandom, TestStateKind::RankRandom,
                             TestStateKind::MaximallyMixed}) {
    CHECK(test_state(chain, kind, 9, 2).is_density_matrix());
    CHECK(test_state(chain, kind, 9, 2).mat() == test_state(chain, kind, 9, 2).mat());
  }
}

TEST_CASE("test state kinds round-trip through their names") {
  for (TestStateKind kind : {TestStateKind::Product, TestStateKind::DephasedGhz,
                             TestStateKind::PureRandom, TestStateKind::RankRandom,
                             TestStateKind::MaximallyMixed})
    CHECK(test_state_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(test_state_kind_from_string("bogus"), ConfigError);
}
