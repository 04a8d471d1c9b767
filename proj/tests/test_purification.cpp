#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mpdo/models.hpp"
#include "mpdo/purification.hpp"

using namespace mpdo;

namespace {

// Dense |v><v| for comparing full purified projectors.
Matrix projector(const Vector& v) { return v * v.adjoint(); }

Vector full_vector(const PurifiedState& psi) { return psi.amplitudes; }

DenseOperator gibbs_tfim(const SiteChain& chain, double beta) {
  const DenseOperator h = build_hamiltonian(chain, HamiltonianSpec::tfim(1.0, 1.0));
  return gibbs_state(chain, h, GibbsSpec{beta});
}

}  // namespace

TEST_CASE("canonical purification amplitudes follow the square root") {
  SiteChain chain(2, 2);

  // Pure state: sqrt(rho) = rho, so amplitudes are phi_i * conj(phi_j).
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector phi(4);
  for (int i = 0; i < 4; ++i) phi(i) = cx(g(rng), g(rng));
  phi.normalize();
  const DenseOperator rho = DenseOperator::density_matrix(2, 2, projector(phi));
  const PurifiedState psi = canonical_purification(chain, rho);

  // Site-wise interleaving: global digit c_k = i_k * d + j_k.
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const int c1 = (i / 2) * 2 + (j / 2);
      const int c2 = (i % 2) * 2 + (j % 2);
      // sqrt of a clipped ~1e-18 spurious eigenvalue leaves ~1e-9 noise.
      const cx expected = phi(i) * std::conj(phi(j));
      CHECK(std::abs(psi.amplitudes(c1 * 4 + c2) - expected) < 2e-8);
    }
  CHECK(std::abs(psi.amplitudes.norm() - 1.0) < 1e-12);
}

TEST_CASE("canonical purification of the maximally mixed pair is a Bell product") {
  SiteChain chain(2, 2);
  const DenseOperator rho =
      DenseOperator::density_matrix(2, 2, Matrix::Identity(4, 4) / 4.0);
  const PurifiedState psi = canonical_purification(chain, rho);

  // Amplitude 1/2 exactly when physical and ancilla configurations agree.
  for (int g = 0; g < 16; ++g) {
    const int i1 = g / 8, j1 = (g / 4) % 2, i2 = (g / 2) % 2, j2 = g % 2;
    const double expected = (i1 == j1 && i2 == j2) ? 0.5 : 0.0;
    CHECK(std::abs(psi.amplitudes(g) - expected) < 1e-12);
  }

  // On-site Bell pairs mean nothing crosses the cut: Schmidt rank 1.
  const RealVector s = purification_schmidt_spectrum(psi, Cut(chain, 1));
  CHECK(s(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(schmidt_rank(s) == 1);
}

TEST_CASE("ancilla trace returns the source state") {
  SiteChain chain(4, 2);
  for (int variant = 0; variant < 3; ++variant) {
    DenseOperator rho = variant == 0   ? gibbs_tfim(chain, 1.0)
                        : variant == 1 ? test_state(chain, TestStateKind::RankRandom, 17, 3)
                                       : test_state(chain, TestStateKind::Product, 18);
    const PurifiedState psi = canonical_purification(chain, rho);
    CHECK(psi.source_fingerprint == fingerprint(rho.mat()));
    CHECK(trace_norm(ancilla_trace(psi).mat() - rho.mat()) < 1e-10);
  }
}

TEST_CASE("dephased GHZ pair splits into two equal Schmidt weights") {
  SiteChain chain(2, 2);
  const DenseOperator rho = test_state(chain, TestStateKind::DephasedGhz, 0);
  const PurifiedState psi = canonical_purification(chain, rho);
  const Cut cut(chain, 1);

  const RealVector s = purification_schmidt_spectrum(psi, cut);
  CHECK(s(0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(s(1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

  const CutTruncation t = schmidt_truncate(psi, cut, 1);
  CHECK(t.eta == doctest::Approx(0.5).epsilon(1e-12));

  // chi is reported unnormalized: squared norm = 1 - eta.
  CHECK(normalized_chi(t).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eta equals the discarded squared Schmidt weight") {
  SiteChain chain(4, 2);
  const DenseOperator rho = gibbs_tfim(chain, 1.0);
  const PurifiedState psi = canonical_purification(chain, rho);
  const Cut cut(chain, 2);

  const RealVector s = purification_schmidt_spectrum(psi, cut);
  for (int d_p : {1, 2, 3, 5, 8}) {
    const CutTruncation t = schmidt_truncate(psi, cut, d_p);
    double discarded = 0.0;
    for (Eigen::Index i = d_p; i < s.size(); ++i) discarded += s(i) * s(i);
    CHECK(t.eta == doctest::Approx(discarded).epsilon(1e-12));
  }
  CHECK_THROWS_AS(schmidt_truncate(psi, cut, 0), ConfigError);
}

TEST_CASE("projector distance of the normalized truncation is exactly 2 sqrt(eta)") {
  // ||psi psi' - chi chi'||_1 = 2 sqrt(1 - |<psi|chi>|^2) for unit vectors;
  // with chi the normalized truncation the overlap squared is 1 - eta.
  std::mt19937_64 seeds(99);
  for (int trial = 0; trial < 12; ++trial) {
    SiteChain chain(3, 2);
    const DenseOperator rho =
        test_state(chain, TestStateKind::RankRandom, seeds(), 2 + trial % 4);
    const PurifiedState psi = canonical_purification(chain, rho);
    const Cut cut(chain, 1 + trial % 2);
    const CutTruncation t = schmidt_truncate(psi, cut, 1 + trial % 3);

    const Vector chi = normalized_chi(t);
    const double lhs = trace_norm(projector(full_vector(psi)) - projector(chi));
    CHECK(lhs == doctest::Approx(2.0 * std::sqrt(t.eta)).epsilon(1e-9));
  }
}

TEST_CASE("cut_sigma obeys the contraction bound and positivity") {
  SiteChain chain(4, 2);
  const DenseOperator rho = gibbs_tfim(chain, 1.0);
  const PurifiedState psi = canonical_purification(chain, rho);

  double prev_eta = 2.0, prev_delta = 3.0;
  for (int d_p : {1, 2, 3, 4, 6, 8, 16}) {
    const CutTruncation t = schmidt_truncate(psi, Cut(chain, 2), d_p);
    const CutSigma cs = cut_sigma(t, rho);
    CHECK(cs.sigma.is_density_matrix());  // Hermitian, unit trace, PSD enforced
    CHECK(cs.delta_measured <= 2.0 * std::sqrt(t.eta) + 1e-9);
    // Monotone improvement with rank.
    CHECK(t.eta <= prev_eta + 1e-12);
    CHECK(cs.delta_measured <= prev_delta + 1e-9);
    prev_eta = t.eta;
    prev_delta = cs.delta_measured;
  }

  // Full rank: no truncation at all.
  const CutTruncation full = schmidt_truncate(psi, Cut(chain, 2), 256);
  CHECK(full.eta <= 1e-12);
  CHECK(trace_norm(cut_sigma(full, rho).sigma.mat() - rho.mat()) < 1e-10);

  // Fingerprint guard against mixing states.
  const DenseOperator other = test_state(chain, TestStateKind::Product, 1);
  CHECK_THROWS_AS(cut_sigma(full, other), InvariantError);
}

TEST_CASE("product states truncate to themselves at rank one") {
  SiteChain chain(3, 2);
  const DenseOperator rho = test_state(chain, TestStateKind::Product, 23);
  const PurifiedState psi = canonical_purification(chain, rho);
  for (int k = 1; k <= 2; ++k) {
    const CutTruncation t = schmidt_truncate(psi, Cut(chain, k), 1);
    CHECK(t.eta <= 1e-12);
    CHECK(trace_norm(cut_sigma(t, rho).sigma.mat() - rho.mat()) < 1e-9);
  }
}

TEST_CASE("factor families assemble sigma and close under adjoints") {
  SiteChain chain(3, 2);
  const DenseOperator rho = gibbs_tfim(chain, 0.7);
  const PurifiedState psi = canonical_purification(chain, rho);
  const Cut cut(chain, 1);
  const CutTruncation t = schmidt_truncate(psi, cut, 2);

  const std::vector<Matrix> a = truncation_left_factors(t);
  const std::vector<Matrix> b = truncation_right_factors(t);
  const Eigen::Index r = t.left_vectors.cols();
  REQUIRE(a.size() == static_cast<std::size_t>(r * r));
  REQUIRE(b.size() == a.size());

  // A_ij^dagger = A_ji (same for B), so the assembled operator is Hermitian.
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j) {
      CHECK((a[i * r + j].adjoint() - a[j * r + i]).norm() < 1e-12);
      CHECK((b[i * r + j].adjoint() - b[j * r + i]).norm() < 1e-12);
    }

  Matrix assembled = Matrix::Zero(rho.dim(), rho.dim());
  const std::int64_t dim_a = a[0].rows(), dim_b = b[0].rows();
  for (std::size_t m = 0; m < a.size(); ++m)
    for (std::int64_t p = 0; p < dim_a; ++p)
      for (std::int64_t q = 0; q < dim_a; ++q)
        assembled.block(p * dim_b, q * dim_b, dim_b, dim_b) += a[m](p, q) * b[m];

  const CutSigma cs = cut_sigma(t, rho);
  CHECK((assembled - cs.sigma.mat()).norm() < 1e-10);

  // Operator Schmidt rank of sigma is at most the factor count.
  const RealVector s = operator_schmidt_spectrum(cs.sigma, cut);
  CHECK(schmidt_rank(s) <= static_cast<int>(a.size()));
}

TEST_CASE("eta_bound closed form, monotonicity, and domain checks") {
  CHECK(eta_bound(0.0, 0.5, 1) == doctest::Approx(0.5).epsilon(1e-12));

  double prev = std::numeric_limits<double>::infinity();
  for (int d_p = 1; d_p <= 64; d_p *= 2) {
    const double b = eta_bound(1.3, 0.4, d_p);
    CHECK(b <= prev + 1e-15);
    prev = b;
  }

  CHECK_THROWS_AS(eta_bound(1.0, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(eta_bound(1.0, -0.1, 2), ConfigError);
  CHECK_THROWS_AS(eta_bound(1.0, 0.5, 0), ConfigError);
  CHECK_THROWS_AS(eta_bound(-1.0, 0.5, 2), ConfigError);
}

TEST_CASE("measured eta stays below the entanglement bound") {
  SiteChain chain(4, 2);
  const DenseOperator rho = gibbs_tfim(chain, 1.0);
  const PurifiedState psi = canonical_purification(chain, rho);
  for (int k = 1; k <= 3; ++k) {
    const Cut cut(chain, k);
    const RealVector s = purification_schmidt_spectrum(psi, cut);
    for (double alpha : {0.2, 0.5}) {
      // Renyi value of the squared Schmidt spectrum at this cut.
      double sum = 0.0;
      for (Eigen::Index i = 0; i < s.size(); ++i)
        sum += std::pow(s(i) * s(i), alpha);
      const double e_alpha = std::log(sum) / (1.0 - alpha);
      for (int d_p = 1; d_p <= 8; ++d_p) {
        const CutTruncation t = schmidt_truncate(psi, cut, d_p);
        CHECK(t.eta <= eta_bound(e_alpha, alpha, d_p) + 1e-9);
      }
    }
  }
}
