#include "mpdo/models.hpp"

#include <Eigen/Eigenvalues>
#include <random>
#include <unsupported/Eigen/KroneckerProduct>

namespace mpdo {

HamiltonianSpec HamiltonianSpec::tfim(double J, double g) {
  HamiltonianSpec s;
  s.model = Model::Tfim;
  s.J = J;
  s.g = g;
  return s;
}

HamiltonianSpec HamiltonianSpec::xxz(double Jxy, double Jz, double h) {
  HamiltonianSpec s;
  s.model = Model::Xxz;
  s.Jxy = Jxy;
  s.Jz = Jz;
  s.h = h;
  return s;
}

HamiltonianSpec HamiltonianSpec::random_nn(std::uint64_t seed, double strength) {
  HamiltonianSpec s;
  s.model = Model::RandomNN;
  s.seed = seed;
  s.strength = strength;
  return s;
}

namespace {

Matrix pauli_x() {
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

Matrix pauli_y() {
  Matrix y(2, 2);
  y << cx(0, 0), cx(0, -1), cx(0, 1), cx(0, 0);
  return y;
}

Matrix pauli_z() {
  Matrix z(2, 2);
  z << 1, 0, 0, -1;
  return z;
}

// op_a on site a (and op_b on site b = a+1), identity elsewhere.
Matrix embed_two(const SiteChain& chain, int a, const Matrix& op_a, const Matrix& op_b) {
  const int d = chain.local_dim;
  Matrix acc = Matrix::Identity(1, 1);
  for (int s = 1; s <= chain.num_sites; ++s) {
    Matrix local;
    if (s == a)
      local = op_a;
    else if (s == a + 1)
      local = op_b;
    else
      local = Matrix::Identity(d, d);
    acc = Eigen::kroneckerProduct(acc, local).eval();
  }
  return acc;
}

Matrix embed_one(const SiteChain& chain, int a, const Matrix& op) {
  const int d = chain.local_dim;
  Matrix acc = Matrix::Identity(1, 1);
  for (int s = 1; s <= chain.num_sites; ++s) {
    Matrix local = (s == a) ? op : Matrix::Identity(d, d);
    acc = Eigen::kroneckerProduct(acc, local).eval();
  }
  return acc;
}

Matrix gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = cx(n(rng), n(rng));
  return g;
}

}  // namespace

DenseOperator build_hamiltonian(const SiteChain& chain, const HamiltonianSpec& spec) {
  const int N = chain.num_sites;
  const int d = chain.local_dim;
  const std::int64_t dim = chain.dim();
  Matrix H = Matrix::Zero(dim, dim);

  switch (spec.model) {
    case HamiltonianSpec::Model::Tfim: {
      if (d != 2) throw std::invalid_argument("build_hamiltonian: tfim requires d = 2");
      Matrix X = pauli_x(), Z = pauli_z();
      for (int k = 1; k < N; ++k) H -= spec.J * embed_two(chain, k, Z, Z);
      for (int k = 1; k <= N; ++k) H -= spec.g * embed_one(chain, k, X);
      break;
    }
    case HamiltonianSpec::Model::Xxz: {
      if (d != 2) throw std::invalid_argument("build_hamiltonian: xxz requires d = 2");
      Matrix X = pauli_x(), Y = pauli_y(), Z = pauli_z();
      for (int k = 1; k < N; ++k) {
        H += spec.Jxy * (embed_two(chain, k, X, X) + embed_two(chain, k, Y, Y));
        H += spec.Jz * embed_two(chain, k, Z, Z);
      }
      for (int k = 1; k <= N; ++k) H -= spec.h * embed_one(chain, k, Z);
      break;
    }
    case HamiltonianSpec::Model::RandomNN: {
      std::mt19937_64 rng(spec.seed);
      for (int k = 1; k < N; ++k) {
        Matrix g = gaussian_matrix(d * d, d * d, rng);
        Matrix herm = 0.5 * (g + g.adjoint()) * spec.strength;
        // herm acts on sites (k, k+1); expand it into the full chain.
        Matrix acc = Matrix::Identity(1, 1);
        std::int64_t left = 1;
        for (int s = 1; s < k; ++s) left *= d;
        std::int64_t right = 1;
        for (int s = k + 2; s <= N; ++s) right *= d;
        acc = Eigen::kroneckerProduct(Matrix::Identity(left, left), herm).eval();
        acc = Eigen::kroneckerProduct(acc, Matrix::Identity(right, right)).eval();
        H += acc;
      }
      break;
    }
  }
  return DenseOperator(N, d, std::move(H));
}

DenseOperator gibbs_state(const SiteChain& chain, const DenseOperator& hamiltonian,
                          const GibbsSpec& gibbs) {
  if (gibbs.beta < 0) throw std::invalid_argument("gibbs_state: beta must be >= 0");
  const Matrix& H = hamiltonian.mat();
  double herm = (H - H.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10)
    throw std::invalid_argument("gibbs_state: Hamiltonian not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.adjoint()));
  const RealVector& ev = es.eigenvalues();
  double e0 = ev.minCoeff();
  RealVector w(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) w(i) = std::exp(-gibbs.beta * (ev(i) - e0));
  w /= w.sum();
  Matrix rho = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();
  return DenseOperator::density_matrix(chain.num_sites, chain.local_dim, std::move(rho));
}

TestStateKind test_state_kind_from_string(const std::string& name) {
  if (name == "product") return TestStateKind::Product;
  if (name == "dephased-ghz") return TestStateKind::DephasedGhz;
  if (name == "pure-random") return TestStateKind::PureRandom;
  if (name == "rank-random") return TestStateKind::RankRandom;
  if (name == "maximally-mixed") return TestStateKind::MaximallyMixed;
  throw ConfigError("unknown test state kind: " + name);
}

std::string to_string(TestStateKind kind) {
  switch (kind) {
    case TestStateKind::Product: return "product";
    case TestStateKind::DephasedGhz: return "dephased-ghz";
    case TestStateKind::PureRandom: return "pure-random";
    case TestStateKind::RankRandom: return "rank-random";
    case TestStateKind::MaximallyMixed: return "maximally-mixed";
  }
  return "?";
}

DenseOperator test_state(const SiteChain& chain, TestStateKind kind, std::uint64_t seed,
                         int rank) {
  const int N = chain.num_sites;
  const int d = chain.local_dim;
  const std::int64_t dim = chain.dim();
  std::mt19937_64 rng(seed);

  Matrix rho;
  switch (kind) {
    case TestStateKind::Product: {
      rho = Matrix::Identity(1, 1);
      for (int s = 1; s <= N; ++s) {
        Matrix g = gaussian_matrix(d, d, rng);
        Matrix local = g * g.adjoint();
        local /= local.trace().real();
        rho = Eigen::kroneckerProduct(rho, local).eval();
      }
      break;
    }
    case TestStateKind::DephasedGhz: {
      rho = Matrix::Zero(dim, dim);
      rho(0, 0) = 0.5;
      rho(dim - 1, dim - 1) = 0.5;
      break;
    }
    case TestStateKind::PureRandom: {
      Vector v = gaussian_matrix(static_cast<int>(dim), 1, rng);
      v.normalize();
      rho = v * v.adjoint();
      break;
    }
    case TestStateKind::RankRandom: {
      if (rank < 1 || rank > dim)
        throw std::invalid_argument("test_state: rank outside 1..d^N");
      Matrix g = gaussian_matrix(static_cast<int>(dim), rank, rng);
      rho = g * g.adjoint();
      rho /= rho.trace().real();
      break;
    }
    case TestStateKind::MaximallyMixed: {
      rho = Matrix::Identity(dim, dim) / static_cast<double>(dim);
      break;
    }
  }
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();
  return DenseOperator::density_matrix(N, d, std::move(rho));
}

}  // namespace mpdo
