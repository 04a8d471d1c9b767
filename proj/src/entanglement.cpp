#include "mpdo/entanglement.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace mpdo {

double renyi_entropy(const RealVector& spectrum, double alpha) {
  if (alpha < 0.0) throw ConfigError("renyi_entropy: alpha must be >= 0");

  double sum = 0.0;
  std::vector<double> p;
  p.reserve(spectrum.size());
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const double v = spectrum(i);
    if (v < -1e-12) throw ConfigError("renyi_entropy: negative spectrum entry");
    p.push_back(std::max(v, 0.0));
    sum += p.back();
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("renyi_entropy: spectrum does not sum to 1");

  double value = 0.0;
  if (alpha == 0.0) {
    long support = std::count_if(p.begin(), p.end(), [](double v) { return v > 1e-12; });
    value = std::log(static_cast<double>(std::max(support, 1L)));
  } else if (alpha == 1.0) {
    for (double v : p)
      if (v > 0.0) value -= v * std::log(v);
  } else {
    double s = 0.0;
    for (double v : p)
      if (v > 0.0) s += std::pow(v, alpha);
    value = std::log(s) / (1.0 - alpha);
  }
  return std::max(value, 0.0);
}

double purification_entanglement(const PurifiedState& psi, const Cut& cut, double alpha) {
  const RealVector s = purification_schmidt_spectrum(psi, cut);
  return renyi_entropy(s.cwiseProduct(s), alpha);
}

namespace {

RealVector density_spectrum(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double von_neumann(const Matrix& m) { return renyi_entropy(density_spectrum(m), 1.0); }

}  // namespace

double mutual_information(const DenseOperator& rho, const Cut& cut) {
  const int n = rho.sites();
  Cut checked(SiteChain(n, rho.local_dim(), rho.dim()), cut.pos);

  std::vector<int> left, right;
  for (int s = 1; s <= checked.pos; ++s) left.push_back(s);
  for (int s = checked.pos + 1; s <= n; ++s) right.push_back(s);

  const double sa = von_neumann(partial_trace(rho, right).mat());
  const double sb = von_neumann(partial_trace(rho, left).mat());
  const double sab = von_neumann(rho.mat());
  return std::max(sa + sb - sab, 0.0);
}

namespace {

// Value of S_alpha across (A,A') vs (B,B') for the purification whose
// (physical x ancilla) amplitude matrix is psi, with the ancilla factored as
// ra x rb (ra most significant).
double split_entanglement(const Matrix& psi, std::int64_t dim_a, std::int64_t dim_b,
                          int ra, int rb, double alpha) {
  const std::int64_t rows = dim_a * ra;
  const std::int64_t cols = dim_b * rb;
  Matrix m(rows, cols);
  for (std::int64_t a = 0; a < dim_a; ++a)
    for (std::int64_t b = 0; b < dim_b; ++b)
      for (int u = 0; u < ra; ++u)
        for (int v = 0; v < rb; ++v)
          m(a * ra + u, b * rb + v) = psi(a * dim_b + b, u * rb + v);

  Matrix gram = (rows <= cols) ? Matrix(m * m.adjoint()) : Matrix(m.adjoint() * m);
  RealVector p = density_spectrum(gram);
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std::max(p(i), 0.0);
  p /= p.sum();
  return renyi_entropy(p, alpha);
}

Matrix random_anti_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = cx(g(rng), g(rng));
  Matrix d = 0.5 * (a - a.adjoint());
  const double norm = d.norm();
  if (norm > 0.0) d /= norm;
  return d;
}

// exp(s * delta) for anti-Hermitian delta, via the eigendecomposition of the
// Hermitian matrix i*delta (reused across step sizes by the caller).
struct AntiHermExp {
  Matrix vectors;
  RealVector phases;  // exp(s*delta) = V diag(exp(-i s phases)) V^dagger

  explicit AntiHermExp(const Matrix& delta) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(cx(0.0, 1.0) * delta));
    vectors = es.eigenvectors();
    phases = es.eigenvalues();
  }

  Matrix at(double s) const {
    Vector d(phases.size());
    for (Eigen::Index i = 0; i < phases.size(); ++i)
      d(i) = std::exp(cx(0.0, -s * phases(i)));
    return vectors * d.asDiagonal() * vectors.adjoint();
  }
};

}  // namespace

EopEstimate eop_estimate(const DenseOperator& rho, const Cut& cut, double alpha,
                         const EopOptions& opts) {
  if (!rho.is_density_matrix())
    throw InvariantError("eop_estimate: input is not a validated density matrix");
  if (opts.restarts < 1) throw ConfigError("eop_estimate: restarts must be >= 1");

  const SiteChain chain(rho.sites(), rho.local_dim(), rho.dim());
  const Cut checked(chain, cut.pos);
  std::int64_t dim_a = 1, dim_b = 1;
  for (int s = 0; s < checked.pos; ++s) dim_a *= chain.local_dim;
  for (int s = checked.pos; s < chain.num_sites; ++s) dim_b *= chain.local_dim;

  // Rank purification: columns of E sqrt(p) span the ancilla in the state's
  // eigenbasis; the ancilla index is then split as ra x rb.
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.mat());
  std::vector<std::pair<double, Eigen::Index>> weights;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 1e-14) weights.push_back({es.eigenvalues()(i), i});
  std::sort(weights.begin(), weights.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  const int rank = static_cast<int>(weights.size());

  const int ra0 = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(rank))));
  const int rb0 = (rank + ra0 - 1) / ra0;
  const int m = ra0 * rb0;
  if (m > opts.anc_cap)
    throw ResourceError("eop_estimate: purifying dimension " + std::to_string(m) +
                        " exceeds the cap " + std::to_string(opts.anc_cap));

  Matrix psi0 = Matrix::Zero(rho.dim(), m);
  for (int i = 0; i < rank; ++i)
    psi0.col(i) = std::sqrt(weights[i].first) * es.eigenvectors().col(weights[i].second);

  EopEstimate out;
  out.cut = checked;
  out.alpha = alpha;
  out.restarts = opts.restarts;

  const PurifiedState canonical = canonical_purification(chain, rho);
  out.canonical_value = purification_entanglement(canonical, checked, alpha);

  const std::array<std::pair<int, int>, 2> splits = {{{ra0, rb0}, {rb0, ra0}}};
  double best = out.canonical_value;
  bool any_converged = false;

  for (int restart = 0; restart < opts.restarts; ++restart) {
    for (std::size_t ordering = 0; ordering < splits.size(); ++ordering) {
      if (ordering == 1 && splits[0] == splits[1]) continue;
      const auto [ra, rb] = splits[ordering];

      std::seed_seq seq{opts.seed, static_cast<std::uint64_t>(restart),
                        static_cast<std::uint64_t>(ordering)};
      std::mt19937_64 rng(seq);

      Matrix u = Matrix::Identity(m, m);
      if (restart > 0) u = AntiHermExp(random_anti_hermitian(m, rng)).at(1.0);

      auto value_at = [&](const Matrix& uu) {
        return split_entanglement(psi0 * uu.transpose(), dim_a, dim_b, ra, rb, alpha);
      };

      double current = value_at(u);
      double step = 0.5;
      int iter = 0;
      for (; iter < opts.max_iters && step > 1e-7; ++iter) {
        const AntiHermExp dir(random_anti_hermitian(m, rng));
        bool improved = false;
        for (double sign : {1.0, -1.0}) {
          const Matrix trial = u * dir.at(sign * step);
          const double v = value_at(trial);
          if (v < current - 1e-13) {
            u = trial;
            current = v;
            improved = true;
            ++out.iterations;
            break;
          }
        }
        step *= improved ? 1.5 : 0.6;
      }
      if (step <= 1e-7) any_converged = true;
      best = std::min(best, current);
    }
  }

  out.value = best;
  out.gap_to_canonical = out.canonical_value - out.value;
  out.converged = any_converged;
  return out;
}

std::string scan_method_name(ScanMethod m) {
  switch (m) {
    case ScanMethod::CanonicalPurification: return "canonical-purification";
    case ScanMethod::OptimizedPurification: return "optimized-purification";
    case ScanMethod::MutualInformation: return "mutual-information";
  }
  throw ConfigError("scan_method_name: unknown method");
}

ScanMethod scan_method_from_string(const std::string& name) {
  if (name == "canonical-purification") return ScanMethod::CanonicalPurification;
  if (name == "optimized-purification") return ScanMethod::OptimizedPurification;
  if (name == "mutual-information") return ScanMethod::MutualInformation;
  throw ConfigError("unknown scan method '" + name + "'");
}

EntropyProfile arealaw_scan(const DenseOperator& rho, double alpha, ScanMethod method,
                            const EopOptions& opts, const std::string& source) {
  const SiteChain chain(rho.sites(), rho.local_dim(), rho.dim());

  EntropyProfile profile;
  profile.alpha = alpha;
  profile.method = method;
  profile.source = source;
  profile.values.resize(chain.num_sites - 1);

  PurifiedState canonical;
  if (method == ScanMethod::CanonicalPurification)
    canonical = canonical_purification(chain, rho);

  for (int k = 1; k < chain.num_sites; ++k) {
    const Cut cut(chain, k);
    double v = 0.0;
    switch (method) {
      case ScanMethod::CanonicalPurification:
        v = purification_entanglement(canonical, cut, alpha);
        break;
      case ScanMethod::OptimizedPurification:
        v = eop_estimate(rho, cut, alpha, opts).value;
        break;
      case ScanMethod::MutualInformation:
        v = mutual_information(rho, cut);
        break;
    }
    profile.values(k - 1) = v;
  }
  profile.e_max = profile.values.size() > 0 ? profile.values.maxCoeff() : 0.0;
  return profile;
}

}  // namespace mpdo
