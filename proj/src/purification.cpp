#include "mpdo/purification.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace mpdo {

namespace {

// Split a purified configuration index (base d^2 digits, site 1 most
// significant) into its physical and ancilla configuration indices.
void split_phys_anc(std::int64_t g, int num_sites, int d, std::int64_t& phys,
                    std::int64_t& anc) {
  const int dd = d * d;
  phys = 0;
  anc = 0;
  std::int64_t mult = 1;
  for (int k = 0; k < num_sites; ++k) {
    const int c = static_cast<int>(g % dd);
    g /= dd;
    phys += static_cast<std::int64_t>(c / d) * mult;
    anc += static_cast<std::int64_t>(c % d) * mult;
    mult *= d;
  }
}

// Rearrange purified amplitudes into the (physical, ancilla) matrix Phi with
// Phi(p, a) = amp[g]; tracing the ancillas is then Phi * Phi^dagger.
Matrix phys_anc_matrix(const Vector& amp, int num_sites, int d) {
  std::int64_t dim = 1;
  for (int k = 0; k < num_sites; ++k) dim *= d;
  Matrix phi(dim, dim);
  for (std::int64_t g = 0; g < amp.size(); ++g) {
    std::int64_t p = 0, a = 0;
    split_phys_anc(g, num_sites, d, p, a);
    phi(p, a) = amp(g);
  }
  return phi;
}

struct CutShape {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
};

CutShape cut_shape(int num_sites, int d, int cut_pos) {
  const std::int64_t dd = static_cast<std::int64_t>(d) * d;
  CutShape s{1, 1};
  for (int k = 0; k < cut_pos; ++k) s.rows *= dd;
  for (int k = cut_pos; k < num_sites; ++k) s.cols *= dd;
  return s;
}

struct CutSvd {
  RealVector values;  // descending
  Matrix u;           // rows x r
  Matrix v;           // cols x r, state convention: psi = sum s_i u_i (x) v_i
};

CutSvd cut_svd(const PurifiedState& psi, const Cut& cut) {
  const CutShape shape = cut_shape(psi.chain.num_sites, psi.chain.local_dim, cut.pos);
  Eigen::Map<const Eigen::Matrix<cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      m(psi.amplitudes.data(), shape.rows, shape.cols);

  CutSvd out;
  if (std::max(shape.rows, shape.cols) > 1024) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.values = svd.singularValues();
    out.u = svd.matrixU();
    out.v = svd.matrixV().conjugate();
  } else {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.values = svd.singularValues();
    out.u = svd.matrixU();
    out.v = svd.matrixV().conjugate();
  }

  // Fix the overall phase of each Schmidt pair: rotate so the largest-modulus
  // entry of the left vector is real and positive (first such entry on ties).
  for (Eigen::Index i = 0; i < out.u.cols(); ++i) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < out.u.rows(); ++r) {
      const double a = std::abs(out.u(r, i));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (best <= 0.0) continue;
    const cx phase = out.u(arg, i) / best;
    out.u.col(i) *= std::conj(phase);
    out.v.col(i) *= phase;
  }
  return out;
}

}  // namespace

PurifiedState canonical_purification(const SiteChain& chain, const DenseOperator& rho) {
  if (rho.sites() != chain.num_sites || rho.local_dim() != chain.local_dim)
    throw InvariantError("canonical_purification: operator does not live on this chain");
  if (!rho.is_density_matrix())
    throw InvariantError("canonical_purification: input is not a validated density matrix");

  Matrix root;
  try {
    root = psd_sqrt(rho.mat());
  } catch (const std::invalid_argument& e) {
    throw InvariantError(std::string("canonical_purification: ") + e.what());
  }

  const std::int64_t dim = chain.dim();
  PurifiedState psi;
  psi.chain = chain;
  psi.amplitudes.resize(dim * dim);
  for (std::int64_t g = 0; g < dim * dim; ++g) {
    std::int64_t p = 0, a = 0;
    split_phys_anc(g, chain.num_sites, chain.local_dim, p, a);
    psi.amplitudes(g) = root(p, a);
  }

  const double norm = psi.amplitudes.norm();
  if (std::abs(norm - 1.0) > 1e-8)
    throw InvariantError("canonical_purification: amplitudes are not normalized");
  psi.amplitudes /= norm;
  psi.source_fingerprint = fingerprint(rho.mat());
  return psi;
}

DenseOperator ancilla_trace(const PurifiedState& psi) {
  const Matrix phi = phys_anc_matrix(psi.amplitudes, psi.chain.num_sites, psi.chain.local_dim);
  return DenseOperator(psi.chain.num_sites, psi.chain.local_dim, phi * phi.adjoint());
}

RealVector purification_schmidt_spectrum(const PurifiedState& psi, const Cut& cut) {
  return cut_svd(psi, cut).values;
}

CutTruncation schmidt_truncate(const PurifiedState& psi, const Cut& cut, int d_p) {
  if (d_p < 1) throw ConfigError("schmidt_truncate: d_p must be >= 1");

  const CutSvd svd = cut_svd(psi, cut);
  Eigen::Index keep = std::min<Eigen::Index>(d_p, svd.values.size());
  while (keep > 1 && svd.values(keep - 1) <= 1e-15) --keep;

  CutTruncation t;
  t.cut = cut;
  t.d_p = d_p;
  t.schmidt_values = svd.values;
  t.left_vectors = svd.u.leftCols(keep);
  t.right_vectors = svd.v.leftCols(keep);
  t.eta = 0.0;
  for (Eigen::Index i = keep; i < svd.values.size(); ++i)
    t.eta += svd.values(i) * svd.values(i);
  t.source_fingerprint = psi.source_fingerprint;
  t.num_sites = psi.chain.num_sites;
  t.local_dim = psi.chain.local_dim;
  return t;
}

RealVector CutTruncation::normalized_weights() const {
  const Eigen::Index r = left_vectors.cols();
  const RealVector kept = schmidt_values.head(r);
  const double norm = kept.norm();
  if (norm <= 0.0) throw InvariantError("normalized_weights: truncated state is zero");
  return kept / norm;
}

Vector normalized_chi(const CutTruncation& t) {
  const CutShape shape = cut_shape(t.num_sites, t.local_dim, t.cut.pos);
  const RealVector w = t.normalized_weights();
  Matrix m = Matrix::Zero(shape.rows, shape.cols);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    m.noalias() += w(i) * t.left_vectors.col(i) * t.right_vectors.col(i).transpose();

  Vector chi(shape.rows * shape.cols);
  for (std::int64_t r = 0; r < shape.rows; ++r)
    for (std::int64_t c = 0; c < shape.cols; ++c) chi(r * shape.cols + c) = m(r, c);
  return chi;
}

CutSigma cut_sigma(const CutTruncation& t, const DenseOperator& rho) {
  if (fingerprint(rho.mat()) != t.source_fingerprint)
    throw InvariantError("cut_sigma: truncation was not derived from this operator");

  const Vector chi = normalized_chi(t);
  const Matrix phi = phys_anc_matrix(chi, t.num_sites, t.local_dim);

  CutSigma out{DenseOperator::density_matrix(t.num_sites, t.local_dim, phi * phi.adjoint()),
               0.0, 2.0 * std::sqrt(std::max(t.eta, 0.0))};
  out.delta_measured = trace_norm(rho.mat() - out.sigma.mat());
  if (out.delta_measured > out.two_sqrt_eta + 1e-9)
    throw InvariantError("cut_sigma: measured error exceeds the truncation bound");
  return out;
}

namespace {

// Reshape a left Schmidt vector (on cut_pos purified sites) into its
// (physical x ancilla) matrix, and likewise for right vectors.
Matrix schmidt_vector_matrix(const Vector& v, int sites, int d) {
  std::int64_t dim = 1;
  for (int k = 0; k < sites; ++k) dim *= d;
  Matrix m(dim, dim);
  for (std::int64_t g = 0; g < v.size(); ++g) {
    std::int64_t p = 0, a = 0;
    split_phys_anc(g, sites, d, p, a);
    m(p, a) = v(g);
  }
  return m;
}

std::vector<Matrix> side_factors(const Matrix& vectors, const RealVector& weights,
                                 int sites, int d) {
  const Eigen::Index r = vectors.cols();
  std::vector<Matrix> reshaped;
  reshaped.reserve(r);
  for (Eigen::Index i = 0; i < r; ++i)
    reshaped.push_back(schmidt_vector_matrix(vectors.col(i), sites, d));

  std::vector<Matrix> factors;
  factors.reserve(static_cast<std::size_t>(r) * r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j)
      factors.push_back(std::sqrt(weights(i) * weights(j)) * reshaped[i] *
                        reshaped[j].adjoint());
  return factors;
}

}  // namespace

std::vector<Matrix> truncation_left_factors(const CutTruncation& t) {
  return side_factors(t.left_vectors, t.normalized_weights(), t.cut.pos, t.local_dim);
}

std::vector<Matrix> truncation_right_factors(const CutTruncation& t) {
  return side_factors(t.right_vectors, t.normalized_weights(), t.num_sites - t.cut.pos,
                      t.local_dim);
}

double eta_bound(double e_alpha, double alpha, int d_p) {
  if (alpha < 0.0 || alpha >= 1.0)
    throw ConfigError("eta_bound: alpha must lie in [0, 1)");
  if (d_p < 1) throw ConfigError("eta_bound: d_p must be >= 1");
  if (e_alpha < -1e-12) throw ConfigError("eta_bound: negative entanglement value");
  const double e = std::max(e_alpha, 0.0);

  if (alpha == 0.0) {
    const double x = e - std::log(static_cast<double>(d_p));
    if (x < 0.0) return 0.0;
    if (x > 0.0) return std::numeric_limits<double>::infinity();
    return 1.0;
  }
  const double log_bound =
      (1.0 - alpha) / alpha * (std::log1p(-alpha) + e - std::log(static_cast<double>(d_p)));
  return std::exp(log_bound);
}

}  // namespace mpdo
