#include "mpdo/operators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cstring>
#include <limits>

namespace mpdo {

std::int64_t dense_dim(int d, int n, std::int64_t cap) {
  if (d < 1) throw ConfigError("dense_dim: local dimension must be >= 1");
  if (n < 0) throw ConfigError("dense_dim: negative site count");
  std::int64_t dim = 1;
  for (int i = 0; i < n; ++i) {
    if (dim > std::numeric_limits<std::int64_t>::max() / d)
      throw ResourceError("dense_dim: d^N overflows 64-bit arithmetic");
    dim *= d;
    if (cap > 0 && dim > cap)
      throw ResourceError("dense_dim: d^N = " + std::to_string(dim) +
                          "+ exceeds the dense cap " + std::to_string(cap));
  }
  return dim;
}

SiteChain::SiteChain(int N, int d, std::int64_t cap)
    : num_sites(N), local_dim(d), dense_cap(cap) {
  if (N < 2) throw ConfigError("SiteChain: need at least 2 sites");
  if (d < 2) throw ConfigError("SiteChain: local dimension must be >= 2");
  dense_dim(d, N, cap);  // overflow / cap check
}

Cut::Cut(const SiteChain& chain, int k) : pos(k) {
  if (k < 1 || k > chain.num_sites - 1)
    throw ConfigError("Cut: position " + std::to_string(k) +
                                " outside 1..N-1 for N = " + std::to_string(chain.num_sites));
}

DenseOperator::DenseOperator(int sites, int d, Matrix m)
    : sites_(sites), d_(d), mat_(std::move(m)) {
  if (sites < 0) throw std::invalid_argument("DenseOperator: negative site count");
  if (sites > 0 && d < 2) throw std::invalid_argument("DenseOperator: local dimension must be >= 2");
  std::int64_t dim = dense_dim(d, sites, 0);
  if (mat_.rows() != dim || mat_.cols() != dim)
    throw std::invalid_argument("DenseOperator: matrix is " + std::to_string(mat_.rows()) + "x" +
                                std::to_string(mat_.cols()) + ", expected d^sites = " +
                                std::to_string(dim));
}

DenseOperator DenseOperator::density_matrix(int sites, int d, Matrix m) {
  DenseOperator op(sites, d, std::move(m));
  const Matrix& r = op.mat();
  double herm = (r - r.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-12)
    throw InvariantError("density_matrix: Hermiticity deviation " + std::to_string(herm));
  double tr_dev = std::abs(r.trace() - cx(1.0, 0.0));
  if (tr_dev > 1e-12)
    throw InvariantError("density_matrix: trace deviates from 1 by " + std::to_string(tr_dev));
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (r + r.adjoint()), Eigen::EigenvaluesOnly);
  double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -1e-10)
    throw InvariantError("density_matrix: negative eigenvalue " + std::to_string(min_eig));
  op.dm_flag_ = true;
  return op;
}

DenseOperator partial_trace(const DenseOperator& op, const std::vector<int>& traced_sites) {
  const int N = op.sites();
  const int d = op.local_dim();
  std::vector<bool> traced(static_cast<size_t>(N) + 1, false);
  for (int s : traced_sites) {
    if (s < 1 || s > N) throw ConfigError("partial_trace: site index out of range");
    if (traced[s]) throw ConfigError("partial_trace: duplicate site index");
    traced[s] = true;
  }
  std::vector<int> kept;
  for (int s = 1; s <= N; ++s)
    if (!traced[s]) kept.push_back(s);

  // Strides of each site in the full index (site 1 most significant).
  std::vector<std::int64_t> stride(static_cast<size_t>(N) + 1, 1);
  for (int s = N - 1; s >= 1; --s) stride[s] = stride[s + 1] * d;

  const int nk = static_cast<int>(kept.size());
  const int nt = N - nk;
  std::int64_t dim_kept = 1;
  for (int i = 0; i < nk; ++i) dim_kept *= d;
  std::int64_t dim_traced = 1;
  for (int i = 0; i < nt; ++i) dim_traced *= d;

  std::vector<int> traced_list;
  for (int s = 1; s <= N; ++s)
    if (traced[s]) traced_list.push_back(s);

  // Base offset of each traced configuration (applied to both row and column).
  std::vector<std::int64_t> traced_offset(dim_traced, 0);
  for (std::int64_t t = 0; t < dim_traced; ++t) {
    std::int64_t rem = t, off = 0;
    for (int i = nt - 1; i >= 0; --i) {
      off += (rem % d) * stride[traced_list[i]];
      rem /= d;
    }
    traced_offset[t] = off;
  }
  std::vector<std::int64_t> kept_offset(dim_kept, 0);
  for (std::int64_t c = 0; c < dim_kept; ++c) {
    std::int64_t rem = c, off = 0;
    for (int i = nk - 1; i >= 0; --i) {
      off += (rem % d) * stride[kept[i]];
      rem /= d;
    }
    kept_offset[c] = off;
  }

  Matrix out = Matrix::Zero(dim_kept, dim_kept);
  const Matrix& m = op.mat();
  for (std::int64_t r = 0; r < dim_kept; ++r)
    for (std::int64_t c = 0; c < dim_kept; ++c) {
      cx sum = 0;
      for (std::int64_t t = 0; t < dim_traced; ++t)
        sum += m(kept_offset[r] + traced_offset[t], kept_offset[c] + traced_offset[t]);
      out(r, c) = sum;
    }
  return DenseOperator(nk, d, std::move(out));
}

namespace {

bool nearly_hermitian(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  double scale = m.cwiseAbs().maxCoeff();
  double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  return dev <= 1e-13 * std::max(1.0, scale);
}

RealVector singular_values(const Matrix& m) {
  if (m.rows() == m.cols() && nearly_hermitian(m)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    RealVector sv = es.eigenvalues().cwiseAbs();
    std::sort(sv.data(), sv.data() + sv.size(), std::greater<double>());
    return sv;
  }
  if (std::max(m.rows(), m.cols()) <= 32) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues();
  }
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues();
}

}  // namespace

double trace_norm(const Matrix& m) { return singular_values(m).sum(); }

double two_norm(const Matrix& m) { return m.norm(); }

double operator_norm(const Matrix& m) {
  RealVector sv = singular_values(m);
  return sv.size() > 0 ? sv(0) : 0.0;
}

Matrix psd_sqrt(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("psd_sqrt: matrix not square");
  double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10)
    throw std::invalid_argument("psd_sqrt: input not Hermitian, deviation " + std::to_string(herm));
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  RealVector ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-10)
      throw std::invalid_argument("psd_sqrt: negative eigenvalue " + std::to_string(ev(i)));
    if (ev(i) < 0) ev(i) = 0;
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

RealVector operator_schmidt_spectrum(const DenseOperator& op, const Cut& cut) {
  const int N = op.sites();
  const int d = op.local_dim();
  if (cut.pos < 1 || cut.pos > N - 1)
    throw ConfigError("operator_schmidt_spectrum: cut outside chain");
  std::int64_t dA = 1, dB = 1;
  for (int i = 0; i < cut.pos; ++i) dA *= d;
  for (int i = cut.pos; i < N; ++i) dB *= d;

  Matrix r(dA * dA, dB * dB);
  const Matrix& m = op.mat();
  for (std::int64_t ka = 0; ka < dA; ++ka)
    for (std::int64_t ba = 0; ba < dA; ++ba)
      for (std::int64_t kb = 0; kb < dB; ++kb)
        for (std::int64_t bb = 0; bb < dB; ++bb)
          r(ka * dA + ba, kb * dB + bb) = m(ka * dB + kb, ba * dB + bb);
  return singular_values(r);
}

int schmidt_rank(const RealVector& spectrum, double threshold) {
  if (spectrum.size() == 0) return 0;
  double top = spectrum.maxCoeff();
  if (top <= 0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i)
    if (spectrum(i) > threshold * top) ++rank;
  return rank;
}

std::uint64_t fingerprint(const Matrix& m) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const unsigned char* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  std::int64_t rows = m.rows(), cols = m.cols();
  mix(reinterpret_cast<const unsigned char*>(&rows), sizeof(rows));
  mix(reinterpret_cast<const unsigned char*>(&cols), sizeof(cols));
  mix(reinterpret_cast<const unsigned char*>(m.data()), sizeof(cx) * m.size());
  return h;
}

}  // namespace mpdo
