#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "mpdo/errors.hpp"

namespace mpdo {

using cx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// d^n with overflow check against a cap (and against int64 overflow).
std::int64_t dense_dim(int d, int n, std::int64_t cap);

// Chain of N >= 2 sites with uniform local dimension d >= 2. The dense
// representation of an operator on the chain is a d^N x d^N matrix; site 1
// carries the most significant digit of a configuration index.
struct SiteChain {
  int num_sites = 0;
  int local_dim = 0;
  std::int64_t dense_cap = 4096;

  SiteChain() = default;
  SiteChain(int N, int d, std::int64_t cap = 4096);

  std::int64_t dim() const { return dense_dim(local_dim, num_sites, dense_cap); }
};

// Bipartition of a chain between sites k and k+1; the left half A is sites
// 1..k, the right half B is sites k+1..N.
struct Cut {
  int pos = 0;
  Cut() = default;
  Cut(const SiteChain& chain, int k);
};

// Dense operator on `sites` sites of local dimension d. Unlike SiteChain this
// may live on fewer than two sites (partial traces shrink the support; tracing
// everything leaves a 0-site, 1x1 operator holding the scalar trace).
class DenseOperator {
 public:
  DenseOperator(int sites, int d, Matrix m);

  // Validating factory: requires Hermiticity within 1e-12, unit trace within
  // 1e-12 and smallest eigenvalue >= -1e-10, and sets the density-matrix flag.
  static DenseOperator density_matrix(int sites, int d, Matrix m);

  int sites() const { return sites_; }
  int local_dim() const { return d_; }
  std::int64_t dim() const { return mat_.rows(); }
  bool is_density_matrix() const { return dm_flag_; }
  const Matrix& mat() const { return mat_; }
  Matrix& mat() { return mat_; }

 private:
  int sites_;
  int d_;
  bool dm_flag_ = false;
  Matrix mat_;
};

// Trace over `traced_sites` (1-based, any order, no duplicates). Remaining
// sites keep their relative order. Preserves the total trace exactly.
DenseOperator partial_trace(const DenseOperator& op, const std::vector<int>& traced_sites);

// Schatten norms. trace_norm is the sum of singular values, two_norm the
// Frobenius norm, operator_norm the largest singular value.
double trace_norm(const Matrix& m);
double two_norm(const Matrix& m);
double operator_norm(const Matrix& m);

// Hermitian PSD square root. Eigenvalues below -1e-10 raise
// std::invalid_argument; values in [-1e-10, 0] are clipped to 0.
Matrix psd_sqrt(const Matrix& m);

// Singular values (descending) of the operator rearranged across the cut:
// row index (ketA, braA), column index (ketB, braB). Their squares sum to
// two_norm(op)^2.
RealVector operator_schmidt_spectrum(const DenseOperator& op, const Cut& cut);

// Number of singular values above `threshold` times the largest one.
int schmidt_rank(const RealVector& spectrum, double threshold = 1e-10);

// FNV-1a over the raw matrix bytes; used to tie derived objects (purified
// states, truncations) back to their source operator.
std::uint64_t fingerprint(const Matrix& m);

}  // namespace mpdo
