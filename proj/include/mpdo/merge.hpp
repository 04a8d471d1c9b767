#pragma once

#include <cstdint>
#include <vector>

#include "mpdo/operators.hpp"
#include "mpdo/purification.hpp"

namespace mpdo {

// Contiguous block of sites hugging one end of the chain; the subspaces the
// merge machinery projects onto live on such a block, with the identity
// acting on the complement.
struct Region {
  int first = 1;
  int last = 1;
  int chain_sites = 2;
  int local_dim = 2;

  Region() = default;
  Region(int first_site, int last_site, int sites, int d);

  int sites() const { return last - first + 1; }
  bool left_aligned() const { return first == 1; }
  std::int64_t dim() const;             // d^sites
  std::int64_t complement_dim() const;  // d^(chain_sites - sites)
};

// Span of a family of operators on a region, rank-filtered: directions whose
// singular value in the vectorized family falls below `rank_threshold` times
// the largest are dropped. star_closed records whether the span is closed
// under adjoints, which admits an all-Hermitian basis.
struct OperatorSubspace {
  Region region;
  std::vector<Matrix> generators;
  Matrix onb;  // region.dim()^2 x D, orthonormal columns (vectorized)
  bool star_closed = false;

  int dimension() const { return static_cast<int>(onb.cols()); }
};

OperatorSubspace make_subspace(const Region& region, const std::vector<Matrix>& generators,
                               double rank_threshold = 1e-10);

enum class BasisMode { Auerbach, Hs };

std::string basis_mode_name(BasisMode m);
BasisMode basis_mode_from_string(const std::string& name);

// Basis of a subspace with trace-norm-1 elements and full-space dual matrices
// that are biorthogonal to it; in Auerbach mode the duals' operator norms stay
// within 1 + tol of the ideal 1.
struct AuerbachBasis {
  BasisMode mode = BasisMode::Auerbach;
  std::vector<Matrix> elements;  // trace norm 1 each
  std::vector<Matrix> duals;     // same count; operator norm <= quality
  Matrix coefficients;           // D x M: elements[i] = sum_k coefficients(i,k) generators[k]
  double quality = 0.0;          // max dual operator norm
  double biorthogonality = 0.0;  // max |tr(dual_i^dag elem_j) - delta_ij|
  bool hermitian = false;        // built in the Hermitian (star-closed) pathway
  bool converged = true;

  int dimension() const { return static_cast<int>(elements.size()); }
};

AuerbachBasis auerbach_basis(const OperatorSubspace& sub, BasisMode mode,
                             double tol = 1e-3, int max_iters = 200,
                             std::uint64_t seed = 0);

// Minimal-operator-norm matrix Z with tr(Z^dag elements[j]) = delta_{index j}.
// The restricted functional norm is located by ratio ascent, then a feasible
// extension at (or just above) that level is found by Douglas-Rachford
// splitting between the spectral ball and the affine constraint set, with a
// bisection fallback. With `hermitian` set the search stays inside Hermitian
// matrices (lossless when all elements are Hermitian).
struct DualExtension {
  Matrix dual;
  double norm = 0.0;
  bool converged = false;
};

DualExtension hahn_banach_extend(const std::vector<Matrix>& elements, int index,
                                 bool hermitian, double tol = 1e-3, int max_iters = 400);

// P(X) = sum_i elem_i (x) tr_region[(dual_i (x) 1)^dag X] for a left-aligned
// region (mirrored for right-aligned). Projects onto span (x) full algebra on
// the complement; trace-norm amplification is certified by
// sum_i ||elem_i||_1 ||dual_i||_inf <= D (1 + tol) in Auerbach mode.
struct ProjectionMap {
  Region region;
  AuerbachBasis basis;
  double amplification_certificate = 0.0;
};

ProjectionMap build_projection(const OperatorSubspace& sub, BasisMode mode,
                               double tol = 1e-3, int max_iters = 200,
                               std::uint64_t seed = 0);

// Convenience: projection onto the span of a truncation's left factor family
// (region = sites 1..cut).
ProjectionMap build_projection(const CutTruncation& t, BasisMode mode,
                               double tol = 1e-3, int max_iters = 200,
                               std::uint64_t seed = 0);

Matrix apply_projection(const ProjectionMap& p, const Matrix& x);

// ||P(X)||_1 / ||X||_1; throws on ||X||_1 = 0.
double amplification_measure(const ProjectionMap& p, const Matrix& x);

// (D+1) delta1 + D delta2.
double merge_error_bound(int d, double delta1, double delta2);

}  // namespace mpdo
