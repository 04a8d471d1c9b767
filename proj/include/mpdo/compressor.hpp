#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mpdo/entanglement.hpp"
#include "mpdo/merge.hpp"
#include "mpdo/purification.hpp"

namespace mpdo {

enum class ScheduleStrategy { Tree, Sequential };

std::string schedule_strategy_name(ScheduleStrategy s);
ScheduleStrategy schedule_strategy_from_string(const std::string& name);

// Plan for compressing every cut 1..N-1 of an N-site chain. Level r lists the
// cuts whose bond is introduced at depth r of the merge recursion: pivot cuts
// sit at the depth of the node that merges across them, and cuts that enter
// as a bare truncation (never a pivot) sit one level below their absorbing
// node. merge_depth is the longest chain of projection merges any cut's error
// passes through; it is the exponent of the coarse error bound and equals
// ceil(log2(N-1)) for the tree strategy and N-2 for the sequential one.
struct MergeSchedule {
  int num_sites = 0;
  ScheduleStrategy strategy = ScheduleStrategy::Tree;
  std::vector<std::vector<int>> levels;
  int merge_depth = 0;

  int num_levels() const { return static_cast<int>(levels.size()); }
};

// Balanced binary plan: level 1 holds the middle cut, each later level
// bisects every block that still spans more than one uncut bond. Levels obey
// |level r| <= 2^(r-1) and there are at most ceil(log2(N)) of them.
MergeSchedule schedule_tree(int num_sites);

// Left-to-right plan: one cut per level, merge_depth N-2. Kept as the
// baseline whose error bound grows geometrically in N rather than in log N.
MergeSchedule schedule_sequential(int num_sites);

// Contiguous run of sites [first..last] inside a blocked operator, stored as
// dense cores: core(l, r) is an operator on the run's sites, indexed by the
// bond values l (shared with the previous block) and r (with the next).
struct Block {
  int first = 0;
  int last = 0;
  Eigen::Index left_bond = 1;
  Eigen::Index right_bond = 1;
  std::vector<Matrix> cores;  // size left_bond * right_bond, row-major in (l, r)

  int sites() const { return last - first + 1; }
  const Matrix& core(Eigen::Index l, Eigen::Index r) const { return cores[l * right_bond + r]; }
  Matrix& core(Eigen::Index l, Eigen::Index r) { return cores[l * right_bond + r]; }
};

// Exact blocked representation of a chain operator: consecutive blocks glued
// by summed bond indices at each compressed cut. This is a representation,
// never an approximation, of the intermediate state it holds; densify()
// reproduces it exactly.
struct BlockedMPDO {
  int num_sites = 0;
  int local_dim = 0;
  std::vector<Block> blocks;

  // Positions of the compressed cuts (the interior block boundaries).
  std::vector<int> cut_positions() const;
  // Bond dimension at a compressed cut; ConfigError if `cut` is not a block
  // boundary.
  Eigen::Index bond_at(int cut) const;
  Matrix densify(std::int64_t cap = 1 << 20) const;
};

// Exact two-block form of a dense operator split at `cut`: an operator
// Schmidt decomposition keeping every singular value above rel_threshold
// times the largest (the discarded tail is eigensolver noise, so the
// representation stays exact to working precision).
BlockedMPDO blocked_from_dense(const Matrix& op, const SiteChain& chain, int cut,
                               double rel_threshold = 1e-12);

// Dense factor family of a blocked state on one side of a compressed cut,
// indexed by the bond value at that cut.
std::vector<Matrix> blocked_left_factors(const BlockedMPDO& state, int cut);
std::vector<Matrix> blocked_right_factors(const BlockedMPDO& state, int cut);

// Re-factors the state at a compressed cut to its exact numerical rank
// (never increasing the bond). Exact rewriting up to rel_threshold noise.
void reduce_bond(BlockedMPDO& state, int cut, double rel_threshold = 1e-12);

// Projection merge in blocked form. The map p must have been built over the
// factor family of some approximation at p.region's boundary cut; `state` is
// the other approximation, whose block containing the region is contracted
// against the duals without densifying any compressed cut ("merging
// preserves existing cuts"). For a left-aligned region the output keeps
// supplier_blocks (the blocks realizing p's generator family, last bond
// re-expressed through the basis coefficients), gains a head block for the
// leftover sites of the contracted block, and keeps the remaining blocks of
// `state`; right-aligned regions mirror this. InvariantError on structural
// misalignment.
BlockedMPDO apply_projection(const ProjectionMap& p, const BlockedMPDO& state,
                             const std::vector<Block>& supplier_blocks);

// Matrix product density operator: per-site cores, physical pair (ket, bra)
// selecting a D_{k-1} x D_k matrix; boundary bonds are 1.
struct MPDO {
  int num_sites = 0;
  int local_dim = 0;
  std::vector<std::vector<Matrix>> cores;  // cores[k][i*d + j]

  std::vector<Eigen::Index> bond_dims() const;  // length N+1, first/last 1
  Eigen::Index max_bond() const;
};

// Contracts the cores into the dense operator; verification only.
DenseOperator reconstruct(const MPDO& m, std::int64_t cap = 1 << 20);

/// Text serialization: a header line with N and d, a line of N+1 bond
// dimensions, then one line per site holding that core's d^2 matrices
// row-major as re/im pairs printed with 17 significant digits (lossless for
// IEEE doubles).
void save_mpdo(const MPDO& m, std::ostream& out);
void save_mpdo(const MPDO& m, const std::string& path);
MPDO load_mpdo(std::istream& in);
MPDO load_mpdo(const std::string& path);

// Per-cut truncation record.
struct CutRecord {
  int cut = 0;
  double entanglement = 0.0;    // Renyi E_alpha of the purification at the cut
  double eta = 0.0;             // discarded squared Schmidt weight
  double delta_measured = 0.0;  // ||rho - sigma_cut||_1, exact
  double delta_analytic = 0.0;  // 2 sqrt(eta)
  Eigen::Index bond = 0;        // bond dimension in the final MPDO
};

// One projection merge.
struct MergeRecord {
  int level = 0;
  int cut = 0;                 // pivot cut the merge acts across
  bool right_family = false;   // family taken right of the cut (mirrored form)
  Eigen::Index span_dim = 0;   // D: dimension of the projected family
  double certificate = 0.0;    // trace-norm amplification certificate
  double quality = 0.0;        // max dual operator norm of the basis
  bool converged = true;
  double error_measured = 0.0;  // ||merged - rho||_1, exact
  double bound_fine = 0.0;      // (cert+1) delta_supplier + cert delta_other
};

// Worst measured error among the states formed at one schedule level,
// together with the one-level growth bound it must respect.
struct LevelRecord {
  int level = 0;
  double error_measured = 0.0;
  double growth_bound = 0.0;  // (2D+1)(1+tol) * max(next level error, delta_max)
};

struct CompressionReport {
  int num_sites = 0;
  int local_dim = 0;
  int d_p = 0;
  ScheduleStrategy strategy = ScheduleStrategy::Tree;
  BasisMode mode = BasisMode::Auerbach;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double dual_tolerance = 0.0;

  std::vector<CutRecord> cuts;
  std::vector<MergeRecord> merges;
  std::vector<LevelRecord> levels;

  double eta_max = 0.0;
  double delta_max = 0.0;
  Eigen::Index span_dim_max = 0;  // D in the coarse bound
  int merge_depth = 0;            // K in the coarse bound

  double eps_measured = 0.0;    // ||rho - reconstruct(mpdo)||_1, exact
  double eps_bound = 0.0;       // (2D+1)^K delta_max (1+tol)^K
  double eps_bound_fine = 0.0;  // recursive per-merge accounting + normalization term

  double raw_trace = 0.0;  // trace before the final normalization
  double hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;  // reported, never asserted
  double max_quality = 0.0;
  bool all_converged = true;

  double wall_ms_truncate = 0.0;
  double wall_ms_merge = 0.0;
  double wall_ms_total = 0.0;

  std::string to_json() const;
};

struct CompressOptions {
  int d_p = 1;
  BasisMode mode = BasisMode::Auerbach;
  double alpha = 0.5;  // Renyi order recorded with the per-cut entanglement
  std::uint64_t seed = 0;
  double dual_tolerance = 1e-3;
  int max_iters = 200;
  double rank_threshold = 1e-12;
};

struct CompressionResult {
  MPDO mpdo;
  CompressionReport report;
};

// Full pipeline: one canonical purification, one rank-d_p truncation per cut,
// then projection merges following the schedule; the final blocked state is
// reshaped into cores (no further truncation) and normalized by its exact
// trace. Every reported error is an exactly measured trace norm.
CompressionResult compress(const DenseOperator& rho, const MergeSchedule& schedule,
                           const CompressOptions& opts);

// Coarse error bound (2D+1)^K * delta_max * (1+dual_tolerance)^K.
double global_bound(Eigen::Index span_dim, int merge_depth, double delta_max,
                    double dual_tolerance);

// Scaling regime for chains whose Renyi entanglement grows at most like
// E_alpha <= c log2(N) / alpha + log2(kappa N / alpha): with alpha =
// lambda / (5 log2 N) and bond growth D = N^kappa, the compression error is
// at most 6 N^kappa (3 / N^Delta)^(log2 N), Delta = (kappa(1-lambda) - 2c) /
// lambda, which vanishes super-polynomially whenever kappa > 2c/(1-lambda).
struct AsymptoticParams {
  double n_sites = 0.0;
  double c = 0.0;
  double lambda = 0.0;
  double kappa = 0.0;

  double alpha = 0.0;      // lambda / (5 log2 N)
  double kappa_min = 0.0;  // 2c / (1 - lambda)
  double delta_exp = 0.0;  // (kappa(1-lambda) - 2c) / lambda
  double log2_bond = 0.0;  // kappa log2 N
  double log2_bound = 0.0;
  double bound = 0.0;  // exp2(log2_bound); may underflow to 0, always finite
};

AsymptoticParams asymptotic_params(double n_sites, double c, double lambda, double kappa);

}  // namespace mpdo
