#include "mpdo/compressor.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unsupported/Eigen/KroneckerProduct>
#include <utility>

#include "json.hpp"

namespace mpdo {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t seed_for_cut(std::uint64_t seed, int cut) {
  return seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(cut);
}

// Pivot choice for the cut range [lo..hi] of an N-site chain: the balanced
// split whose projected factor family lives on the smaller chain region.
// Left form projects onto operators on sites [1..pivot] (dimension d^pivot),
// right form onto sites [pivot+1..N]; ties prefer the left form.
struct Split {
  int pivot = 0;
  bool right_mode = false;
};

Split tree_split(int num_sites, int lo, int hi) {
  const int m = hi - lo + 1;
  const int c_left = lo + (m + 1) / 2 - 1;
  const int c_right = lo + m / 2;
  Split s;
  if (c_left <= num_sites - c_right) {
    s.pivot = c_left;
    s.right_mode = false;
  } else {
    s.pivot = c_right;
    s.right_mode = true;
  }
  return s;
}

// Walks the balanced recursion and records, per cut, the shallowest depth at
// which it is a pivot (or its singleton depth if it never pivots), plus the
// deepest depth hosting a merge.
void walk_tree_levels(int num_sites, int lo, int hi, int depth,
                      std::map<int, int>& cut_level, int& max_merge_depth) {
  if (lo == hi) {
    if (!cut_level.count(lo)) cut_level[lo] = depth;
    return;
  }
  Split s = tree_split(num_sites, lo, hi);
  auto it = cut_level.find(s.pivot);
  if (it == cut_level.end() || it->second > depth) cut_level[s.pivot] = depth;
  max_merge_depth = std::max(max_merge_depth, depth);
  if (s.right_mode) {
    walk_tree_levels(num_sites, lo, s.pivot - 1, depth + 1, cut_level, max_merge_depth);
    walk_tree_levels(num_sites, s.pivot, hi, depth + 1, cut_level, max_merge_depth);
  } else {
    walk_tree_levels(num_sites, lo, s.pivot, depth + 1, cut_level, max_merge_depth);
    walk_tree_levels(num_sites, s.pivot + 1, hi, depth + 1, cut_level, max_merge_depth);
  }
}

Matrix kron(const Matrix& a, const Matrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

std::int64_t ipow(int d, int n) { return dense_dim(d, n, std::int64_t{1} << 40); }

void check_blocked(const BlockedMPDO& state) {
  if (state.blocks.empty()) throw InvariantError("blocked state: no blocks");
  if (state.blocks.front().first != 1 || state.blocks.back().last != state.num_sites)
    throw InvariantError("blocked state: blocks do not span the chain");
  if (state.blocks.front().left_bond != 1 || state.blocks.back().right_bond != 1)
    throw InvariantError("blocked state: boundary bonds must be 1");
  for (std::size_t b = 0; b < state.blocks.size(); ++b) {
    const Block& blk = state.blocks[b];
    if (blk.last < blk.first) throw InvariantError("blocked state: empty block");
    if (b > 0 && blk.first != state.blocks[b - 1].last + 1)
      throw InvariantError("blocked state: blocks not contiguous");
    if (b > 0 && blk.left_bond != state.blocks[b - 1].right_bond)
      throw InvariantError("blocked state: bond mismatch between blocks");
    if (static_cast<Eigen::Index>(blk.cores.size()) != blk.left_bond * blk.right_bond)
      throw InvariantError("blocked state: core count mismatch");
  }
}

// Operators on the prefix [1..cut], indexed by the bond value at `cut`.
std::vector<Matrix> fold_prefix(const BlockedMPDO& state, std::size_t boundary_block) {
  std::vector<Matrix> acc(state.blocks[0].cores);
  for (std::size_t b = 1; b <= boundary_block; ++b) {
    const Block& blk = state.blocks[b];
    std::vector<Matrix> next(static_cast<std::size_t>(blk.right_bond));
    for (Eigen::Index r = 0; r < blk.right_bond; ++r) {
      Matrix sum;
      for (Eigen::Index l = 0; l < blk.left_bond; ++l) {
        Matrix term = kron(acc[l], blk.core(l, r));
        if (sum.size() == 0)
          sum = std::move(term);
        else
          sum += term;
      }
      next[r] = std::move(sum);
    }
    acc = std::move(next);
  }
  return acc;
}

// Operators on the suffix [cut+1..N], indexed by the bond value at `cut`.
std::vector<Matrix> fold_suffix(const BlockedMPDO& state, std::size_t first_block) {
  const std::size_t nb = state.blocks.size();
  std::vector<Matrix> acc(state.blocks[nb - 1].cores);
  for (std::size_t b = nb - 1; b > first_block; --b) {
    const Block& blk = state.blocks[b - 1];
    std::vector<Matrix> next(static_cast<std::size_t>(blk.left_bond));
    for (Eigen::Index l = 0; l < blk.left_bond; ++l) {
      Matrix sum;
      for (Eigen::Index r = 0; r < blk.right_bond; ++r) {
        Matrix term = kron(blk.core(l, r), acc[r]);
        if (sum.size() == 0)
          sum = std::move(term);
        else
          sum += term;
      }
      next[l] = std::move(sum);
    }
    acc = std::move(next);
  }
  return acc;
}

std::size_t boundary_block_index(const BlockedMPDO& state, int cut) {
  for (std::size_t b = 0; b + 1 < state.blocks.size(); ++b)
    if (state.blocks[b].last == cut) return b;
  throw ConfigError("blocked state: cut " + std::to_string(cut) +
                    " is not a compressed block boundary");
}

MPDO mpdo_from_blocked(const BlockedMPDO& state) {
  MPDO m;
  m.num_sites = state.num_sites;
  m.local_dim = state.local_dim;
  const int d = state.local_dim;
  m.cores.reserve(state.blocks.size());
  for (const Block& blk : state.blocks) {
    if (blk.sites() != 1)
      throw InvariantError("mpdo extraction requires single-site blocks");
    std::vector<Matrix> site(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Matrix a(blk.left_bond, blk.right_bond);
        for (Eigen::Index l = 0; l < blk.left_bond; ++l)
          for (Eigen::Index r = 0; r < blk.right_bond; ++r) a(l, r) = blk.core(l, r)(i, j);
        site[static_cast<std::size_t>(i) * d + j] = std::move(a);
      }
    m.cores.push_back(std::move(site));
  }
  return m;
}

nlohmann::json cut_json(const CutRecord& c) {
  return {{"cut", c.cut},
          {"entanglement", c.entanglement},
          {"eta", c.eta},
          {"delta_measured", c.delta_measured},
          {"delta_analytic", c.delta_analytic},
          {"bond", c.bond}};
}

nlohmann::json merge_json(const MergeRecord& m) {
  return {{"level", m.level},
          {"cut", m.cut},
          {"right_family", m.right_family},
          {"span_dim", m.span_dim},
          {"certificate", m.certificate},
          {"quality", m.quality},
          {"converged", m.converged},
          {"error_measured", m.error_measured},
          {"bound_fine", m.bound_fine}};
}

nlohmann::json level_json(const LevelRecord& l) {
  return {{"level", l.level},
          {"error_measured", l.error_measured},
          {"growth_bound", l.growth_bound}};
}

}  // namespace

std::string schedule_strategy_name(ScheduleStrategy s) {
  return s == ScheduleStrategy::Tree ? "tree" : "sequential";
}

ScheduleStrategy schedule_strategy_from_string(const std::string& name) {
  if (name == "tree") return ScheduleStrategy::Tree;
  if (name == "sequential") return ScheduleStrategy::Sequential;
  throw ConfigError("unknown schedule strategy '" + name + "' (expected tree or sequential)");
}

MergeSchedule schedule_tree(int num_sites) {
  if (num_sites < 2) throw ConfigError("schedule_tree: need at least 2 sites");
  MergeSchedule s;
  s.num_sites = num_sites;
  s.strategy = ScheduleStrategy::Tree;
  std::map<int, int> cut_level;
  int max_merge_depth = 0;
  walk_tree_levels(num_sites, 1, num_sites - 1, 1, cut_level, max_merge_depth);
  int num_levels = 0;
  for (const auto& [cut, level] : cut_level) num_levels = std::max(num_levels, level);
  s.levels.assign(static_cast<std::size_t>(num_levels), {});
  for (const auto& [cut, level] : cut_level)
    s.levels[static_cast<std::size_t>(level - 1)].push_back(cut);
  s.merge_depth = max_merge_depth;
  return s;
}

MergeSchedule schedule_sequential(int num_sites) {
  if (num_sites < 2) throw ConfigError("schedule_sequential: need at least 2 sites");
  MergeSchedule s;
  s.num_sites = num_sites;
  s.strategy = ScheduleStrategy::Sequential;
  for (int c = 1; c < num_sites; ++c) s.levels.push_back({c});
  s.merge_depth = num_sites - 2;
  return s;
}

std::vector<int> BlockedMPDO::cut_positions() const {
  std::vector<int> cuts;
  for (std::size_t b = 0; b + 1 < blocks.size(); ++b) cuts.push_back(blocks[b].last);
  return cuts;
}

Eigen::Index BlockedMPDO::bond_at(int cut) const {
  return blocks[boundary_block_index(*this, cut)].right_bond;
}

Matrix BlockedMPDO::densify(std::int64_t cap) const {
  check_blocked(*this);
  dense_dim(local_dim, num_sites, cap);
  std::vector<Matrix> acc = fold_prefix(*this, blocks.size() - 1);
  return acc[0];
}

BlockedMPDO blocked_from_dense(const Matrix& op, const SiteChain& chain, int cut,
                               double rel_threshold) {
  const int n = chain.num_sites;
  const int d = chain.local_dim;
  if (cut < 1 || cut >= n) throw ConfigError("blocked_from_dense: cut out of range");
  const std::int64_t dim = ipow(d, n);
  if (op.rows() != dim || op.cols() != dim)
    throw ConfigError("blocked_from_dense: operator dimension mismatch");
  if (!(rel_threshold >= 0.0 && rel_threshold < 1.0))
    throw ConfigError("blocked_from_dense: rel_threshold must lie in [0, 1)");

  const Eigen::Index da = ipow(d, cut);
  const Eigen::Index db = ipow(d, n - cut);

  // Rearrangement across the cut: row (ketA, braA), column (ketB, braB).
  Matrix r(da * da, db * db);
  for (Eigen::Index ia = 0; ia < da; ++ia)
    for (Eigen::Index ja = 0; ja < da; ++ja)
      for (Eigen::Index ib = 0; ib < db; ++ib)
        for (Eigen::Index jb = 0; jb < db; ++jb)
          r(ia * da + ja, ib * db + jb) = op(ia * db + ib, ja * db + jb);

  Matrix u, v;
  RealVector sv;
  if (std::min(r.rows(), r.cols()) >= 32) {
    Eigen::BDCSVD<Matrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    sv = svd.singularValues();
  } else {
    Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    sv = svd.singularValues();
  }
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > rel_threshold * sv(0)) ++rank;
  rank = std::max<Eigen::Index>(rank, 1);

  BlockedMPDO out;
  out.num_sites = n;
  out.local_dim = d;
  Block left;
  left.first = 1;
  left.last = cut;
  left.left_bond = 1;
  left.right_bond = rank;
  Block right;
  right.first = cut + 1;
  right.last = n;
  right.left_bond = rank;
  right.right_bond = 1;
  for (Eigen::Index m = 0; m < rank; ++m) {
    const double w = std::sqrt(sv(m));
    Matrix a(da, da), b(db, db);
    for (Eigen::Index ia = 0; ia < da; ++ia)
      for (Eigen::Index ja = 0; ja < da; ++ja) a(ia, ja) = u(ia * da + ja, m) * w;
    for (Eigen::Index ib = 0; ib < db; ++ib)
      for (Eigen::Index jb = 0; jb < db; ++jb) b(ib, jb) = std::conj(v(ib * db + jb, m)) * w;
    left.cores.push_back(std::move(a));
    right.cores.push_back(std::move(b));
  }
  out.blocks = {std::move(left), std::move(right)};
  return out;
}

std::vector<Matrix> blocked_left_factors(const BlockedMPDO& state, int cut) {
  check_blocked(state);
  return fold_prefix(state, boundary_block_index(state, cut));
}

std::vector<Matrix> blocked_right_factors(const BlockedMPDO& state, int cut) {
  check_blocked(state);
  return fold_suffix(state, boundary_block_index(state, cut) + 1);
}

void reduce_bond(BlockedMPDO& state, int cut, double rel_threshold) {
  check_blocked(state);
  const std::size_t bi = boundary_block_index(state, cut);
  std::vector<Matrix> f = fold_prefix(state, bi);
  std::vector<Matrix> g = fold_suffix(state, bi + 1);
  const Eigen::Index bond = state.blocks[bi].right_bond;

  const Eigen::Index nl = f[0].size();
  const Eigen::Index nr = g[0].size();
  Matrix a(nl, bond), b(nr, bond);
  for (Eigen::Index k = 0; k < bond; ++k) {
    a.col(k) = Eigen::Map<const Vector>(f[static_cast<std::size_t>(k)].data(), nl);
    b.col(k) = Eigen::Map<const Vector>(g[static_cast<std::size_t>(k)].data(), nr);
  }
  Eigen::HouseholderQR<Matrix> qa(a), qb(b);
  Matrix ra = qa.matrixQR().topRows(std::min(nl, bond)).triangularView<Eigen::Upper>();
  Matrix rb = qb.matrixQR().topRows(std::min(nr, bond)).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Matrix> svd(ra * rb.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(0) > 0.0 && sv(k) > rel_threshold * sv(0)) ++rank;
  rank = std::max<Eigen::Index>(rank, 1);
  if (rank >= bond) return;  // already minimal

  // New factor pairs F'_m (x) G'_m reproducing the state with the smaller
  // bond; alpha/beta express them over the old bond index.
  Matrix qa_thin = qa.householderQ() * Matrix::Identity(nl, std::min(nl, bond));
  Matrix qb_thin = qb.householderQ() * Matrix::Identity(nr, std::min(nr, bond));
  Matrix fprime = qa_thin * svd.matrixU().leftCols(rank);
  Matrix gprime = qb_thin * svd.matrixV().leftCols(rank).conjugate();
  for (Eigen::Index m = 0; m < rank; ++m) {
    const double w = std::sqrt(sv(m));
    fprime.col(m) *= w;
    gprime.col(m) *= w;
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod_a(a), cod_b(b);
  Matrix alpha = cod_a.solve(fprime);  // bond x rank
  Matrix beta = cod_b.solve(gprime);

  Block& lb = state.blocks[bi];
  Block& rb2 = state.blocks[bi + 1];
  std::vector<Matrix> lcores(static_cast<std::size_t>(lb.left_bond * rank));
  for (Eigen::Index l = 0; l < lb.left_bond; ++l)
    for (Eigen::Index m = 0; m < rank; ++m) {
      Matrix sum = Matrix::Zero(lb.cores[0].rows(), lb.cores[0].cols());
      for (Eigen::Index k = 0; k < bond; ++k) sum += alpha(k, m) * lb.core(l, k);
      lcores[static_cast<std::size_t>(l * rank + m)] = std::move(sum);
    }
  std::vector<Matrix> rcores(static_cast<std::size_t>(rank * rb2.right_bond));
  for (Eigen::Index m = 0; m < rank; ++m)
    for (Eigen::Index r = 0; r < rb2.right_bond; ++r) {
      Matrix sum = Matrix::Zero(rb2.cores[0].rows(), rb2.cores[0].cols());
      for (Eigen::Index k = 0; k < bond; ++k) sum += beta(k, m) * rb2.core(k, r);
      rcores[static_cast<std::size_t>(m * rb2.right_bond + r)] = std::move(sum);
    }
  lb.cores = std::move(lcores);
  lb.right_bond = rank;
  rb2.cores = std::move(rcores);
  rb2.left_bond = rank;
}

BlockedMPDO apply_projection(const ProjectionMap& p, const BlockedMPDO& state,
                             const std::vector<Block>& supplier_blocks) {
  check_blocked(state);
  if (p.region.chain_sites != state.num_sites || p.region.local_dim != state.local_dim)
    throw InvariantError("apply_projection: region does not match the blocked chain");
  if (supplier_blocks.empty()) throw InvariantError("apply_projection: no supplier blocks");
  const int d = state.local_dim;
  const Eigen::Index dim_basis = p.basis.dimension();
  const Eigen::Index nreg = p.region.dim();
  const Matrix& coeff = p.basis.coefficients;  // dim_basis x old bond

  BlockedMPDO out;
  out.num_sites = state.num_sites;
  out.local_dim = d;

  if (p.region.left_aligned()) {
    const int pivot = p.region.last;
    const Block& b0 = state.blocks.front();
    if (b0.last < pivot)
      throw InvariantError("apply_projection: region spans a compressed cut of the state");
    if (supplier_blocks.front().first != 1 || supplier_blocks.back().last != pivot)
      throw InvariantError("apply_projection: supplier blocks do not realize the region");
    if (coeff.cols() != supplier_blocks.back().right_bond)
      throw InvariantError("apply_projection: coefficient/bond mismatch");

    // Head: contract the state's first block over the region against the
    // duals; existing bonds of the state pass through untouched.
    const Eigen::Index dtail = ipow(d, b0.last - pivot);
    std::vector<Matrix> head(static_cast<std::size_t>(dim_basis * b0.right_bond));
    for (Eigen::Index i = 0; i < dim_basis; ++i) {
      const Matrix& dual = p.basis.duals[static_cast<std::size_t>(i)];
      for (Eigen::Index r = 0; r < b0.right_bond; ++r) {
        const Matrix& core = b0.core(0, r);
        Matrix t = Matrix::Zero(dtail, dtail);
        for (Eigen::Index a = 0; a < nreg; ++a)
          for (Eigen::Index b = 0; b < nreg; ++b)
            t += std::conj(dual(a, b)) * core.block(a * dtail, b * dtail, dtail, dtail);
        head[static_cast<std::size_t>(i * b0.right_bond + r)] = std::move(t);
      }
    }

    out.blocks.assign(supplier_blocks.begin(), supplier_blocks.end());
    Block& lastsup = out.blocks.back();
    std::vector<Matrix> rec(static_cast<std::size_t>(lastsup.left_bond * dim_basis));
    for (Eigen::Index l = 0; l < lastsup.left_bond; ++l)
      for (Eigen::Index i = 0; i < dim_basis; ++i) {
        Matrix sum = Matrix::Zero(lastsup.cores[0].rows(), lastsup.cores[0].cols());
        for (Eigen::Index k = 0; k < lastsup.right_bond; ++k)
          sum += coeff(i, k) * lastsup.core(l, k);
        rec[static_cast<std::size_t>(l * dim_basis + i)] = std::move(sum);
      }
    lastsup.cores = std::move(rec);
    lastsup.right_bond = dim_basis;

    if (b0.last > pivot) {
      Block hb;
      hb.first = pivot + 1;
      hb.last = b0.last;
      hb.left_bond = dim_basis;
      hb.right_bond = b0.right_bond;
      hb.cores = std::move(head);
      out.blocks.push_back(std::move(hb));
      out.blocks.insert(out.blocks.end(), state.blocks.begin() + 1, state.blocks.end());
    } else {
      // Region aligned with the first boundary: fold the scalars into the
      // next block's bond.
      if (state.blocks.size() < 2)
        throw InvariantError("apply_projection: aligned region leaves no sites");
      const Block& b1 = state.blocks[1];
      Block nb = b1;
      std::vector<Matrix> cores(static_cast<std::size_t>(dim_basis * b1.right_bond));
      for (Eigen::Index i = 0; i < dim_basis; ++i)
        for (Eigen::Index r2 = 0; r2 < b1.right_bond; ++r2) {
          Matrix sum = Matrix::Zero(b1.cores[0].rows(), b1.cores[0].cols());
          for (Eigen::Index r = 0; r < b0.right_bond; ++r)
            sum += head[static_cast<std::size_t>(i * b0.right_bond + r)](0, 0) * b1.core(r, r2);
          cores[static_cast<std::size_t>(i * b1.right_bond + r2)] = std::move(sum);
        }
      nb.cores = std::move(cores);
      nb.left_bond = dim_basis;
      out.blocks.push_back(std::move(nb));
      out.blocks.insert(out.blocks.end(), state.blocks.begin() + 2, state.blocks.end());
    }
  } else {
    const int pivot = p.region.first - 1;
    const Block& bz = state.blocks.back();
    if (bz.first > pivot)
      throw InvariantError("apply_projection: region spans a compressed cut of the state");
    if (supplier_blocks.front().first != pivot + 1 ||
        supplier_blocks.back().last != state.num_sites)
      throw InvariantError("apply_projection: supplier blocks do not realize the region");
    if (coeff.cols() != supplier_blocks.front().left_bond)
      throw InvariantError("apply_projection: coefficient/bond mismatch");

    const Eigen::Index dhead = ipow(d, pivot - bz.first + 1);
    std::vector<Matrix> head(static_cast<std::size_t>(bz.left_bond * dim_basis));
    for (Eigen::Index l = 0; l < bz.left_bond; ++l) {
      const Matrix& core = bz.core(l, 0);
      for (Eigen::Index i = 0; i < dim_basis; ++i) {
        const Matrix& dual = p.basis.duals[static_cast<std::size_t>(i)];
        Matrix t = Matrix::Zero(dhead, dhead);
        for (Eigen::Index a = 0; a < nreg; ++a)
          for (Eigen::Index b = 0; b < nreg; ++b) {
            const cx w = std::conj(dual(a, b));
            if (w == cx(0.0, 0.0)) continue;
            for (Eigen::Index x = 0; x < dhead; ++x)
              for (Eigen::Index y = 0; y < dhead; ++y)
                t(x, y) += w * core(x * nreg + a, y * nreg + b);
          }
        head[static_cast<std::size_t>(l * dim_basis + i)] = std::move(t);
      }
    }

    out.blocks.assign(state.blocks.begin(), state.blocks.end() - 1);
    if (bz.first <= pivot) {
      Block hb;
      hb.first = bz.first;
      hb.last = pivot;
      hb.left_bond = bz.left_bond;
      hb.right_bond = dim_basis;
      hb.cores = std::move(head);
      out.blocks.push_back(std::move(hb));
    } else if (!out.blocks.empty()) {
      Block& prev = out.blocks.back();
      std::vector<Matrix> cores(static_cast<std::size_t>(prev.left_bond * dim_basis));
      for (Eigen::Index l = 0; l < prev.left_bond; ++l)
        for (Eigen::Index i = 0; i < dim_basis; ++i) {
          Matrix sum = Matrix::Zero(prev.cores[0].rows(), prev.cores[0].cols());
          for (Eigen::Index k = 0; k < prev.right_bond; ++k)
            sum += head[static_cast<std::size_t>(k * dim_basis + i)](0, 0) * prev.core(l, k);
          cores[static_cast<std::size_t>(l * dim_basis + i)] = std::move(sum);
        }
      prev.cores = std::move(cores);
      prev.right_bond = dim_basis;
    } else {
      throw InvariantError("apply_projection: aligned region leaves no sites");
    }

    Block firstsup = supplier_blocks.front();
    std::vector<Matrix> rec(static_cast<std::size_t>(dim_basis * firstsup.right_bond));
    for (Eigen::Index i = 0; i < dim_basis; ++i)
      for (Eigen::Index r = 0; r < firstsup.right_bond; ++r) {
        Matrix sum = Matrix::Zero(firstsup.cores[0].rows(), firstsup.cores[0].cols());
        for (Eigen::Index k = 0; k < firstsup.left_bond; ++k)
          sum += coeff(i, k) * firstsup.core(k, r);
        rec[static_cast<std::size_t>(i * firstsup.right_bond + r)] = std::move(sum);
      }
    firstsup.cores = std::move(rec);
    firstsup.left_bond = dim_basis;
    out.blocks.push_back(std::move(firstsup));
    out.blocks.insert(out.blocks.end(), supplier_blocks.begin() + 1, supplier_blocks.end());
  }

  check_blocked(out);
  return out;
}

std::vector<Eigen::Index> MPDO::bond_dims() const {
  std::vector<Eigen::Index> dims;
  dims.push_back(1);
  for (const auto& site : cores) dims.push_back(site[0].cols());
  return dims;
}

Eigen::Index MPDO::max_bond() const {
  Eigen::Index m = 1;
  for (const auto& site : cores) m = std::max(m, site[0].cols());
  return m;
}

DenseOperator reconstruct(const MPDO& m, std::int64_t cap) {
  if (m.num_sites < 1 || static_cast<int>(m.cores.size()) != m.num_sites)
    throw ConfigError("reconstruct: malformed mpdo");
  dense_dim(m.local_dim, m.num_sites, cap);
  const int d = m.local_dim;
  std::vector<Matrix> acc{Matrix::Ones(1, 1)};
  for (int k = 0; k < m.num_sites; ++k) {
    const auto& site = m.cores[static_cast<std::size_t>(k)];
    if (static_cast<int>(site.size()) != d * d)
      throw ConfigError("reconstruct: site core count mismatch");
    const Eigen::Index dl = site[0].rows();
    const Eigen::Index dr = site[0].cols();
    if (static_cast<Eigen::Index>(acc.size()) != dl)
      throw ConfigError("reconstruct: bond dimension mismatch between sites");
    std::vector<Matrix> next(static_cast<std::size_t>(dr));
    for (Eigen::Index r = 0; r < dr; ++r) {
      Matrix sum;
      for (Eigen::Index l = 0; l < dl; ++l) {
        Matrix s(d, d);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) s(i, j) = site[static_cast<std::size_t>(i) * d + j](l, r);
        Matrix term = kron(acc[static_cast<std::size_t>(l)], s);
        if (sum.size() == 0)
          sum = std::move(term);
        else
          sum += term;
      }
      next[static_cast<std::size_t>(r)] = std::move(sum);
    }
    acc = std::move(next);
  }
  if (acc.size() != 1) throw ConfigError("reconstruct: final bond dimension is not 1");
  return DenseOperator(m.num_sites, d, std::move(acc[0]));
}

void save_mpdo(const MPDO& m, std::ostream& out) {
  out << "mpdo-text 1\n" << m.num_sites << ' ' << m.local_dim << '\n';
  const std::vector<Eigen::Index> dims = m.bond_dims();
  for (std::size_t k = 0; k < dims.size(); ++k) out << (k ? " " : "") << dims[k];
  out << '\n';
  char buf[64];
  for (const auto& site : m.cores) {
    bool first = true;
    for (const Matrix& a : site)
      for (Eigen::Index l = 0; l < a.rows(); ++l)
        for (Eigen::Index r = 0; r < a.cols(); ++r) {
          std::snprintf(buf, sizeof buf, "%.17g %.17g", a(l, r).real(), a(l, r).imag());
          out << (first ? "" : " ") << buf;
          first = false;
        }
    out << '\n';
  }
  if (!out) throw ConfigError("save_mpdo: write failed");
}

void save_mpdo(const MPDO& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("save_mpdo: cannot open '" + path + "'");
  save_mpdo(m, f);
}

MPDO load_mpdo(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (!in || magic != "mpdo-text" || version != 1)
    throw ConfigError("load_mpdo: not an mpdo-text v1 stream");
  MPDO m;
  in >> m.num_sites >> m.local_dim;
  if (!in || m.num_sites < 1 || m.local_dim < 2) throw ConfigError("load_mpdo: bad header");
  std::vector<Eigen::Index> dims(static_cast<std::size_t>(m.num_sites) + 1);
  for (auto& x : dims) {
    in >> x;
    if (!in || x < 1) throw ConfigError("load_mpdo: bad bond dimension");
  }
  if (dims.front() != 1 || dims.back() != 1)
    throw ConfigError("load_mpdo: boundary bonds must be 1");
  const int d = m.local_dim;
  for (int k = 0; k < m.num_sites; ++k) {
    std::vector<Matrix> site(static_cast<std::size_t>(d) * d);
    for (auto& a : site) {
      a.resize(dims[static_cast<std::size_t>(k)], dims[static_cast<std::size_t>(k) + 1]);
      for (Eigen::Index l = 0; l < a.rows(); ++l)
        for (Eigen::Index r = 0; r < a.cols(); ++r) {
          double re = 0.0, im = 0.0;
          in >> re >> im;
          if (!in) throw ConfigError("load_mpdo: truncated core data");
          a(l, r) = cx(re, im);
        }
    }
    m.cores.push_back(std::move(site));
  }
  return m;
}

MPDO load_mpdo(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("load_mpdo: cannot open '" + path + "'");
  return load_mpdo(f);
}

double global_bound(Eigen::Index span_dim, int merge_depth, double delta_max,
                    double dual_tolerance) {
  if (span_dim < 0 || merge_depth < 0 || delta_max < 0.0 || dual_tolerance < 0.0)
    throw ConfigError("global_bound: arguments must be nonnegative");
  const double factor = (2.0 * static_cast<double>(span_dim) + 1.0) * (1.0 + dual_tolerance);
  return std::pow(factor, merge_depth) * delta_max;
}

AsymptoticParams asymptotic_params(double n_sites, double c, double lambda, double kappa) {
  if (!(n_sites >= 2.0)) throw ConfigError("asymptotic_params: need N >= 2");
  if (!(c > 0.0)) throw ConfigError("asymptotic_params: need c > 0");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ConfigError("asymptotic_params: need lambda in (0, 1)");
  const double kappa_min = 2.0 * c / (1.0 - lambda);
  if (!(kappa > kappa_min))
    throw ConfigError("asymptotic_params: kappa must exceed 2c/(1-lambda) = " +
                      std::to_string(kappa_min));
  AsymptoticParams p;
  p.n_sites = n_sites;
  p.c = c;
  p.lambda = lambda;
  p.kappa = kappa;
  const double log2n = std::log2(n_sites);
  p.alpha = lambda / (5.0 * log2n);
  p.kappa_min = kappa_min;
  p.delta_exp = (kappa * (1.0 - lambda) - 2.0 * c) / lambda;
  p.log2_bond = kappa * log2n;
  p.log2_bound = std::log2(6.0) + kappa * log2n + log2n * (std::log2(3.0) - p.delta_exp * log2n);
  p.bound = std::exp2(p.log2_bound);
  return p;
}

namespace {

struct StageResult {
  BlockedMPDO state;
  double err = 0.0;   // exact ||state - rho||_1
  double fine = 0.0;  // recursive per-merge error accounting
};

struct MergeContext {
  const Matrix* rho = nullptr;
  SiteChain chain;
  const std::vector<BlockedMPDO>* leaves = nullptr;
  const std::vector<double>* deltas = nullptr;
  const CompressOptions* opts = nullptr;
  std::vector<MergeRecord>* merges = nullptr;
};

StageResult leaf_stage(const MergeContext& ctx, int cut) {
  StageResult s;
  s.state = (*ctx.leaves)[static_cast<std::size_t>(cut)];
  s.err = (*ctx.deltas)[static_cast<std::size_t>(cut)];
  s.fine = s.err;
  return s;
}

StageResult merge_stage(const MergeContext& ctx, StageResult supplier, StageResult other,
                        int pivot, bool right_mode, int depth, bool supplier_is_leaf) {
  const int n = ctx.chain.num_sites;
  const int d = ctx.chain.local_dim;
  if (!supplier_is_leaf) reduce_bond(supplier.state, pivot, ctx.opts->rank_threshold);

  std::vector<Matrix> family = right_mode ? blocked_right_factors(supplier.state, pivot)
                                          : blocked_left_factors(supplier.state, pivot);
  Region region = right_mode ? Region(pivot + 1, n, n, d) : Region(1, pivot, n, d);
  OperatorSubspace sub = make_subspace(region, family);
  ProjectionMap pm = build_projection(sub, ctx.opts->mode, ctx.opts->dual_tolerance,
                                      ctx.opts->max_iters,
                                      seed_for_cut(ctx.opts->seed, pivot));

  std::vector<Block> supplier_blocks;
  if (right_mode)
    supplier_blocks.assign(supplier.state.blocks.begin() + 1, supplier.state.blocks.end());
  else
    supplier_blocks.assign(supplier.state.blocks.begin(), supplier.state.blocks.end() - 1);

  StageResult out;
  out.state = apply_projection(pm, other.state, supplier_blocks);
  out.err = trace_norm(out.state.densify() - *ctx.rho);
  const double cert = pm.amplification_certificate;
  out.fine = (cert + 1.0) * supplier.fine + cert * other.fine;

  MergeRecord rec;
  rec.level = depth;
  rec.cut = pivot;
  rec.right_family = right_mode;
  rec.span_dim = sub.dimension();
  rec.certificate = cert;
  rec.quality = pm.basis.quality;
  rec.converged = pm.basis.converged;
  rec.error_measured = out.err;
  rec.bound_fine = out.fine;
  ctx.merges->push_back(rec);
  return out;
}

StageResult run_tree(const MergeContext& ctx, int lo, int hi, int depth) {
  if (lo == hi) return leaf_stage(ctx, lo);
  Split s = tree_split(ctx.chain.num_sites, lo, hi);
  if (s.right_mode) {
    StageResult supplier = run_tree(ctx, s.pivot, hi, depth + 1);
    StageResult other = run_tree(ctx, lo, s.pivot - 1, depth + 1);
    const bool leaf = s.pivot == hi;
    return merge_stage(ctx, std::move(supplier), std::move(other), s.pivot, true, depth, leaf);
  }
  StageResult supplier = run_tree(ctx, lo, s.pivot, depth + 1);
  StageResult other = run_tree(ctx, s.pivot + 1, hi, depth + 1);
  const bool leaf = s.pivot == lo;
  return merge_stage(ctx, std::move(supplier), std::move(other), s.pivot, false, depth, leaf);
}

}  // namespace

CompressionResult compress(const DenseOperator& rho, const MergeSchedule& schedule,
                           const CompressOptions& opts) {
  const auto t_start = Clock::now();
  const int n = rho.sites();
  const int d = rho.local_dim();
  if (schedule.num_sites != n)
    throw ConfigError("compress: schedule built for a different chain length");
  if (opts.d_p < 1) throw ConfigError("compress: d_p must be >= 1");
  if (!(opts.alpha >= 0.0 && opts.alpha < 1.0))
    throw ConfigError("compress: alpha must lie in [0, 1)");
  {
    std::vector<int> all;
    for (const auto& level : schedule.levels) all.insert(all.end(), level.begin(), level.end());
    std::sort(all.begin(), all.end());
    std::vector<int> want;
    for (int c = 1; c < n; ++c) want.push_back(c);
    if (all != want) throw ConfigError("compress: schedule does not cover every cut exactly once");
  }

  SiteChain chain(n, d, std::int64_t{1} << 20);
  CompressionReport rep;
  rep.num_sites = n;
  rep.local_dim = d;
  rep.d_p = opts.d_p;
  rep.strategy = schedule.strategy;
  rep.mode = opts.mode;
  rep.alpha = opts.alpha;
  rep.seed = opts.seed;
  rep.dual_tolerance = opts.dual_tolerance;
  rep.merge_depth = schedule.merge_depth;

  // Stage 1: one canonical purification, one truncation and exact leaf state
  // per cut.
  const auto t_trunc = Clock::now();
  PurifiedState psi = canonical_purification(chain, rho);
  std::vector<BlockedMPDO> leaves(static_cast<std::size_t>(n));
  std::vector<double> deltas(static_cast<std::size_t>(n), 0.0);
  for (int c = 1; c < n; ++c) {
    Cut cut(chain, c);
    CutTruncation t = schmidt_truncate(psi, cut, opts.d_p);
    CutSigma cs = cut_sigma(t, rho);
    CutRecord cr;
    cr.cut = c;
    cr.entanglement = purification_entanglement(psi, cut, opts.alpha);
    cr.eta = t.eta;
    cr.delta_measured = cs.delta_measured;
    cr.delta_analytic = cs.two_sqrt_eta;
    rep.cuts.push_back(cr);
    rep.eta_max = std::max(rep.eta_max, t.eta);
    rep.delta_max = std::max(rep.delta_max, cs.delta_measured);
    leaves[static_cast<std::size_t>(c)] =
        blocked_from_dense(cs.sigma.mat(), chain, c, opts.rank_threshold);
    deltas[static_cast<std::size_t>(c)] = cs.delta_measured;
  }
  rep.wall_ms_truncate = ms_since(t_trunc);

  // Stage 2: projection merges.
  const auto t_merge = Clock::now();
  MergeContext ctx;
  ctx.rho = &rho.mat();
  ctx.chain = chain;
  ctx.leaves = &leaves;
  ctx.deltas = &deltas;
  ctx.opts = &opts;
  ctx.merges = &rep.merges;

  StageResult final_state;
  if (schedule.strategy == ScheduleStrategy::Tree) {
    final_state = run_tree(ctx, 1, n - 1, 1);
  } else {
    final_state = leaf_stage(ctx, 1);
    for (int c = 2; c < n; ++c)
      final_state = merge_stage(ctx, leaf_stage(ctx, c), std::move(final_state), c, true, c, true);
  }
  rep.wall_ms_merge = ms_since(t_merge);

  for (const MergeRecord& mr : rep.merges) {
    rep.span_dim_max = std::max(rep.span_dim_max, mr.span_dim);
    rep.max_quality = std::max(rep.max_quality, mr.quality);
    rep.all_converged = rep.all_converged && mr.converged;
  }
  rep.eps_bound = global_bound(rep.span_dim_max, rep.merge_depth, rep.delta_max,
                               opts.dual_tolerance);

  // Per-level summary: merges at their depth, bare truncations at the level
  // that introduces them.
  for (int r = 1; r <= schedule.num_levels(); ++r) {
    LevelRecord lr;
    lr.level = r;
    for (const MergeRecord& mr : rep.merges)
      if (mr.level == r) lr.error_measured = std::max(lr.error_measured, mr.error_measured);
    for (int cut : schedule.levels[static_cast<std::size_t>(r - 1)]) {
      bool merged = false;
      for (const MergeRecord& mr : rep.merges) merged = merged || mr.cut == cut;
      if (!merged)
        lr.error_measured =
            std::max(lr.error_measured, deltas[static_cast<std::size_t>(cut)]);
    }
    rep.levels.push_back(lr);
  }
  const double level_factor = (2.0 * static_cast<double>(rep.span_dim_max) + 1.0) *
                              (1.0 + opts.dual_tolerance);
  for (int r = 1; r <= schedule.num_levels(); ++r) {
    double input = rep.delta_max;
    if (schedule.strategy == ScheduleStrategy::Tree) {
      if (r < schedule.num_levels())
        input = std::max(input, rep.levels[static_cast<std::size_t>(r)].error_measured);
    } else if (r >= 2) {
      input = std::max(input, rep.levels[static_cast<std::size_t>(r - 2)].error_measured);
    }
    rep.levels[static_cast<std::size_t>(r - 1)].growth_bound = level_factor * input;
  }

  // Stage 3: cores, exact trace normalization, exact final measurements.
  Matrix raw = final_state.state.densify();
  rep.raw_trace = raw.trace().real();
  if (std::abs(raw.trace()) < 1e-12)
    throw InvariantError("compress: merged state has vanishing trace");
  const cx scale = cx(1.0, 0.0) / raw.trace();
  for (auto& c : final_state.state.blocks.front().cores) c *= scale;
  final_state.fine += std::abs(cx(1.0, 0.0) - scale) * trace_norm(raw);
  rep.eps_bound_fine = final_state.fine;

  MPDO mpdo = mpdo_from_blocked(final_state.state);
  DenseOperator recon = reconstruct(mpdo);
  rep.eps_measured = trace_norm(recon.mat() - rho.mat());
  rep.hermiticity_error = (recon.mat() - recon.mat().adjoint()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (recon.mat() + recon.mat().adjoint()),
                                           Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = es.eigenvalues().minCoeff();
  const std::vector<Eigen::Index> dims = mpdo.bond_dims();
  for (auto& cr : rep.cuts) cr.bond = dims[static_cast<std::size_t>(cr.cut)];
  rep.wall_ms_total = ms_since(t_start);

  CompressionResult result;
  result.mpdo = std::move(mpdo);
  result.report = std::move(rep);
  return result;
}

std::string CompressionReport::to_json() const {
  nlohmann::json j;
  j["num_sites"] = num_sites;
  j["local_dim"] = local_dim;
  j["d_p"] = d_p;
  j["strategy"] = schedule_strategy_name(strategy);
  j["mode"] = basis_mode_name(mode);
  j["alpha"] = alpha;
  j["seed"] = seed;
  j["dual_tolerance"] = dual_tolerance;
  j["cuts"] = nlohmann::json::array();
  for (const auto& c : cuts) j["cuts"].push_back(cut_json(c));
  j["merges"] = nlohmann::json::array();
  for (const auto& m : merges) j["merges"].push_back(merge_json(m));
  j["levels"] = nlohmann::json::array();
  for (const auto& l : levels) j["levels"].push_back(level_json(l));
  j["eta_max"] = eta_max;
  j["delta_max"] = delta_max;
  j["span_dim_max"] = span_dim_max;
  j["merge_depth"] = merge_depth;
  j["eps_measured"] = eps_measured;
  j["eps_bound"] = eps_bound;
  j["eps_bound_fine"] = eps_bound_fine;
  j["raw_trace"] = raw_trace;
  j["hermiticity_error"] = hermiticity_error;
  j["min_eigenvalue"] = min_eigenvalue;
  j["max_quality"] = max_quality;
  j["all_converged"] = all_converged;
  j["wall_ms_truncate"] = wall_ms_truncate;
  j["wall_ms_merge"] = wall_ms_merge;
  j["wall_ms_total"] = wall_ms_total;
  return j.dump(2);
}

}  // namespace mpdo
