#pragma once

#include <cstdint>
#include <vector>

#include "mpdo/operators.hpp"

namespace mpdo {

// Purification of a density matrix on an N-site chain, with each site's
// ancilla co-located: site k of the purified chain has local dimension d^2
// and carries the pair (i_k, j_k), combined as i_k * d + j_k. The canonical
// choice has amplitudes <i| sqrt(rho) |j>, so tracing every ancilla returns
// rho exactly.
struct PurifiedState {
  SiteChain chain;           // the physical chain (local dimension d)
  Vector amplitudes;         // length (d^2)^N, unit norm
  std::uint64_t source_fingerprint = 0;
};

PurifiedState canonical_purification(const SiteChain& chain, const DenseOperator& rho);

// Trace out every ancilla of a purified state; returns the physical density
// matrix (exactly rho for the canonical purification).
DenseOperator ancilla_trace(const PurifiedState& psi);

// Schmidt truncation of a purified state at a cut, keeping the d_p largest
// values. chi is the raw truncated vector and is NOT renormalized: its
// squared norm is 1 - eta where eta is the total discarded squared weight
// (equivalently 1 - |<psi|chi>|^2 for the normalized direction of chi).
struct CutTruncation {
  Cut cut;
  int d_p = 0;
  RealVector schmidt_values;   // full spectrum, descending
  Matrix left_vectors;         // (d^2)^k x d_p, retained, phase-gauged
  Matrix right_vectors;        // (d^2)^(N-k) x d_p
  double eta = 0.0;
  std::uint64_t source_fingerprint = 0;
  int num_sites = 0;
  int local_dim = 0;

  // Retained Schmidt weights of the *normalized* truncated state.
  RealVector normalized_weights() const;
};

CutTruncation schmidt_truncate(const PurifiedState& psi, const Cut& cut, int d_p);

// Full Schmidt spectrum (descending) of the purified state at a cut.
RealVector purification_schmidt_spectrum(const PurifiedState& psi, const Cut& cut);

// The truncated vector as a dense unit vector (normalized chi).
Vector normalized_chi(const CutTruncation& t);

// sigma_D = tr_{A'B'} |chi><chi| for the normalized truncation, plus the
// exactly measured error delta = ||rho - sigma_D||_1. Checks that rho is the
// operator the purification was built from (fingerprint), and that
// delta <= 2 sqrt(eta) within 1e-9.
struct CutSigma {
  DenseOperator sigma;
  double delta_measured = 0.0;
  double two_sqrt_eta = 0.0;
};

CutSigma cut_sigma(const CutTruncation& t, const DenseOperator& rho);

// Left factors A_ij = tr_{A'} |chi_i^L><chi_j^L| of the normalized truncated
// state, flattened over (i, j) with m = i * d_p + j; and the right factors
// B_ij. sigma_D equals sum_m kron(A_m, B_m).
std::vector<Matrix> truncation_left_factors(const CutTruncation& t);
std::vector<Matrix> truncation_right_factors(const CutTruncation& t);

// Truncation-error bound eta <= ((1-alpha) e^{E_alpha} / D_p)^{(1-alpha)/alpha},
// evaluated in log space. E_alpha is a Renyi entanglement value of a
// purification across the cut, 0 <= alpha < 1.
double eta_bound(double e_alpha, double alpha, int d_p);

}  // namespace mpdo
