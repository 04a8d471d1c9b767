#pragma once

#include <cstdint>
#include <string>

#include "mpdo/operators.hpp"

namespace mpdo {

// Nearest-neighbour model on an open chain.
//   tfim:      H = -J sum Z_k Z_{k+1} - g sum X_k            (d = 2)
//   xxz:       H = Jxy sum (X X + Y Y) + Jz sum Z Z - h sum Z (d = 2)
//   random_nn: H = sum G_k, G_k seeded Hermitian two-site couplings scaled
//              by `strength` (any d)
struct HamiltonianSpec {
  enum class Model { Tfim, Xxz, RandomNN };
  Model model = Model::Tfim;
  double J = 1.0;
  double g = 1.0;
  double Jxy = 1.0;
  double Jz = 1.0;
  double h = 0.0;
  std::uint64_t seed = 0;
  double strength = 1.0;

  static HamiltonianSpec tfim(double J, double g);
  static HamiltonianSpec xxz(double Jxy, double Jz, double h);
  static HamiltonianSpec random_nn(std::uint64_t seed, double strength);
};

struct GibbsSpec {
  double beta = 1.0;  // >= 0
};

DenseOperator build_hamiltonian(const SiteChain& chain, const HamiltonianSpec& spec);

// exp(-beta H) / tr exp(-beta H), computed from the eigendecomposition with
// the largest weight shifted to 1 so large beta stays finite. beta = 0 gives
// the maximally mixed state; beta -> inf the ground-space projector.
DenseOperator gibbs_state(const SiteChain& chain, const DenseOperator& hamiltonian,
                          const GibbsSpec& gibbs);

enum class TestStateKind { Product, DephasedGhz, PureRandom, RankRandom, MaximallyMixed };

TestStateKind test_state_kind_from_string(const std::string& name);
std::string to_string(TestStateKind kind);

// Seeded test density matrices. `rank` is only used by RankRandom; random
// states are G G^dag / tr(G G^dag) with G a seeded complex Gaussian of width
// equal to the target rank.
DenseOperator test_state(const SiteChain& chain, TestStateKind kind, std::uint64_t seed,
                         int rank = 1);

}  // namespace mpdo
