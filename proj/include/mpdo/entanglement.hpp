#pragma once

#include <string>

#include "mpdo/operators.hpp"
#include "mpdo/purification.hpp"

namespace mpdo {

// Renyi entropy S_alpha of a probability spectrum (natural logs).
// alpha = 1 uses the von Neumann formula with 0 log 0 := 0; alpha = 0 counts
// the support (entries above 1e-12). Entries may carry -1e-12 of eigensolver
// noise (clipped); the spectrum must sum to 1 within 1e-9.
double renyi_entropy(const RealVector& spectrum, double alpha);

// S_alpha of the reduced state on purified sites 1..k (physical + ancilla).
double purification_entanglement(const PurifiedState& psi, const Cut& cut, double alpha);

// von Neumann mutual information S(A) + S(B) - S(AB) across a cut.
double mutual_information(const DenseOperator& rho, const Cut& cut);

struct EopOptions {
  int restarts = 8;
  int max_iters = 300;
  std::uint64_t seed = 1234;
  int anc_cap = 64;  // cap on the purifying dimension after split rounding
};

// Upper-bound estimate of the entanglement of purification across a cut:
// seeded multi-restart descent over ancilla unitaries of a rank purification,
// with both ancilla-split orderings tried. The canonical purification is
// always evaluated as one of the candidates, so value never exceeds the
// canonical cut entanglement.
struct EopEstimate {
  Cut cut;
  double alpha = 0.0;
  double value = 0.0;
  double canonical_value = 0.0;
  double gap_to_canonical = 0.0;  // canonical_value - value, >= 0
  int restarts = 0;
  long iterations = 0;  // accepted descent steps over all restarts
  bool converged = false;
};

EopEstimate eop_estimate(const DenseOperator& rho, const Cut& cut, double alpha,
                         const EopOptions& opts = {});

enum class ScanMethod { CanonicalPurification, OptimizedPurification, MutualInformation };

std::string scan_method_name(ScanMethod m);
ScanMethod scan_method_from_string(const std::string& name);

// Per-cut entanglement profile of a state. For the canonical-purification
// method the value at cut k is S_alpha of the purified left half; note that
// for a globally pure state this equals twice the state's own S_alpha across
// the cut, because the conjugate ancilla copy carries the same spectrum.
struct EntropyProfile {
  double alpha = 0.0;
  ScanMethod method = ScanMethod::CanonicalPurification;
  std::string source;
  RealVector values;  // index k-1 holds the value at cut k
  double e_max = 0.0;
};

EntropyProfile arealaw_scan(const DenseOperator& rho, double alpha, ScanMethod method,
                            const EopOptions& opts = {}, const std::string& source = "");

}  // namespace mpdo
