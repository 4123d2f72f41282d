#pragma once

// Initial states for the collision experiment: relaxed MCTDHF ground state,
// an attached Gaussian wavepacket, Brueckner orbitals, and the CCD
// amplitudes read off the rotated CI vector.

#include "oatdcc/propagator.hpp"

#include <cstdint>

namespace oatdcc {

struct WavepacketParams {
  double x0 = 10.0;
  double k0 = 1.2;
  double sigma = 1.25;
  int spin = 0;  // 0 up, 1 down
};

/// g(x) = C exp(-(x-x0)^2 / 4 sigma^2 + i k0 x) in the chosen spin block,
/// normalized with weight dx. Throws std::invalid_argument for sigma <= 0.
VectorXc wavepacket(const GridSpec& grid, const WavepacketParams& wp);

/// 0, 1, 0, 1, ... (up, down alternating).
std::vector<int> alternating_spins(int n_orb);

/// Smooth random orthonormal spin orbitals (perturbed oscillator functions,
/// one spatial function per up/down pair) and a CI vector dominated by the
/// reference, in the sector fixed by the occupied spins. Deterministic in seed.
McState random_initial_state(const GridSpec& grid, int n_particles, int n_orb, const std::vector<int>& spins,
                             std::uint64_t seed);

/// Imaginary-time MCTDHF ground state from random_initial_state with
/// alternating spins (spin projection zero for even N).
RelaxResult ground_state_mctdhf(const Model& model, int n_particles, int n_orb, std::uint64_t seed,
                                const RelaxOptions& opt = {});

/// |Psi> = g+ |Psi_N>: g is Gram-Schmidt orthogonalized against the orbitals
/// and inserted as orbital N, the first virtual slot, so that it is occupied
/// in the new reference. Throws std::runtime_error if g lies in the span
/// (residual norm < 1e-8).
McState attach_wavepacket(const McState& s, const VectorXc& g, int spin = 0);

/// t(i,a) = <phi_i^a|Psi> / <phi|Psi>, N x V.
MatrixXc singles_amplitudes(const McState& s);

struct BruecknerResult {
  McState state;
  int iterations = 0;
  double max_singles = 0.0;
  bool converged = false;
  double reference_overlap_before = 0.0;  // |<phi|Psi>| / |Psi|
  double reference_overlap_after = 0.0;
};

/// Rotates Phi <- Phi exp(K - K^H), K(N+a, i) = t(i,a), and re-expresses the
/// CI vector, until max |t| < tol.
BruecknerResult brueckner_rotate(const McState& s, int max_iter = 200, double tol = 1e-10);

struct Extraction {
  CCState state;
  double reference_weight = 0.0;     // |A_0|
  double truncation_remainder = 0.0;  // |(e^T - 1 - T) phi - (Psi/A0 - 1 - A2)| over triples and up
};

/// tau = A_2 / A_0 and lambda from <Psi~| e^T = <phi|(1 + Lambda) at the
/// doubles level with <Psi~| proportional to <Psi|. Orbitals Phi, bra = Phi^H.
/// Throws std::runtime_error when |A_0| < 1e-8.
Extraction extract_cc_initial(const McState& s);

/// Doubles coefficients of a CI vector as tau(i,j,a,b) = C(ij->ab) / C_0.
Tensor4c doubles_from_ci(const DeterminantSpace& space, const VectorXc& C);
/// Same for a bra vector, layout (a,b,i,j).
Tensor4c deexcitation_from_ci(const DeterminantSpace& space, const VectorXc& b);

}  // namespace oatdcc
