#pragma once

#include "occ/mdp.hpp"
#include "occ/policy.hpp"
#include "occ/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace occ {

/// Expected discounted state-action visit counts mu(s, a) of a policy, with
/// the derived state marginal and a sound bound on any truncation error (0
/// for exact solves). Entrywise nonnegative, and additive over disjoint
/// state-action blocks: it is a (finite) measure.
struct OccupancyTable {
  Matrix mu;              // num_states x num_actions
  Vector state_marginal;  // row sums of mu
  Real tail_bound = 0;

  Real total_mass() const { return state_marginal.sum(); }
};

/// Builds a table from mu, deriving the marginal. Negative entries throw
/// ValidationError.
OccupancyTable make_occupancy_table(Matrix mu, Real tail_bound = 0);

struct SolveOptions {
  Real residual_tol = 1e-10;    // relative to max(1, |mu|_inf)
  Real radius_margin = 1e-9;    // gamma = 1 refused when rho(P_pi) >= 1 - margin
  Index dimension_cap = 2000;
};

/// Occupancy of a Markovian policy by direct linear solve of the
/// conservation-of-mass fixed point mu = p0|_S + gamma * P_pi^T mu
/// (dense LU with one step of iterative refinement). At gamma = 1 the
/// policy's surviving-state transition matrix must have spectral radius
/// below 1 - radius_margin, otherwise NonFiniteOccupancyError: such
/// occupancies may not exist as finite tables.
OccupancyTable occupancy_exact_markovian(const FiniteMdp& mdp, const MarkovianTable& policy,
                                         const SolveOptions& options = {});

struct EnumerateOptions {
  Real tol = 1e-8;
  Index max_depth = 200000;
  Real branch_floor = 1e-15;  // per-(t, s) mass below this is truncated into tail_bound
};

/// Occupancy of an arbitrary closed-world policy by exact forward expansion
/// of the trajectory tree. Histories reaching the same (t, state) carry
/// identical action distributions for every non-mixture family, so the tree
/// collapses to a forward recursion on the per-step state distribution;
/// mixtures expand by linearity over the episode-start draw. The partial sum
/// runs to the first depth whose remaining-tail bound is <= tol
/// (gamma^{T+1} m / (1 - gamma) for gamma < 1; surviving mass times the
/// remaining depth budget at gamma = 1). Mass cut by branch_floor is credited
/// to tail_bound with its full remaining horizon weight, keeping the bound
/// sound. Throws HorizonInsufficientError when the bound cannot be achieved
/// within max_depth.
OccupancyTable occupancy_enumerate(const FiniteMdp& mdp, const Policy& policy,
                                   const EnumerateOptions& options = {});

struct MonteCarloOptions {
  Index horizon_cap = 100000;
  int threads = 1;  // never affects the result, only wall time
  Real reward_noise_half_width = 0.0;
};

struct MonteCarloOccupancy {
  OccupancyTable table;   // tail_bound covers horizon truncation
  Matrix standard_error;  // per-entry standard error of the mean
  Index episodes = 0;
  Index truncated_episodes = 0;
  Real mean_return = 0;   // sample mean of the discounted return
  Real return_standard_error = 0;
};

/// Monte Carlo estimate: averages the per-episode discounted visit counts
/// sum_t gamma^t 1(S_t = s, A_t = a). Unbiased up to horizon truncation.
/// Episode e uses the stream derived from (seed, e) and episodes are reduced
/// in fixed blocks by index, so results are bit-identical for every thread
/// count. Requires episodes >= 2 (standard errors).
MonteCarloOccupancy occupancy_monte_carlo(const FiniteMdp& mdp, const Policy& policy,
                                          Index episodes, std::uint64_t seed,
                                          const MonteCarloOptions& options = {});

/// Expected discounted return from an occupancy table:
/// rho = sum_{s,a} E[r(s,a)] mu(s,a). The truncation error bar is
/// +/- reward_bound * mu.tail_bound.
Real performance_from_occupancy(const FiniteMdp& mdp, const OccupancyTable& mu);

struct ConservationResidual {
  Vector residual;  // mu(s) - p0(s) - gamma * inflow(s), per state
  Real max_norm = 0;
};

/// Conservation-of-mass defect of a table against an MDP. Exact-solve tables
/// must come out <= 1e-9 in max norm; enumerated tables <= tail_bound + 1e-9.
ConservationResidual conservation_residual(const FiniteMdp& mdp, const OccupancyTable& mu);

struct PolicyFiniteness {
  std::vector<Index> actions;  // deterministic choice per state
  bool finite = false;
  Real total_mass = 0;  // only meaningful when finite
};

struct FinitenessReport {
  bool uniformly_finite = false;
  std::vector<PolicyFiniteness> policies;
  std::optional<std::vector<Index>> witness;  // an infinite deterministic policy, if any
};

/// Sweeps every deterministic Markovian policy: each has a finite occupancy
/// iff the spectral radius of its gamma-scaled surviving-state transition
/// matrix is below 1. If all are finite, every policy on this MDP admits a
/// finite occupancy, which licenses gamma = 1 operations. Throws UsageError
/// when num_actions^num_states exceeds enumeration_limit.
FinitenessReport finiteness_check(const FiniteMdp& mdp, std::int64_t enumeration_limit = 1000000);

}  // namespace occ
