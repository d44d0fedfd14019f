#pragma once

#include "occ/occupancy.hpp"

#include <cstdint>
#include <vector>

namespace occ {

enum class NullRule { kUniform, kDesignatedAction };

struct NullFill {
  NullRule rule = NullRule::kUniform;
  Index action = 0;  // used by kDesignatedAction
};

struct ProjectionResult {
  MarkovianTable pi_tilde;
  std::vector<Index> null_states;  // states with mu(s) = 0, filled by rule
  Vector source_mass;              // the mu(s) vector used as denominator
};

/// The Markovianization operator: pi_tilde(a|s) = mu(s, a) / mu(s) wherever
/// mu(s) > 0, rows renormalized to kill drift at the 1e-12 scale. States of
/// zero mass get the null rule's row; the choice is immaterial since such
/// states are almost surely never visited. A negative mu(s) throws
/// ValidationError.
ProjectionResult markovianize(const OccupancyTable& mu, const NullFill& null_fill = {});

enum class EquivalenceMethod { kEnumerate, kMonteCarlo };

struct EquivalenceOptions {
  Real tol = 1e-7;
  EquivalenceMethod method = EquivalenceMethod::kEnumerate;
  EnumerateOptions enumerate;      // used by kEnumerate
  Index mc_episodes = 100000;      // used by kMonteCarlo
  std::uint64_t mc_seed = 0;
  MonteCarloOptions monte_carlo;
  NullFill null_fill;
  SolveOptions solve;
};

struct EquivalenceReport {
  Real max_abs_occupancy_gap = 0;
  Real performance_gap = 0;
  EquivalenceMethod method = EquivalenceMethod::kEnumerate;
  Real tail_bound = 0;         // method error of the non-Markovian side
  Real max_standard_error = 0; // 0 for enumeration
  Real occupancy_budget = 0;   // tol + tail_bound (+ 4 * stderr for Monte Carlo)
  Real performance_budget = 0; // reward_bound * occupancy_budget
  bool pass = false;
  Matrix gap;                  // entrywise |mu_pi - mu_pi_tilde|, for debugging
};

/// Checks the occupancy-equivalence claim on a finite instance: computes
/// mu_pi by the chosen method, projects it to pi_tilde, solves mu_pi_tilde
/// exactly, and compares both tables and their performances. The Markovian
/// side is always an exact solve, so the budget is dominated by the chosen
/// method's error, and the report spells out its composition. gamma = 1
/// requires the MDP to pass the finiteness sweep first.
EquivalenceReport verify_occupancy_equivalence(const FiniteMdp& mdp, const Policy& policy,
                                               const EquivalenceOptions& options = {});

struct IdempotenceReport {
  Real max_row_gap = 0;               // over states with positive re-solved mass
  std::vector<Index> excluded_states; // zero-mass states (the "null set" clause)
  Real tol = 0;
  bool pass = false;
};

/// Applies the operator twice across an exact re-solve: pi_tilde from mu,
/// mu_tilde from the exact solve under pi_tilde, pi_tilde_tilde from
/// mu_tilde. Returns the largest row-wise deviation on states mu_tilde
/// actually visits.
IdempotenceReport verify_idempotence(const FiniteMdp& mdp, const OccupancyTable& mu, Real tol,
                                     const NullFill& null_fill = {},
                                     const SolveOptions& solve = {});

struct PrefixViolation {
  std::vector<Index> states;   // s_0 .. s_{L-1}
  std::vector<Index> actions;  // a_0 .. a_{L-1}
  Real pi_probability = 0;
};

struct SupportCheckReport {
  Index prefixes_checked = 0;
  Real min_pi_tilde_probability = 0;  // over checked prefixes; 1 if none checked
  std::vector<PrefixViolation> violations;
  bool pass = false;
  std::int64_t nodes_expanded = 0;
};

struct SupportCheckOptions {
  Index t_max = 5;
  Real prob_floor = 1e-6;
  std::int64_t node_cap = 20000000;
};

/// Absolute-continuity probe for trajectory prefixes: every state-action
/// prefix of length <= t_max with pi-probability >= prob_floor must have
/// strictly positive probability under pi_tilde. A violation would falsify
/// this implementation, not the theorem. Throws Error when the expansion
/// exceeds node_cap.
SupportCheckReport trajectory_support_check(const FiniteMdp& mdp, const Policy& policy,
                                            const MarkovianTable& pi_tilde,
                                            const SupportCheckOptions& options = {});

}  // namespace occ
