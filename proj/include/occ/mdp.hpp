#pragma once

#include "occ/rng.hpp"
#include "occ/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace occ {

/// Finite MDP with an explicit termination slot. Every probability row
/// (initial distribution and each kernel row) has num_states + 1 entries;
/// the last entry is the probability of moving to the absorbing final state.
/// Immutable after construction and safe to share across threads; sampling
/// takes a caller-owned RandomStream.
struct FiniteMdp {
  Index num_states = 0;
  Index num_actions = 0;
  Vector p0;           // num_states + 1
  Matrix kernel;       // (num_states * num_actions) x (num_states + 1), row s*A + a
  Matrix reward_mean;  // num_states x num_actions
  Real reward_bound = 0;
  Real gamma = 0;

  Index kernel_index(Index s, Index a) const { return s * num_actions + a; }
  auto kernel_row(Index s, Index a) const { return kernel.row(kernel_index(s, a)); }
  Index terminal_slot() const { return num_states; }
};

struct Violation {
  std::string location;
  std::string description;
  Real magnitude = 0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
};

/// Row-sum tolerance for stored distributions.
inline constexpr Real kRowSumTolerance = 1e-12;

/// Checks every tuple constraint: row sums within kRowSumTolerance of 1, no
/// negative probability, rewards within the stated bound, gamma in [0, 1],
/// and consistent dimensions. Violations are data, not failures.
ValidationReport validate_mdp(const FiniteMdp& mdp);

/// Throws ValidationError (with the first few violations) unless the MDP is clean.
void require_valid(const FiniteMdp& mdp);

/// Draws the successor (possibly terminal) and a reward with mean
/// reward_mean[s][a]. reward_noise_half_width adds uniform noise on
/// [-w, +w], clipped so the sample stays within [-reward_bound, reward_bound].
/// Out-of-range indices throw std::out_of_range.
std::pair<Real, StateOrTerminal> sample_transition(const FiniteMdp& mdp, Index s, Index a,
                                                   RandomStream& rng,
                                                   Real reward_noise_half_width = 0.0);

/// Draws from p0, including the termination slot (an empty episode).
StateOrTerminal sample_initial(const FiniteMdp& mdp, RandomStream& rng);

}  // namespace occ
