#pragma once

#include "occ/mdp.hpp"
#include "occ/rng.hpp"
#include "occ/types.hpp"

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace occ {

/// One completed step of a trajectory, as seen by a policy.
struct HistoryStep {
  Index state = 0;
  Index action = 0;
  Real reward = 0;
};

/// Trajectory history h_t: the completed steps followed by the current
/// state. The current timestep equals the number of completed steps; an
/// empty step list means t = 0 at the initial state.
struct History {
  std::vector<HistoryStep> steps;
  Index current_state = 0;

  Index t() const { return static_cast<Index>(steps.size()); }
};

/// Stationary policy: one action distribution per state.
struct MarkovianTable {
  Matrix probs;  // num_states x num_actions, rows are distributions
};

/// Action distribution chosen by (t, state): explicit tables for
/// t < head.size(), then the tail table for every later step. The tail rule
/// keeps the description finite.
struct TimeDependentTable {
  std::vector<Matrix> head;
  MarkovianTable tail;
};

/// Named closed-form policy. These cover constructions no finite table
/// encodes, and are referenced by name + parameters in scenario files.
/// Registered names:
///   loop_then_exit        {n}      : action 0 for t < n, action 1 from t = n on
///   alternating_epochs    {}       : action 0 while the epoch index floor(log2 t)
///                                    is even, action 1 otherwise; t = 0 plays
///                                    action 0 with the first epoch
///   uniform_then_action   {action} : uniform at t = 0, then always `action`
struct ScriptedPolicy {
  std::string name;
  std::map<std::string, Real> params;
};

class Policy;

/// Draws one sub-policy per episode (weighted), then follows it for the
/// whole episode. The draw belongs to the episode scope, never to shared state.
struct MixturePolicy {
  std::vector<Policy> components;
  Vector weights;  // nonnegative, sums to 1
};

class Policy {
 public:
  using Node = std::variant<MarkovianTable, TimeDependentTable, ScriptedPolicy, MixturePolicy>;

  Policy(MarkovianTable table) : node_(std::move(table)) {}
  Policy(TimeDependentTable table) : node_(std::move(table)) {}
  Policy(ScriptedPolicy scripted) : node_(std::move(scripted)) {}
  Policy(MixturePolicy mixture) : node_(std::move(mixture)) {}

  const Node& node() const { return node_; }
  bool is_mixture() const { return std::holds_alternative<MixturePolicy>(node_); }

 private:
  Node node_;
};

/// Throws ValidationError on any malformed distribution row, out-of-range
/// table shape, unknown scripted name, or bad mixture weights.
void check_policy(const Policy& policy, Index num_states, Index num_actions);

/// Builds a mixture from sub-policies and weights; weights are normalized.
/// All-zero or negative weights, or an empty list, throw UsageError.
Policy make_mixture(std::vector<Policy> policies, Vector weights);

/// Action distribution given only (t, state). Defined for every non-mixture
/// family in the closed world (their histories matter only through (t, s));
/// a mixture throws UsageError because its distribution is scoped to an
/// episode draw.
Vector action_distribution_at(const Policy& policy, Index t, Index state, Index num_actions);

/// Action distribution for a full history (Def.-style interface). Same
/// mixture restriction as above.
Vector action_distribution(const Policy& policy, const History& history, Index num_actions);

/// A policy with this episode's mixture draws resolved. Valid while the
/// underlying Policy is alive; memory (including the draw) is discarded with
/// the scope, which resets it at every episode start.
class EpisodePolicy {
 public:
  Vector action_distribution(const History& history, Index num_actions) const;
  Vector action_distribution_at(Index t, Index state, Index num_actions) const;

 private:
  friend EpisodePolicy begin_episode(const Policy&, RandomStream&);
  explicit EpisodePolicy(const Policy* leaf) : leaf_(leaf) {}
  const Policy* leaf_;
};

/// Opens an episode scope: resolves (possibly nested) mixture draws with the
/// given stream and returns the policy view for this episode.
EpisodePolicy begin_episode(const Policy& policy, RandomStream& rng);

struct TransitionStep {
  Index s = 0;
  Index a = 0;
  Real r = 0;
  StateOrTerminal next = StateOrTerminal::terminal();
};

struct Trajectory {
  std::vector<TransitionStep> steps;
  bool truncated = false;  // horizon cap hit before termination
};

/// Rolls out one episode: S0 ~ p0, A_t ~ pi(.|H_t), S_{t+1} ~ p(.|S_t, A_t),
/// until the final state or horizon_cap steps (flagged truncated). The
/// mixture draw happens once, before the first action. horizon_cap = 0
/// throws UsageError.
Trajectory sample_episode(const FiniteMdp& mdp, const Policy& policy, RandomStream& rng,
                          Index horizon_cap, Real reward_noise_half_width = 0.0);

}  // namespace occ
