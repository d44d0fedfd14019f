#include "occ/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace occ {

namespace {

void check_distribution_row(const Eigen::Ref<const Vector>& row, const std::string& where) {
  for (Index i = 0; i < row.size(); ++i) {
    if (row[i] < 0 || !std::isfinite(row[i])) {
      throw ValidationError(where + ": negative or non-finite probability at index " +
                            std::to_string(i));
    }
  }
  const Real gap = std::abs(row.sum() - 1.0);
  if (!(gap <= kRowSumTolerance)) {
    throw ValidationError(where + ": row sum off by " + std::to_string(gap));
  }
}

void check_table(const Matrix& probs, Index num_states, Index num_actions,
                 const std::string& where) {
  if (probs.rows() != num_states || probs.cols() != num_actions) {
    throw ValidationError(where + ": table shape must be num_states x num_actions");
  }
  for (Index s = 0; s < probs.rows(); ++s) {
    check_distribution_row(probs.row(s).transpose(), where + " row " + std::to_string(s));
  }
}

Real scripted_param(const ScriptedPolicy& p, const std::string& key) {
  const auto it = p.params.find(key);
  if (it == p.params.end()) {
    throw ValidationError("scripted policy '" + p.name + "' missing parameter '" + key + "'");
  }
  return it->second;
}

Index scripted_int_param(const ScriptedPolicy& p, const std::string& key) {
  const Real v = scripted_param(p, key);
  const Real r = std::round(v);
  if (!(std::abs(v - r) <= 1e-9)) {
    throw ValidationError("scripted policy '" + p.name + "' parameter '" + key +
                          "' must be an integer");
  }
  return static_cast<Index>(r);
}

// Epoch index of timestep t for the alternating-epoch construction:
// epoch i covers t in [2^i, 2^{i+1}); t = 0 is assigned to the first epoch.
Index epoch_of(Index t) {
  if (t <= 1) return 0;
  Index i = 0;
  while ((Index{1} << (i + 1)) <= t) ++i;
  return i;
}

Vector dirac(Index num_actions, Index a) {
  Vector v = Vector::Zero(num_actions);
  v[a] = 1.0;
  return v;
}

Vector scripted_distribution(const ScriptedPolicy& p, Index t, Index num_actions) {
  if (p.name == "loop_then_exit") {
    const Index n = scripted_int_param(p, "n");
    if (n < 1) throw ValidationError("loop_then_exit requires n >= 1");
    if (num_actions < 2) throw ValidationError("loop_then_exit requires at least 2 actions");
    return dirac(num_actions, t < n ? 0 : 1);
  }
  if (p.name == "alternating_epochs") {
    if (num_actions < 2) throw ValidationError("alternating_epochs requires at least 2 actions");
    return dirac(num_actions, epoch_of(t) % 2 == 0 ? 0 : 1);
  }
  if (p.name == "uniform_then_action") {
    const Index a = scripted_int_param(p, "action");
    if (a < 0 || a >= num_actions) {
      throw ValidationError("uniform_then_action: action index out of range");
    }
    if (t == 0) return Vector::Constant(num_actions, 1.0 / static_cast<Real>(num_actions));
    return dirac(num_actions, a);
  }
  throw ValidationError("unknown scripted policy '" + p.name + "'");
}

const Policy& resolve_mixture(const Policy& policy, RandomStream& rng) {
  const Policy* current = &policy;
  while (const auto* mix = std::get_if<MixturePolicy>(&current->node())) {
    const Index i = rng.categorical(mix->weights);
    current = &mix->components[static_cast<std::size_t>(i)];
  }
  return *current;
}

}  // namespace

void check_policy(const Policy& policy, Index num_states, Index num_actions) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, MarkovianTable>) {
          check_table(node.probs, num_states, num_actions, "markovian table");
        } else if constexpr (std::is_same_v<T, TimeDependentTable>) {
          for (std::size_t t = 0; t < node.head.size(); ++t) {
            check_table(node.head[t], num_states, num_actions,
                        "time-dependent table t=" + std::to_string(t));
          }
          check_table(node.tail.probs, num_states, num_actions, "time-dependent tail");
        } else if constexpr (std::is_same_v<T, ScriptedPolicy>) {
          // Evaluating t = 0 runs all name/parameter checks.
          scripted_distribution(node, 0, num_actions);
        } else {
          if (node.components.empty()) throw ValidationError("mixture has no components");
          if (node.weights.size() != static_cast<Index>(node.components.size())) {
            throw ValidationError("mixture weights/components length mismatch");
          }
          check_distribution_row(node.weights, "mixture weights");
          for (const Policy& sub : node.components) check_policy(sub, num_states, num_actions);
        }
      },
      policy.node());
}

Policy make_mixture(std::vector<Policy> policies, Vector weights) {
  if (policies.empty()) throw UsageError("make_mixture: empty policy list");
  if (weights.size() != static_cast<Index>(policies.size())) {
    throw UsageError("make_mixture: weights/policies length mismatch");
  }
  for (Index i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0 || !std::isfinite(weights[i])) {
      throw UsageError("make_mixture: weights must be nonnegative and finite");
    }
  }
  const Real total = weights.sum();
  if (!(total > 0)) throw UsageError("make_mixture: all-zero weights");
  return MixturePolicy{std::move(policies), weights / total};
}

Vector action_distribution_at(const Policy& policy, Index t, Index state, Index num_actions) {
  return std::visit(
      [&](const auto& node) -> Vector {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, MarkovianTable>) {
          return node.probs.row(state).transpose();
        } else if constexpr (std::is_same_v<T, TimeDependentTable>) {
          if (t < static_cast<Index>(node.head.size())) {
            return node.head[static_cast<std::size_t>(t)].row(state).transpose();
          }
          return node.tail.probs.row(state).transpose();
        } else if constexpr (std::is_same_v<T, ScriptedPolicy>) {
          return scripted_distribution(node, t, num_actions);
        } else {
          throw UsageError(
              "mixture policy queried without an episode scope; use begin_episode");
        }
      },
      policy.node());
}

Vector action_distribution(const Policy& policy, const History& history, Index num_actions) {
  return action_distribution_at(policy, history.t(), history.current_state, num_actions);
}

Vector EpisodePolicy::action_distribution(const History& history, Index num_actions) const {
  return occ::action_distribution(*leaf_, history, num_actions);
}

Vector EpisodePolicy::action_distribution_at(Index t, Index state, Index num_actions) const {
  return occ::action_distribution_at(*leaf_, t, state, num_actions);
}

EpisodePolicy begin_episode(const Policy& policy, RandomStream& rng) {
  return EpisodePolicy(&resolve_mixture(policy, rng));
}

Trajectory sample_episode(const FiniteMdp& mdp, const Policy& policy, RandomStream& rng,
                          Index horizon_cap, Real reward_noise_half_width) {
  if (horizon_cap <= 0) throw UsageError("sample_episode: horizon_cap must be positive");

  Trajectory trajectory;
  const EpisodePolicy episode = begin_episode(policy, rng);

  const StateOrTerminal initial = sample_initial(mdp, rng);
  if (initial.is_terminal()) return trajectory;  // empty episode, not truncated

  History history;
  history.current_state = initial.index();
  for (Index t = 0; t < horizon_cap; ++t) {
    const Index s = history.current_state;
    const Vector dist = episode.action_distribution(history, mdp.num_actions);
    const Index a = rng.categorical(dist);
    const auto [r, next] = sample_transition(mdp, s, a, rng, reward_noise_half_width);
    trajectory.steps.push_back({s, a, r, next});
    if (next.is_terminal()) return trajectory;
    history.steps.push_back({s, a, r});
    history.current_state = next.index();
  }
  trajectory.truncated = true;
  return trajectory;
}

}  // namespace occ
