#include "occ/projection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace occ {

ProjectionResult markovianize(const OccupancyTable& mu, const NullFill& null_fill) {
  const Index S = mu.mu.rows();
  const Index A = mu.mu.cols();
  if (null_fill.rule == NullRule::kDesignatedAction &&
      (null_fill.action < 0 || null_fill.action >= A)) {
    throw UsageError("markovianize: designated null action out of range");
  }

  ProjectionResult result;
  result.source_mass = mu.state_marginal;
  result.pi_tilde.probs = Matrix::Zero(S, A);
  for (Index s = 0; s < S; ++s) {
    const Real mass = mu.state_marginal[s];
    if (mass < 0) {
      throw ValidationError("markovianize: negative state mass at state " + std::to_string(s));
    }
    if (mass > 0) {
      Vector row = mu.mu.row(s).transpose() / mass;
      row /= row.sum();  // kill 1e-12-scale drift
      result.pi_tilde.probs.row(s) = row.transpose();
    } else {
      result.null_states.push_back(s);
      if (null_fill.rule == NullRule::kUniform) {
        result.pi_tilde.probs.row(s).setConstant(1.0 / static_cast<Real>(A));
      } else {
        result.pi_tilde.probs(s, null_fill.action) = 1.0;
      }
    }
  }
  return result;
}

EquivalenceReport verify_occupancy_equivalence(const FiniteMdp& mdp, const Policy& policy,
                                               const EquivalenceOptions& options) {
  if (mdp.gamma >= 1.0) {
    const FinitenessReport gate = finiteness_check(mdp);
    if (!gate.uniformly_finite) {
      throw NonFiniteOccupancyError(
          "verify_occupancy_equivalence: gamma = 1 and the MDP is not uniformly finite");
    }
  }

  EquivalenceReport report;
  report.method = options.method;

  OccupancyTable mu_pi;
  if (options.method == EquivalenceMethod::kEnumerate) {
    mu_pi = occupancy_enumerate(mdp, policy, options.enumerate);
    report.tail_bound = mu_pi.tail_bound;
  } else {
    const MonteCarloOccupancy mc = occupancy_monte_carlo(mdp, policy, options.mc_episodes,
                                                         options.mc_seed, options.monte_carlo);
    mu_pi = mc.table;
    report.tail_bound = mc.table.tail_bound;
    report.max_standard_error =
        mc.standard_error.size() == 0 ? 0 : mc.standard_error.maxCoeff();
  }

  const ProjectionResult projection = markovianize(mu_pi, options.null_fill);
  const OccupancyTable mu_tilde =
      occupancy_exact_markovian(mdp, projection.pi_tilde, options.solve);

  report.gap = (mu_pi.mu - mu_tilde.mu).cwiseAbs();
  report.max_abs_occupancy_gap = report.gap.size() == 0 ? 0 : report.gap.maxCoeff();
  report.performance_gap = std::abs(performance_from_occupancy(mdp, mu_pi) -
                                    performance_from_occupancy(mdp, mu_tilde));
  report.occupancy_budget =
      options.tol + report.tail_bound + 4.0 * report.max_standard_error;
  report.performance_budget = mdp.reward_bound * report.occupancy_budget;
  report.pass = report.max_abs_occupancy_gap <= report.occupancy_budget &&
                report.performance_gap <= report.performance_budget;
  return report;
}

IdempotenceReport verify_idempotence(const FiniteMdp& mdp, const OccupancyTable& mu, Real tol,
                                     const NullFill& null_fill, const SolveOptions& solve) {
  const ProjectionResult first = markovianize(mu, null_fill);
  const OccupancyTable mu_tilde = occupancy_exact_markovian(mdp, first.pi_tilde, solve);
  const ProjectionResult second = markovianize(mu_tilde, null_fill);

  IdempotenceReport report;
  report.tol = tol;
  for (Index s = 0; s < mdp.num_states; ++s) {
    if (mu_tilde.state_marginal[s] > 0) {
      const Real row_gap =
          (second.pi_tilde.probs.row(s) - first.pi_tilde.probs.row(s)).cwiseAbs().maxCoeff();
      report.max_row_gap = std::max(report.max_row_gap, row_gap);
    } else {
      report.excluded_states.push_back(s);
    }
  }
  report.pass = report.max_row_gap <= tol;
  return report;
}

namespace {

struct LeafComponent {
  const Policy* policy;
  Real weight;
};

// Flattens nested mixtures into weighted non-mixture leaves.
void flatten_mixture(const Policy& policy, Real weight, std::vector<LeafComponent>& out) {
  if (const auto* mixture = std::get_if<MixturePolicy>(&policy.node())) {
    for (std::size_t i = 0; i < mixture->components.size(); ++i) {
      const Real w = mixture->weights[static_cast<Index>(i)];
      if (w > 0) flatten_mixture(mixture->components[i], weight * w, out);
    }
    return;
  }
  out.push_back({&policy, weight});
}

using PrefixKey = std::vector<Index>;  // s0, a0, s1, a1, ...

void expand_prefixes(const FiniteMdp& mdp, const Policy& leaf, Real leaf_weight, Index t_max,
                     Real prune_floor, std::int64_t node_cap, std::int64_t& nodes,
                     std::map<PrefixKey, Real>& accumulated) {
  const Index S = mdp.num_states;
  const Index A = mdp.num_actions;

  struct Frame {
    PrefixKey key;
    Index state;
    Real probability;  // weighted by leaf_weight already
    Index t;
  };
  std::vector<Frame> stack;
  for (Index s = 0; s < S; ++s) {
    const Real p = leaf_weight * mdp.p0[s];
    if (p > prune_floor) stack.push_back({{}, s, p, 0});
  }

  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    if (++nodes > node_cap) throw Error("trajectory_support_check: expansion node cap exceeded");

    const Vector dist = action_distribution_at(leaf, frame.t, frame.state, A);
    for (Index a = 0; a < A; ++a) {
      const Real p_action = frame.probability * dist[a];
      if (p_action <= prune_floor) continue;
      PrefixKey key = frame.key;
      key.push_back(frame.state);
      key.push_back(a);
      accumulated[key] += p_action;
      if (frame.t + 1 >= t_max) continue;
      const auto row = mdp.kernel_row(frame.state, a);
      for (Index next = 0; next < S; ++next) {
        const Real p_next = p_action * row[next];
        if (p_next > prune_floor) stack.push_back({key, next, p_next, frame.t + 1});
      }
    }
  }
}

}  // namespace

SupportCheckReport trajectory_support_check(const FiniteMdp& mdp, const Policy& policy,
                                            const MarkovianTable& pi_tilde,
                                            const SupportCheckOptions& options) {
  require_valid(mdp);
  check_policy(policy, mdp.num_states, mdp.num_actions);
  check_policy(Policy(pi_tilde), mdp.num_states, mdp.num_actions);

  std::vector<LeafComponent> leaves;
  flatten_mixture(policy, 1.0, leaves);
  // Prune far below the reporting floor so near-floor prefixes keep their
  // full accumulated probability even when split across components.
  const Real prune_floor =
      options.prob_floor * 1e-3 / static_cast<Real>(std::max<std::size_t>(leaves.size(), 1));

  std::map<PrefixKey, Real> prefix_probability;
  SupportCheckReport report;
  for (const LeafComponent& leaf : leaves) {
    expand_prefixes(mdp, *leaf.policy, leaf.weight, options.t_max, prune_floor, options.node_cap,
                    report.nodes_expanded, prefix_probability);
  }

  report.min_pi_tilde_probability = 1.0;
  for (const auto& [key, pi_prob] : prefix_probability) {
    if (pi_prob < options.prob_floor) continue;
    ++report.prefixes_checked;
    // Shared p0 and kernel factors are positive along the prefix by
    // construction, so the pi_tilde probability only multiplies them by the
    // pi_tilde action factors.
    Real tilde_prob = mdp.p0[key[0]];
    for (std::size_t i = 0; i + 1 < key.size(); i += 2) {
      const Index s = key[i];
      const Index a = key[i + 1];
      tilde_prob *= pi_tilde.probs(s, a);
      if (i + 2 < key.size()) tilde_prob *= mdp.kernel_row(s, a)[key[i + 2]];
    }
    report.min_pi_tilde_probability = std::min(report.min_pi_tilde_probability, tilde_prob);
    if (!(tilde_prob > 0)) {
      PrefixViolation violation;
      for (std::size_t i = 0; i + 1 < key.size(); i += 2) {
        violation.states.push_back(key[i]);
        violation.actions.push_back(key[i + 1]);
      }
      violation.pi_probability = pi_prob;
      report.violations.push_back(std::move(violation));
    }
  }
  if (report.prefixes_checked == 0) report.min_pi_tilde_probability = 1.0;
  report.pass = report.violations.empty();
  return report;
}

}  // namespace occ
