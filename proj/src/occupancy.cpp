#include "occ/occupancy.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace occ {

namespace {

// Surviving-state transition matrix of a Markovian policy:
// P(s, s') = sum_a pi(a|s) p(s'|s, a), termination mass dropped.
Matrix policy_transition_matrix(const FiniteMdp& mdp, const MarkovianTable& policy) {
  const Index S = mdp.num_states;
  const Index A = mdp.num_actions;
  Matrix P = Matrix::Zero(S, S);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      const Real w = policy.probs(s, a);
      if (w <= 0) continue;
      P.row(s) += w * mdp.kernel_row(s, a).head(S);
    }
  }
  return P;
}

Real spectral_radius(const Matrix& m) {
  if (m.rows() == 0) return 0;
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// Solves (I - gamma P^T) x = p0|_S with one refinement step; returns x and
// the achieved residual max norm.
std::pair<Vector, Real> solve_flow(const FiniteMdp& mdp, const Matrix& P) {
  const Index S = mdp.num_states;
  const Matrix A = Matrix::Identity(S, S) - mdp.gamma * P.transpose();
  const Vector b = mdp.p0.head(S);
  const Eigen::PartialPivLU<Matrix> lu(A);
  Vector x = lu.solve(b);
  const Vector correction = lu.solve(b - A * x);
  x += correction;
  const Real residual = (A * x - b).cwiseAbs().maxCoeff();
  return {std::move(x), residual};
}

struct EpisodeStats {
  Real discounted_return = 0;
};

// Accumulates one episode's discounted visit counts into `counts` and
// returns the episode's discounted return.
EpisodeStats accumulate_episode(const FiniteMdp& mdp, const Policy& policy, RandomStream rng,
                                Index horizon_cap, Real reward_noise, Matrix& counts,
                                bool& truncated) {
  const Trajectory trajectory = sample_episode(mdp, policy, rng, horizon_cap, reward_noise);
  truncated = trajectory.truncated;
  EpisodeStats stats;
  Real discount = 1.0;
  for (const TransitionStep& step : trajectory.steps) {
    counts(step.s, step.a) += discount;
    stats.discounted_return += discount * step.r;
    discount *= mdp.gamma;
  }
  return stats;
}

}  // namespace

OccupancyTable make_occupancy_table(Matrix mu, Real tail_bound) {
  for (Index s = 0; s < mu.rows(); ++s) {
    for (Index a = 0; a < mu.cols(); ++a) {
      if (mu(s, a) < 0 || !std::isfinite(mu(s, a))) {
        throw ValidationError("occupancy entry (" + std::to_string(s) + ", " +
                              std::to_string(a) + ") is negative or non-finite");
      }
    }
  }
  OccupancyTable table;
  table.state_marginal = mu.rowwise().sum();
  table.mu = std::move(mu);
  table.tail_bound = tail_bound;
  return table;
}

OccupancyTable occupancy_exact_markovian(const FiniteMdp& mdp, const MarkovianTable& policy,
                                         const SolveOptions& options) {
  require_valid(mdp);
  check_policy(Policy(policy), mdp.num_states, mdp.num_actions);
  if (mdp.num_states > options.dimension_cap) {
    throw UsageError("occupancy_exact_markovian: num_states exceeds the dense solve cap");
  }

  const Matrix P = policy_transition_matrix(mdp, policy);
  if (mdp.gamma >= 1.0) {
    const Real radius = spectral_radius(P);
    if (radius >= 1.0 - options.radius_margin) {
      throw NonFiniteOccupancyError(
          "non-finite occupancy: gamma = 1 and the policy's state-transition matrix has "
          "spectral radius " + std::to_string(radius));
    }
  }

  auto [marginal, residual] = solve_flow(mdp, P);
  const Real scale = std::max<Real>(1.0, marginal.cwiseAbs().maxCoeff());
  if (!(residual <= options.residual_tol * scale)) {
    throw NumericalError("occupancy solve residual " + std::to_string(residual) +
                             " exceeds tolerance",
                         residual);
  }
  // The exact solution is nonnegative; solver noise may leave tiny negatives.
  for (Index s = 0; s < marginal.size(); ++s) {
    if (marginal[s] < 0) {
      if (marginal[s] < -1e-10 * scale) {
        throw NumericalError("occupancy solve produced a negative state mass", marginal[s]);
      }
      marginal[s] = 0;
    }
  }

  Matrix mu = policy.probs;
  for (Index s = 0; s < mdp.num_states; ++s) mu.row(s) *= marginal[s];
  return make_occupancy_table(std::move(mu), 0.0);
}

OccupancyTable occupancy_enumerate(const FiniteMdp& mdp, const Policy& policy,
                                   const EnumerateOptions& options) {
  if (const auto* mixture = std::get_if<MixturePolicy>(&policy.node())) {
    // Linearity over the episode-start draw.
    Matrix mu = Matrix::Zero(mdp.num_states, mdp.num_actions);
    Real tail = 0;
    for (std::size_t i = 0; i < mixture->components.size(); ++i) {
      const Real w = mixture->weights[static_cast<Index>(i)];
      if (w <= 0) continue;
      const OccupancyTable part = occupancy_enumerate(mdp, mixture->components[i], options);
      mu += w * part.mu;
      tail += w * part.tail_bound;
    }
    return make_occupancy_table(std::move(mu), tail);
  }

  require_valid(mdp);
  check_policy(policy, mdp.num_states, mdp.num_actions);

  const Index S = mdp.num_states;
  const Index A = mdp.num_actions;
  const Real gamma = mdp.gamma;

  Matrix mu = Matrix::Zero(S, A);
  Vector alive = mdp.p0.head(S);  // mass still in play at the current depth
  Real discount = 1.0;            // gamma^t
  Real pruned_tail = 0;

  for (Index t = 0;; ++t) {
    const Real mass = alive.sum();
    // Bound on everything at depths >= t.
    const Real remaining = gamma < 1.0 ? discount * mass / (1.0 - gamma)
                                       : mass * static_cast<Real>(options.max_depth - t);
    if (remaining <= options.tol || mass <= 0.0) {
      return make_occupancy_table(std::move(mu), pruned_tail + std::max<Real>(remaining, 0.0));
    }
    if (t >= options.max_depth) {
      throw HorizonInsufficientError(
          "horizon insufficient: tail bound " + std::to_string(pruned_tail + remaining) +
              " > tol " + std::to_string(options.tol) + " at depth " + std::to_string(t),
          pruned_tail + remaining);
    }

    Vector next = Vector::Zero(S);
    for (Index s = 0; s < S; ++s) {
      const Real d = alive[s];
      if (d <= 0) continue;
      const Vector w = action_distribution_at(policy, t, s, A);
      mu.row(s) += (discount * d) * w.transpose();
      for (Index a = 0; a < A; ++a) {
        if (w[a] <= 0) continue;
        next.noalias() += (d * w[a]) * mdp.kernel_row(s, a).head(S).transpose();
      }
    }

    discount *= gamma;
    for (Index s = 0; s < S; ++s) {
      if (next[s] > 0 && next[s] < options.branch_floor) {
        const Real weight = gamma < 1.0
                                ? discount / (1.0 - gamma)
                                : static_cast<Real>(options.max_depth - (t + 1));
        pruned_tail += next[s] * weight;
        next[s] = 0;
      }
    }
    alive = std::move(next);
  }
}

MonteCarloOccupancy occupancy_monte_carlo(const FiniteMdp& mdp, const Policy& policy,
                                          Index episodes, std::uint64_t seed,
                                          const MonteCarloOptions& options) {
  require_valid(mdp);
  check_policy(policy, mdp.num_states, mdp.num_actions);
  if (episodes < 2) throw UsageError("occupancy_monte_carlo: episodes must be >= 2");
  if (options.horizon_cap <= 0) throw UsageError("occupancy_monte_carlo: horizon_cap must be positive");

  const Index S = mdp.num_states;
  const Index A = mdp.num_actions;

  // Fixed reduction structure: episodes are grouped into blocks by index and
  // blocks are combined in index order, so any thread assignment yields the
  // same bits.
  constexpr Index kBlock = 1024;
  const Index num_blocks = (episodes + kBlock - 1) / kBlock;

  struct BlockAccumulator {
    Matrix sum, sum_sq;
    Real return_sum = 0, return_sum_sq = 0;
    Index truncated = 0;
  };
  std::vector<BlockAccumulator> blocks(static_cast<std::size_t>(num_blocks));

  std::atomic<Index> next_block{0};
  auto worker = [&]() {
    Matrix counts(S, A);
    for (;;) {
      const Index b = next_block.fetch_add(1);
      if (b >= num_blocks) return;
      BlockAccumulator& acc = blocks[static_cast<std::size_t>(b)];
      acc.sum = Matrix::Zero(S, A);
      acc.sum_sq = Matrix::Zero(S, A);
      const Index begin = b * kBlock;
      const Index end = std::min(episodes, begin + kBlock);
      for (Index e = begin; e < end; ++e) {
        counts.setZero();
        bool truncated = false;
        const EpisodeStats stats = accumulate_episode(
            mdp, policy, RandomStream::for_episode(seed, static_cast<std::uint64_t>(e)),
            options.horizon_cap, options.reward_noise_half_width, counts, truncated);
        acc.sum += counts;
        acc.sum_sq += counts.cwiseProduct(counts);
        acc.return_sum += stats.discounted_return;
        acc.return_sum_sq += stats.discounted_return * stats.discounted_return;
        if (truncated) ++acc.truncated;
      }
    }
  };

  const int thread_count = std::max(1, options.threads);
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  Matrix sum = Matrix::Zero(S, A);
  Matrix sum_sq = Matrix::Zero(S, A);
  Real return_sum = 0, return_sum_sq = 0;
  Index truncated = 0;
  for (const BlockAccumulator& acc : blocks) {
    sum += acc.sum;
    sum_sq += acc.sum_sq;
    return_sum += acc.return_sum;
    return_sum_sq += acc.return_sum_sq;
    truncated += acc.truncated;
  }

  const Real n = static_cast<Real>(episodes);
  Matrix mean = sum / n;
  Matrix variance = (sum_sq - n * mean.cwiseProduct(mean)) / (n - 1.0);
  variance = variance.cwiseMax(0.0);

  MonteCarloOccupancy result;
  result.standard_error = (variance / n).cwiseSqrt();
  result.episodes = episodes;
  result.truncated_episodes = truncated;
  result.mean_return = return_sum / n;
  const Real return_var =
      std::max<Real>(0.0, (return_sum_sq - n * result.mean_return * result.mean_return) / (n - 1.0));
  result.return_standard_error = std::sqrt(return_var / n);

  Real tail = 0;
  if (truncated > 0) {
    const Real fraction = static_cast<Real>(truncated) / n;
    tail = mdp.gamma < 1.0 ? fraction * std::pow(mdp.gamma, static_cast<Real>(options.horizon_cap)) /
                                 (1.0 - mdp.gamma)
                           : std::numeric_limits<Real>::infinity();
  }
  result.table = make_occupancy_table(std::move(mean), tail);
  return result;
}

Real performance_from_occupancy(const FiniteMdp& mdp, const OccupancyTable& mu) {
  return mdp.reward_mean.cwiseProduct(mu.mu).sum();
}

ConservationResidual conservation_residual(const FiniteMdp& mdp, const OccupancyTable& mu) {
  const Index S = mdp.num_states;
  const Index A = mdp.num_actions;
  Vector inflow = Vector::Zero(S);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      const Real m = mu.mu(s, a);
      if (m == 0) continue;
      inflow.noalias() += m * mdp.kernel_row(s, a).head(S).transpose();
    }
  }
  ConservationResidual result;
  result.residual = mu.state_marginal - mdp.p0.head(S) - mdp.gamma * inflow;
  result.max_norm = result.residual.size() == 0 ? 0 : result.residual.cwiseAbs().maxCoeff();
  return result;
}

FinitenessReport finiteness_check(const FiniteMdp& mdp, std::int64_t enumeration_limit) {
  require_valid(mdp);
  const Index S = mdp.num_states;
  const Index A = mdp.num_actions;

  // |A|^|S| deterministic tables, refused beyond the limit.
  std::int64_t count = 1;
  for (Index s = 0; s < S; ++s) {
    count *= static_cast<std::int64_t>(A);
    if (count > enumeration_limit) {
      throw UsageError("finiteness_check: enumeration infeasible, num_actions^num_states > " +
                       std::to_string(enumeration_limit));
    }
  }

  FinitenessReport report;
  report.uniformly_finite = true;
  std::vector<Index> actions(static_cast<std::size_t>(S), 0);
  for (;;) {
    Matrix P(S, S);
    for (Index s = 0; s < S; ++s) {
      P.row(s) = mdp.kernel_row(s, actions[static_cast<std::size_t>(s)]).head(S);
    }
    PolicyFiniteness entry;
    entry.actions = actions;
    const Real radius = spectral_radius(mdp.gamma * P);
    entry.finite = radius < 1.0 - 1e-9;
    if (entry.finite) {
      auto [marginal, residual] = solve_flow(mdp, P);
      (void)residual;
      entry.total_mass = marginal.sum();
    } else {
      report.uniformly_finite = false;
      if (!report.witness) report.witness = actions;
    }
    report.policies.push_back(std::move(entry));

    // odometer over action assignments
    Index s = 0;
    while (s < S) {
      if (++actions[static_cast<std::size_t>(s)] < A) break;
      actions[static_cast<std::size_t>(s)] = 0;
      ++s;
    }
    if (s == S) break;
  }
  return report;
}

}  // namespace occ
