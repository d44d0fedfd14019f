#include "occ/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace occ {

namespace {

void check_row(const Eigen::Ref<const Vector>& row, const std::string& location,
               ValidationReport& report) {
  for (Index i = 0; i < row.size(); ++i) {
    if (row[i] < 0 || !std::isfinite(row[i])) {
      report.violations.push_back(
          {location + "[" + std::to_string(i) + "]", "negative or non-finite probability",
           std::abs(row[i])});
    }
  }
  const Real gap = std::abs(row.sum() - 1.0);
  if (!(gap <= kRowSumTolerance)) {
    report.violations.push_back({location, "row sum", gap});
  }
}

}  // namespace

ValidationReport validate_mdp(const FiniteMdp& mdp) {
  ValidationReport report;
  const Index S = mdp.num_states;
  const Index A = mdp.num_actions;

  if (S < 1) report.violations.push_back({"num_states", "must be positive", static_cast<Real>(S)});
  if (A < 1) report.violations.push_back({"num_actions", "must be positive", static_cast<Real>(A)});
  if (S >= 1 && A >= 1) {
    if (mdp.p0.size() != S + 1) {
      report.violations.push_back({"p0", "length must be num_states + 1",
                                   static_cast<Real>(mdp.p0.size())});
    }
    if (mdp.kernel.rows() != S * A || mdp.kernel.cols() != S + 1) {
      report.violations.push_back({"kernel", "shape must be (num_states * num_actions) x (num_states + 1)",
                                   static_cast<Real>(mdp.kernel.rows())});
    }
    if (mdp.reward_mean.rows() != S || mdp.reward_mean.cols() != A) {
      report.violations.push_back({"reward_mean", "shape must be num_states x num_actions",
                                   static_cast<Real>(mdp.reward_mean.rows())});
    }
  }
  if (!report.violations.empty()) {
    report.ok = false;
    return report;  // shape is wrong; entry checks below would index out of range
  }

  check_row(mdp.p0, "p0", report);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      check_row(mdp.kernel_row(s, a).transpose(),
                "kernel[" + std::to_string(s) + "][" + std::to_string(a) + "]", report);
    }
  }

  if (mdp.reward_bound < 0 || !std::isfinite(mdp.reward_bound)) {
    report.violations.push_back({"reward_bound", "must be nonnegative", mdp.reward_bound});
  }
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      const Real r = mdp.reward_mean(s, a);
      if (!std::isfinite(r) || std::abs(r) > mdp.reward_bound) {
        report.violations.push_back(
            {"reward_mean[" + std::to_string(s) + "][" + std::to_string(a) + "]",
             "exceeds reward_bound", std::abs(r) - mdp.reward_bound});
      }
    }
  }

  if (!(mdp.gamma >= 0.0 && mdp.gamma <= 1.0)) {
    const Real excess = mdp.gamma > 1.0 ? mdp.gamma - 1.0 : -mdp.gamma;
    report.violations.push_back({"gamma", "gamma range", excess});
  }

  report.ok = report.violations.empty();
  return report;
}

void require_valid(const FiniteMdp& mdp) {
  const ValidationReport report = validate_mdp(mdp);
  if (report.ok) return;
  std::ostringstream msg;
  msg << "invalid MDP:";
  const std::size_t shown = std::min<std::size_t>(report.violations.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    const Violation& v = report.violations[i];
    msg << " [" << v.location << ": " << v.description << " (" << v.magnitude << ")]";
  }
  if (report.violations.size() > shown) {
    msg << " and " << report.violations.size() - shown << " more";
  }
  throw ValidationError(msg.str());
}

std::pair<Real, StateOrTerminal> sample_transition(const FiniteMdp& mdp, Index s, Index a,
                                                   RandomStream& rng,
                                                   Real reward_noise_half_width) {
  if (s < 0 || s >= mdp.num_states) throw std::out_of_range("state index out of range");
  if (a < 0 || a >= mdp.num_actions) throw std::out_of_range("action index out of range");

  Real reward = mdp.reward_mean(s, a);
  if (reward_noise_half_width > 0) {
    reward += rng.uniform(-reward_noise_half_width, reward_noise_half_width);
    reward = std::clamp(reward, -mdp.reward_bound, mdp.reward_bound);
  }

  const Index next = rng.categorical(mdp.kernel_row(s, a).transpose());
  if (next == mdp.terminal_slot()) return {reward, StateOrTerminal::terminal()};
  return {reward, StateOrTerminal::state(next)};
}

StateOrTerminal sample_initial(const FiniteMdp& mdp, RandomStream& rng) {
  const Index s = rng.categorical(mdp.p0);
  if (s == mdp.terminal_slot()) return StateOrTerminal::terminal();
  return StateOrTerminal::state(s);
}

}  // namespace occ
