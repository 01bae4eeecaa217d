#include <algorithm>
#include <cmath>
#include <numeric>

#include "natsr/error.hpp"
#include "natsr/nmd.hpp"

namespace natsr {
namespace {

int alpha_step_limit(const CurriculumConfig& c) {
  return static_cast<int>(std::lround((c.alpha_max - c.alpha_init) / c.alpha_step));
}

double window_mean(const std::deque<double>& w) {
  return std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
}

}  // namespace

double CurriculumState::alpha(const CurriculumConfig& c) const {
  if (alpha_steps >= alpha_step_limit(c)) return c.alpha_max;
  return c.alpha_init + alpha_steps * c.alpha_step;
}

bool CurriculumState::alpha_terminal(const CurriculumConfig& c) const { return alpha_steps >= alpha_step_limit(c); }

CurriculumState initial_curriculum(const CurriculumConfig& config) {
  if (config.window <= 0) throw ValueError("curriculum: window must be positive");
  if (!(config.sigma_init > 0.0) || !(config.sigma_decay > 0.0 && config.sigma_decay < 1.0)) {
    throw ValueError("curriculum: need sigma_init > 0 and 0 < sigma_decay < 1");
  }
  if (!(config.alpha_step > 0.0) || config.alpha_init < 0.0 || config.alpha_max > 1.0 ||
      config.alpha_max < config.alpha_init) {
    throw ValueError("curriculum: need 0 <= alpha_init <= alpha_max <= 1 and alpha_step > 0");
  }
  CurriculumState s;
  s.sigma = config.sigma_init;
  return s;
}

void record_validation(CurriculumState& state, const CurriculumConfig& config, double blurry_acc, double noisy_acc) {
  auto push = [&](std::deque<double>& w, double v) {
    w.push_back(v);
    while (static_cast<int>(w.size()) > config.window) w.pop_front();
  };
  push(state.blurry_window, blurry_acc);
  push(state.noisy_window, noisy_acc);
}

CurriculumEvents curriculum_update(CurriculumState& state, const CurriculumConfig& config) {
  CurriculumEvents ev;
  const bool blurry_full = static_cast<int>(state.blurry_window.size()) >= config.window;
  const bool noisy_full = static_cast<int>(state.noisy_window.size()) >= config.window;
  if (!blurry_full && !noisy_full) {
    ev.notice = "curriculum_update: windows hold " + std::to_string(state.blurry_window.size()) + " and " +
                std::to_string(state.noisy_window.size()) + " of " + std::to_string(config.window) +
                " entries; no update";
    return ev;
  }
  if (blurry_full && !state.alpha_terminal(config) && window_mean(state.blurry_window) >= config.threshold) {
    ++state.alpha_steps;
    ++state.alpha_updates;
    state.blurry_window.clear();
    ev.alpha_changed = true;
  }
  if (noisy_full && !state.sigma_terminal(config) && window_mean(state.noisy_window) >= config.threshold) {
    state.sigma *= config.sigma_decay;
    ++state.sigma_updates;
    state.noisy_window.clear();
    ev.sigma_changed = true;
  }
  return ev;
}

}  // namespace natsr
