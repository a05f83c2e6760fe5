#pragma once

// Joint path simulation of X_t = int_{-inf}^t g(t-s) dL_s on a fixed noise
// lattice, plus the exact autoregressive recursion for the stable OU process.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "levyma/errors.hpp"
#include "levyma/kernels.hpp"
#include "levyma/quadrature.hpp"
#include "levyma/rng.hpp"

namespace levyma {

struct ProcessModel {
  LevyModel levy;
  KernelSpec kernel;
};

/// Noise lattice: step 1/steps_per_unit, kernel truncated at `horizon`.
struct SimGrid {
  std::size_t steps_per_unit = 16;
  double horizon = 64.0;
  std::size_t n = 1;

  double step() const noexcept { return 1.0 / double(steps_per_unit); }
  std::size_t horizon_cells() const noexcept {
    return static_cast<std::size_t>(std::llround(horizon * double(steps_per_unit)));
  }
};

inline void validate(const SimGrid& grid) {
  if (grid.steps_per_unit < 1) throw ParameterError("SimGrid: steps_per_unit must be >= 1");
  if (!(grid.horizon >= 1.0)) throw ParameterError("SimGrid: horizon must be >= 1");
  const double cells = grid.horizon * double(grid.steps_per_unit);
  if (std::abs(cells - std::round(cells)) > 1e-9) throw ParameterError("SimGrid: horizon must be a multiple of the step");
  if (grid.n < 1) throw ParameterError("SimGrid: n must be >= 1");
}

/// Exponent p for which a cell's contribution is matched exactly: beta for
/// stable noise, 2 (variance) for tempered-stable noise.
inline double scale_power(const LevyModel& levy) {
  if (const auto* s = std::get_if<SymmetricStable>(&levy)) return s->beta;
  return 2.0;
}

/// int_M^inf |g|^p / int_0^inf |g|^p with p = scale_power(levy).
inline double tail_truncation_ratio(const ProcessModel& model, double horizon) {
  const double p = scale_power(model.levy);
  const double total = kernel_power_integral(model.kernel, p).value;
  if (total == 0.0) return 0.0;
  return kernel_power_tail(model.kernel, p, horizon) / total;
}

inline void validate(const ProcessModel& model) {
  validate(model.levy);
  const double p = scale_power(model.levy);
  const double alpha = kernel_decay_exponent(model.kernel);
  const double gamma = kernel_gamma(model.kernel);
  if (!kernel_is_zero(model.kernel) && (alpha * p <= 1.0 || gamma * p <= -1.0)) {
    throw ModelInvalidError("ProcessModel: int |g|^" + std::to_string(p) + " diverges");
  }
  const quad::Result r = kernel_power_integral(model.kernel, p, 1e-8);
  if (!r.converged || !std::isfinite(r.value)) {
    throw ModelInvalidError("ProcessModel: int |g|^" + std::to_string(p) + " did not converge");
  }
}

/// sigma_g = sigma_L (int_0^inf |g|^beta)^{1/beta}, the exact scale of X_t.
inline double marginal_scale(const ProcessModel& model, double tol = 1e-10) {
  const auto* s = std::get_if<SymmetricStable>(&model.levy);
  if (s == nullptr) throw WrongVariantError("marginal_scale: needs SymmetricStable noise");
  if (kernel_is_zero(model.kernel)) return 0.0;
  const double alpha = kernel_decay_exponent(model.kernel);
  const double gamma = kernel_gamma(model.kernel);
  if (alpha * s->beta <= 1.0 || gamma * s->beta <= -1.0)
    throw ModelInvalidError("marginal_scale: int |g|^beta diverges");
  const quad::Result r = kernel_power_integral(model.kernel, s->beta, tol);
  if (!r.converged || !std::isfinite(r.value))
    throw ModelInvalidError("marginal_scale: int |g|^beta did not converge (estimate " + std::to_string(r.value) + ")");
  return s->scale * std::pow(r.value, 1.0 / s->beta);
}

/// Smallest horizon (a multiple of the step, at least 1) whose tail-truncation
/// ratio is below tol. PowerLaw uses the closed form ceil(tol^{-1/(alpha p - 1)}).
inline double default_horizon(const ProcessModel& model, std::size_t steps_per_unit, double tol = 1e-3) {
  const double dx = 1.0 / double(steps_per_unit);
  auto snap = [&](double m) { return std::max(1.0, std::ceil(m / dx - 1e-9) * dx); };
  if (const auto* dm = std::get_if<DiscreteMA>(&model.kernel)) return snap(double(std::max<std::size_t>(dm->b.size(), 1)));
  if (kernel_is_zero(model.kernel)) return 1.0;
  if (const auto* pl = std::get_if<PowerLaw>(&model.kernel)) {
    const double p = scale_power(model.levy);
    return snap(std::ceil(std::pow(tol, -1.0 / (pl->alpha * p - 1.0))));
  }
  double hi = 1.0;
  while (tail_truncation_ratio(model, hi) >= tol) {
    hi *= 2.0;
    if (hi > 1e9) throw ModelInvalidError("default_horizon: kernel tail too heavy");
  }
  double lo = hi / 2.0;
  if (hi == 1.0) return 1.0;
  while (hi - lo > 1.0) {
    const double mid = std::floor(0.5 * (lo + hi));
    (tail_truncation_ratio(model, mid) >= tol ? lo : hi) = mid;
  }
  return snap(hi);
}

/// Effective weight w_i for lattice cell [i dt, (i+1) dt) of the kernel.
/// Left-point values, except that the first cell and cells starting at a
/// kernel singularity carry the cell-exact weight
/// sign * (dt^{-1} int_cell |g|^p)^{1/p}. Step kernels use b exactly.
inline std::vector<double> lattice_weights(const ProcessModel& model, const SimGrid& grid) {
  const std::size_t cells = grid.horizon_cells();
  const double dt = grid.step();
  std::vector<double> w(cells, 0.0);
  if (const auto* dm = std::get_if<DiscreteMA>(&model.kernel)) {
    for (std::size_t i = 0; i < cells; ++i) {
      const std::size_t j = i / grid.steps_per_unit;
      w[i] = j < dm->b.size() ? dm->b[j] : 0.0;
    }
    return w;
  }
  if (kernel_is_zero(model.kernel)) return w;
  const double p = scale_power(model.levy);
  const auto sing = kernel_singularities(model.kernel);
  auto cell_exact = [&](std::size_t i) {
    const double a = double(i) / double(grid.steps_per_unit);
    const double b = a + dt;
    double exponent = 0.0;
    for (const auto& s : sing)
      if (std::abs(s.point - a) < 1e-12) exponent = s.exponent * p;
    auto f = [&](double delta) { return std::pow(std::abs(kernel_eval_at(model.kernel, a, delta)), p); };
    const quad::Result r = quad::integrate_left_singular(f, 0.0, dt, exponent, {1e-12, 0.0, 100000});
    const double mid = kernel_eval(model.kernel, 0.5 * (a + b));
    const double mag = std::pow(r.value / dt, 1.0 / p);
    return mid < 0.0 ? -mag : mag;
  };
  for (std::size_t i = 0; i < cells; ++i) w[i] = kernel_eval(model.kernel, double(i) * dt);
  if (cells > 0) w[0] = cell_exact(0);
  for (const auto& s : sing) {
    const double idx = s.point / dt;
    if (idx > 0.5 && std::abs(idx - std::round(idx)) < 1e-9 && std::size_t(std::llround(idx)) < cells)
      w[std::size_t(std::llround(idx))] = cell_exact(std::size_t(std::llround(idx)));
  }
  return w;
}

inline constexpr std::size_t kLatticeFftThreshold = 128;

inline double lattice_direct_work(const SimGrid& grid, std::size_t n) {
  const double m = double(grid.steps_per_unit);
  return double(n) * m * grid.horizon * m;
}

inline double lattice_fft_work(const SimGrid& grid, std::size_t n) {
  const double len = double(n) * double(grid.steps_per_unit) + grid.horizon * double(grid.steps_per_unit);
  return 4.0 * len * std::max(1.0, std::log2(len));
}

/// FFT convolution is used once the kernel spans more than 128 cells and
/// is cheaper than direct summation; the choice depends on (grid, n) only.
inline bool lattice_uses_fft(const SimGrid& grid, std::size_t n) {
  return grid.horizon * double(grid.steps_per_unit) > double(kLatticeFftThreshold) &&
         lattice_fft_work(grid, n) < lattice_direct_work(grid, n);
}

/// Operation count for one path of length n under the chosen method.
inline double lattice_work_estimate(const SimGrid& grid, std::size_t n) {
  return lattice_uses_fft(grid, n) ? lattice_fft_work(grid, n) : lattice_direct_work(grid, n);
}

/// Generates the i.i.d. lattice increments consumed by one path of length n:
/// count = n m + cells - m, drawn in lattice order from `stream`.
class NoiseSource {
 public:
  NoiseSource(const LevyModel& levy, double dt) : levy_(levy), dt_(dt) {
    if (std::holds_alternative<TemperedStable>(levy_)) tempered_.emplace_back(levy_);
    if (const auto* s = std::get_if<SymmetricStable>(&levy_)) stable_scale_ = s->scale * std::pow(dt, 1.0 / s->beta);
  }

  void fill(std::vector<double>& out, std::size_t count, RngStream& stream) const {
    out.resize(count);
    if (const auto* s = std::get_if<SymmetricStable>(&levy_)) {
      for (auto& v : out) v = sample_symmetric_stable(stream, s->beta, stable_scale_);
    } else {
      for (auto& v : out) v = tempered_.front().increment(stream, dt_);
    }
  }

 private:
  LevyModel levy_;
  double dt_;
  double stable_scale_ = 0.0;
  std::vector<TemperedStableSampler> tempered_;
};

/// Reusable lattice simulator for one (model, grid step, horizon).
class LatticeSimulator {
 public:
  static constexpr double kDefaultWorkBudget = 1e12;

  LatticeSimulator(ProcessModel model, SimGrid grid, double work_budget = kDefaultWorkBudget)
      : model_(std::move(model)), grid_(grid), work_budget_(work_budget), noise_(model_.levy, grid.step()) {
    validate(grid_);
    validate(model_);
    weights_ = lattice_weights(model_, grid_);
    tail_ratio_ = tail_truncation_ratio(model_, grid_.horizon);
  }

  const SimGrid& grid() const noexcept { return grid_; }
  const ProcessModel& model() const noexcept { return model_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double tail_truncation() const noexcept { return tail_ratio_; }

  std::size_t noise_count(std::size_t n) const noexcept {
    return n * grid_.steps_per_unit + weights_.size() - grid_.steps_per_unit;
  }

  void draw_noise(std::vector<double>& noise, std::size_t n, RngStream& stream) const {
    noise_.fill(noise, noise_count(n), stream);
  }

  bool uses_fft(std::size_t n) const noexcept { return lattice_uses_fft(grid_, n); }

  double work(std::size_t n) const noexcept { return lattice_work_estimate(grid_, n); }

  /// X_t = sum_i w_i eps[t m - i] for t = 1..n, noise index shifted to start at 0.
  std::vector<double> convolve(const std::vector<double>& noise, std::size_t n) const {
    if (uses_fft(n)) return convolve_fft(noise, n);
    const std::size_t m = grid_.steps_per_unit;
    const std::size_t cells = weights_.size();
    std::vector<double> x(n);
    for (std::size_t t = 1; t <= n; ++t) {
      const std::size_t top = t * m - m + cells - 1;  // index of eps[t m]
      double acc = 0.0;
      for (std::size_t i = 0; i < cells; ++i) acc += weights_[i] * noise[top - i];
      x[t - 1] = acc;
    }
    return x;
  }

  std::vector<double> path(std::size_t n, RngStream& stream) const {
    if (work(n) > work_budget_) {
      throw ResourceError("simulate_path: work estimate " + std::to_string(work(n)) + " exceeds budget " +
                          std::to_string(work_budget_));
    }
    std::vector<double> noise;
    draw_noise(noise, n, stream);
    return convolve(noise, n);
  }

 private:
  // Smallest 2^a 3^b 5^c >= v.
  static std::size_t fft_size(std::size_t v) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t a = 1; a < 2 * v + 2; a *= 2)
      for (std::size_t b = a; b < 2 * v + 2; b *= 3)
        for (std::size_t c = b; c < 2 * v + 2; c *= 5)
          if (c >= v) best = std::min(best, c);
    return best;
  }

  // Circular convolution of length L >= noise length: wrap-around only
  // touches outputs below cells - 1, which are never read.
  std::vector<double> convolve_fft(const std::vector<double>& noise, std::size_t n) const {
    const std::size_t m = grid_.steps_per_unit;
    const std::size_t cells = weights_.size();
    const std::size_t L = fft_size(noise.size());
    Eigen::FFT<double> fft;
    std::shared_ptr<const std::vector<std::complex<double>>> wf;
    {
      std::lock_guard lock(cache_mutex_);
      auto& slot = weight_spectra_[L];
      if (!slot) {
        std::vector<double> padded(L, 0.0);
        std::copy(weights_.begin(), weights_.end(), padded.begin());
        auto spec = std::make_shared<std::vector<std::complex<double>>>();
        fft.fwd(*spec, padded);
        slot = spec;
      }
      wf = slot;
    }
    std::vector<double> padded(L, 0.0);
    std::copy(noise.begin(), noise.end(), padded.begin());
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, padded);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= (*wf)[i];
    std::vector<double> full;
    fft.inv(full, spec);
    std::vector<double> x(n);
    for (std::size_t t = 1; t <= n; ++t) x[t - 1] = full[t * m - m + cells - 1];
    return x;
  }

  ProcessModel model_;
  SimGrid grid_;
  double work_budget_;
  NoiseSource noise_;
  std::vector<double> weights_;
  double tail_ratio_ = 0.0;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::size_t, std::shared_ptr<const std::vector<std::complex<double>>>> weight_spectra_;
};

/// One path (X_1, ..., X_n) on the noise lattice described by grid.
inline std::vector<double> simulate_path(const ProcessModel& model, const SimGrid& grid, RngStream& stream,
                                         double work_budget = LatticeSimulator::kDefaultWorkBudget) {
  if (lattice_work_estimate(grid, grid.n) > work_budget) throw ResourceError("simulate_path: work estimate exceeds budget");
  return LatticeSimulator(model, grid, work_budget).path(grid.n, stream);
}

inline double ou_innovation_scale(double lambda, double beta, double sigma_L) {
  return sigma_L * std::pow(-std::expm1(-lambda * beta) / (lambda * beta), 1.0 / beta);
}

inline double ou_stationary_scale(double lambda, double beta, double sigma_L) {
  return sigma_L * std::pow(lambda * beta, -1.0 / beta);
}

/// Stable OU at integer times: stationary start, then
/// X_{t+1} = e^{-lambda} X_t + xi_t. Exact in law.
inline std::vector<double> simulate_ou_exact(double lambda, double beta, double sigma_L, std::size_t n,
                                             RngStream& stream) {
  if (!(lambda > 0.0)) throw ParameterError("simulate_ou_exact: lambda must be positive");
  if (!(beta > 0.0 && beta < 2.0)) throw ParameterError("simulate_ou_exact: beta must lie in (0, 2)");
  if (!(sigma_L > 0.0)) throw ParameterError("simulate_ou_exact: sigma_L must be positive");
  std::vector<double> x(n);
  if (n == 0) return x;
  const double decay = std::exp(-lambda);
  const double innov = ou_innovation_scale(lambda, beta, sigma_L);
  x[0] = sample_symmetric_stable(stream, beta, ou_stationary_scale(lambda, beta, sigma_L));
  for (std::size_t t = 1; t < n; ++t) x[t] = decay * x[t - 1] + sample_symmetric_stable(stream, beta, innov);
  return x;
}

/// Draws a path of the requested length from a stream.
using PathSampler = std::function<std::vector<double>(std::size_t n, RngStream& stream)>;

/// Exact OU recursion when the model is an OU kernel with stable noise and
/// `prefer_exact` is set, the lattice scheme otherwise.
inline PathSampler make_path_sampler(const ProcessModel& model, const SimGrid& grid, bool prefer_exact = true,
                                     double work_budget = LatticeSimulator::kDefaultWorkBudget) {
  const auto* ou = std::get_if<OuExponential>(&model.kernel);
  const auto* st = std::get_if<SymmetricStable>(&model.levy);
  if (prefer_exact && ou != nullptr && st != nullptr) {
    validate(model.levy);
    const double lambda = ou->lambda, beta = st->beta, scale = st->scale;
    return [=](std::size_t n, RngStream& s) { return simulate_ou_exact(lambda, beta, scale, n, s); };
  }
  auto sim = std::make_shared<LatticeSimulator>(model, grid, work_budget);
  return [sim](std::size_t n, RngStream& s) { return sim->path(n, s); };
}

}  // namespace levyma
