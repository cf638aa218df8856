// Copyright 2026 The cmosq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmosq/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "cmosq/error.hpp"

namespace cmosq::fitting {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// exp(-(g t)^p) and its partials with respect to g and p.
struct Stretch {
  double e, de_dg, de_dp;
};

Stretch stretch(double g, double p, double t) {
  const double u = g * t;
  if (u <= 0.0) return {1.0, p == 1.0 ? -t : 0.0, 0.0};
  const double up = std::pow(u, p);
  const double e = std::exp(-up);
  return {e, -e * p * up / g, -e * up * std::log(u)};
}

struct Sorted {
  std::vector<double> x, y;
};

Sorted sorted_copy(std::span<const double> x, std::span<const double> y) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  Sorted s;
  for (auto i : idx) {
    s.x.push_back(x[i]);
    s.y.push_back(y[i]);
  }
  return s;
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double sum_sq_resid(Model m, std::span<const double> x, std::span<const double> y, std::span<const double> p) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - model_value(m, x[i], p);
    s += r * r;
  }
  return s;
}

// Slope of log((y - b)/a) against x over points where the ratio is usable.
std::optional<double> loglinear_rate(std::span<const double> x, std::span<const double> y, double a, double b) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double q = (y[i] - b) / a;
    if (!(q > 0.05 && q < 0.98)) continue;
    const double ly = std::log(q);
    sx += x[i];
    sy += ly;
    sxx += x[i] * x[i];
    sxy += x[i] * ly;
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return std::nullopt;
  const double slope = (n * sxy - sx * sy) / den;
  if (!(slope < 0.0)) return std::nullopt;
  return -slope;
}

std::vector<std::vector<double>> initial_guesses(Model m, const Sorted& d) {
  const auto& x = d.x;
  const auto& y = d.y;
  const std::size_t n = x.size();
  const double span = std::max(x.back() - x.front(), std::numeric_limits<double>::min());
  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  const double ymin = *ymin_it, ymax = *ymax_it;
  std::vector<std::vector<double>> out;
  std::vector<double> rates{0.5 / span, 1.0 / span, 2.0 / span, 4.0 / span};

  switch (m) {
    case Model::kRamsey:
    case Model::kCz:
    case Model::kRabi: {
      const double b = mean(y);
      const DftPeak pk = dft_peak(x, y);
      // Envelope rate from the log of the mean |y - b| in the two halves.
      const std::size_t h = n / 2;
      double e1 = 0, e2 = 0;
      for (std::size_t i = 0; i < n; ++i) (i < h ? e1 : e2) += std::abs(y[i] - b);
      e1 /= double(h);
      e2 /= double(n - h);
      if (e1 > 0 && e2 > 0 && e2 < e1) rates.push_back(std::log(e1 / e2) / (0.5 * span));
      const double amp = 0.5 * (ymax - ymin);
      // Phase of the peak refers to t = 0; the envelope enhances early points.
      for (double g : rates) {
        if (m == Model::kRabi) {
          out.push_back({amp, g, pk.frequency, pk.phase, b});
        } else {
          for (double p : {2.0, 1.0}) out.push_back({amp, g, p, pk.frequency, pk.phase, b});
        }
      }
      break;
    }
    case Model::kDecay: {
      for (double b : {y.back(), ymin, 0.5 * (ymin + y.back())}) {
        const double a = y.front() - b;
        std::vector<double> rs = rates;
        if (a != 0.0) {
          if (auto r = loglinear_rate(x, y, a, b)) rs.push_back(*r);
        }
        for (double g : rs) {
          for (double p : {2.0, 1.0}) out.push_back({a, g, p, b});
        }
      }
      break;
    }
    case Model::kRb: {
      for (double b : {y.back(), ymin, 0.5}) {
        const double a = y.front() - b;
        std::vector<double> rs{std::exp(-0.5 / span), std::exp(-1.0 / span), std::exp(-4.0 / span)};
        if (a != 0.0) {
          if (auto r = loglinear_rate(x, y, a, b)) rs.push_back(std::exp(-*r));
        }
        for (double r : rs) out.push_back({a, r, b});
      }
      break;
    }
    case Model::kFermi: {
      const double a = y.front() - y.back();
      const double b = y.back();
      const double mid = b + 0.5 * a;
      double x0 = x[n / 2];
      for (std::size_t i = 1; i < n; ++i) {
        if ((y[i - 1] - mid) * (y[i] - mid) <= 0.0 && y[i] != y[i - 1]) {
          x0 = x[i - 1] + (mid - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1]);
          break;
        }
      }
      for (double w : {span / 10.0, span / 30.0, span / 3.0}) out.push_back({x0, w, a, b});
      break;
    }
    case Model::kResonance: {
      std::vector<double> ys = y;
      std::nth_element(ys.begin(), ys.begin() + ys.size() / 2, ys.end());
      const double b = ys[ys.size() / 2];
      std::size_t k = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(y[i] - b) > std::abs(y[k] - b)) k = i;
      }
      const double a = y[k] - b;
      // Half width from the first half-maximum crossings on either side.
      std::size_t lo = k, hi = k;
      while (lo > 0 && std::abs(y[lo] - b) > 0.5 * std::abs(a)) --lo;
      while (hi + 1 < n && std::abs(y[hi] - b) > 0.5 * std::abs(a)) ++hi;
      const double hw = std::max(0.5 * (x[hi] - x[lo]), span / double(4 * n));
      for (double w : {hw, 0.5 * hw, 2.0 * hw}) out.push_back({a, x[k], w, b});
      break;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Model m) {
  switch (m) {
    case Model::kRamsey: return "RAMSEY";
    case Model::kRabi: return "RABI";
    case Model::kCz: return "CZ";
    case Model::kDecay: return "DECAY";
    case Model::kRb: return "RB";
    case Model::kFermi: return "FERMI";
    case Model::kResonance: return "RESONANCE";
  }
  return "?";
}

std::optional<Model> model_from_string(std::string_view name) {
  for (Model m : {Model::kRamsey, Model::kRabi, Model::kCz, Model::kDecay, Model::kRb, Model::kFermi,
                  Model::kResonance}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::vector<std::string> param_names(Model m) {
  switch (m) {
    case Model::kRamsey:
    case Model::kCz: return {"A", "gamma", "p", "f", "phi", "B"};
    case Model::kRabi: return {"A", "gamma", "f", "phi", "B"};
    case Model::kDecay: return {"A", "gamma", "p", "B"};
    case Model::kRb: return {"A", "r", "B"};
    case Model::kFermi: return {"x0", "w", "A", "B"};
    case Model::kResonance: return {"A", "x0", "w", "B"};
  }
  return {};
}

std::size_t param_count(Model m) { return param_names(m).size(); }

bool is_oscillation(Model m) { return m == Model::kRamsey || m == Model::kRabi || m == Model::kCz; }

void param_bounds(Model m, std::vector<double>& lower, std::vector<double>& upper) {
  const std::size_t k = param_count(m);
  lower.assign(k, -kInf);
  upper.assign(k, kInf);
  switch (m) {
    case Model::kRamsey:
    case Model::kCz:
      lower[1] = 0.0;
      lower[2] = 1.0;
      upper[2] = 3.0;
      lower[3] = 0.0;
      break;
    case Model::kRabi:
      lower[1] = 0.0;
      lower[2] = 0.0;
      break;
    case Model::kDecay:
      lower[1] = 0.0;
      lower[2] = 1.0;
      upper[2] = 3.0;
      break;
    case Model::kRb:
      lower[1] = 0.0;
      upper[1] = 1.0;
      break;
    case Model::kFermi: lower[1] = std::numeric_limits<double>::min(); break;
    case Model::kResonance: lower[2] = std::numeric_limits<double>::min(); break;
  }
}

double model_value(Model m, double x, std::span<const double> p) {
  switch (m) {
    case Model::kRamsey:
    case Model::kCz: return p[0] * stretch(p[1], p[2], x).e * std::cos(kTwoPi * p[3] * x + p[4]) + p[5];
    case Model::kRabi: return p[0] * stretch(p[1], 1.0, x).e * std::cos(kTwoPi * p[2] * x + p[3]) + p[4];
    case Model::kDecay: return p[0] * stretch(p[1], p[2], x).e + p[3];
    case Model::kRb: return p[0] * std::pow(p[1], x) + p[2];
    case Model::kFermi: {
      const double z = (x - p[0]) / p[1];
      const double s = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
      return p[2] * s + p[3];
    }
    case Model::kResonance: {
      const double q = (x - p[1]) / p[2];
      return p[0] / (1.0 + q * q) + p[3];
    }
  }
  return 0.0;
}

void model_gradient(Model m, double x, std::span<const double> p, std::span<double> g) {
  switch (m) {
    case Model::kRamsey:
    case Model::kCz: {
      const auto st = stretch(p[1], p[2], x);
      const double th = kTwoPi * p[3] * x + p[4];
      const double c = std::cos(th), s = std::sin(th);
      g[0] = st.e * c;
      g[1] = p[0] * c * st.de_dg;
      g[2] = p[0] * c * st.de_dp;
      g[3] = -p[0] * st.e * s * kTwoPi * x;
      g[4] = -p[0] * st.e * s;
      g[5] = 1.0;
      return;
    }
    case Model::kRabi: {
      const auto st = stretch(p[1], 1.0, x);
      const double th = kTwoPi * p[2] * x + p[3];
      const double c = std::cos(th), s = std::sin(th);
      g[0] = st.e * c;
      g[1] = p[0] * c * st.de_dg;
      g[2] = -p[0] * st.e * s * kTwoPi * x;
      g[3] = -p[0] * st.e * s;
      g[4] = 1.0;
      return;
    }
    case Model::kDecay: {
      const auto st = stretch(p[1], p[2], x);
      g[0] = st.e;
      g[1] = p[0] * st.de_dg;
      g[2] = p[0] * st.de_dp;
      g[3] = 1.0;
      return;
    }
    case Model::kRb: {
      g[0] = std::pow(p[1], x);
      g[1] = x == 0.0 ? 0.0 : p[0] * x * std::pow(p[1], x - 1.0);
      g[2] = 1.0;
      return;
    }
    case Model::kFermi: {
      const double z = (x - p[0]) / p[1];
      const double s = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
      const double ds = s * (1.0 - s);
      g[0] = p[2] * ds / p[1];
      g[1] = p[2] * ds * z / p[1];
      g[2] = s;
      g[3] = 1.0;
      return;
    }
    case Model::kResonance: {
      const double q = (x - p[1]) / p[2];
      const double l = 1.0 / (1.0 + q * q);
      g[0] = l;
      g[1] = 2.0 * p[0] * q * l * l / p[2];
      g[2] = 2.0 * p[0] * q * q * l * l / p[2];
      g[3] = 1.0;
      return;
    }
  }
}

double FitResult::value(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return params[i];
  }
  throw Error(ErrorCode::kInvalidArgument, "no fit parameter " + std::string(name));
}

double FitResult::error(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return stderrs[i];
  }
  throw Error(ErrorCode::kInvalidArgument, "no fit parameter " + std::string(name));
}

FitResult levenberg_marquardt(Model m, std::span<const double> x, std::span<const double> y, std::vector<double> p,
                              const LmOptions& opts, std::span<const int> fixed) {
  const std::size_t n = x.size();
  const std::size_t k = param_count(m);
  if (p.size() != k) throw Error(ErrorCode::kInvalidArgument, "initial parameter count mismatch");
  std::vector<double> lo, hi;
  param_bounds(m, lo, hi);
  auto project = [&](std::vector<double>& q) {
    for (std::size_t i = 0; i < k; ++i) q[i] = std::clamp(q[i], lo[i], hi[i]);
  };
  project(p);

  std::vector<int> free;
  for (std::size_t i = 0; i < k; ++i) {
    if (std::find(fixed.begin(), fixed.end(), int(i)) == fixed.end()) free.push_back(int(i));
  }
  const auto nf = Eigen::Index(free.size());

  Eigen::MatrixXd jac(n, nf);
  Eigen::VectorXd resid(n);
  std::vector<double> grad(k);
  auto linearize = [&](const std::vector<double>& q) {
    for (std::size_t i = 0; i < n; ++i) {
      resid(Eigen::Index(i)) = y[i] - model_value(m, x[i], q);
      model_gradient(m, x[i], q, grad);
      for (Eigen::Index c = 0; c < nf; ++c) jac(Eigen::Index(i), c) = grad[std::size_t(free[std::size_t(c)])];
    }
  };

  FitResult res;
  res.model = m;
  res.names = param_names(m);
  double lambda = opts.lambda0;
  double cost = sum_sq_resid(m, x, y, p);
  bool done = false;
  int it = 0;
  for (; it < opts.max_iterations && !done; ++it) {
    linearize(p);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * resid;
    const double rnorm = resid.norm();
    Eigen::VectorXd diag = jtj.diagonal();
    const double dmax = diag.size() ? diag.maxCoeff() : 0.0;
    for (Eigen::Index c = 0; c < nf; ++c) diag(c) = std::max(diag(c), 1e-30 * std::max(dmax, 1e-300));

    double gmax = 0.0;
    for (Eigen::Index c = 0; c < nf; ++c) {
      if (jtj(c, c) > 0.0 && rnorm > 0.0) gmax = std::max(gmax, std::abs(g(c)) / (std::sqrt(jtj(c, c)) * rnorm));
    }
    if (rnorm == 0.0 || gmax <= opts.gtol) {
      done = true;
      break;
    }

    while (true) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd delta = a.ldlt().solve(g);
      std::vector<double> trial = p;
      for (Eigen::Index c = 0; c < nf; ++c) trial[std::size_t(free[std::size_t(c)])] += delta(c);
      project(trial);
      const double trial_cost = sum_sq_resid(m, x, y, trial);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        double step = 0.0, size = 0.0;
        for (Eigen::Index c = 0; c < nf; ++c) {
          const auto idx = std::size_t(free[std::size_t(c)]);
          const double d = std::sqrt(diag(c));
          step += std::pow(d * (trial[idx] - p[idx]), 2);
          size += std::pow(d * p[idx], 2);
        }
        const double reduction = (cost - trial_cost) / cost;
        p = trial;
        cost = trial_cost;
        lambda = std::max(lambda / opts.lambda_down, 1e-15);
        if (std::sqrt(step) <= opts.xtol * (std::sqrt(size) + opts.xtol) || reduction <= opts.ftol) done = true;
        break;
      }
      lambda *= opts.lambda_up;
      if (lambda > 1e16) {
        // No descent direction survives rounding: a stationary point.
        done = true;
        break;
      }
    }
  }

  res.params = p;
  res.iterations = it;
  res.converged = done;
  res.residual_norm = std::sqrt(cost);
  res.stderrs.assign(k, 0.0);

  linearize(p);
  const double dof = double(n) - double(nf);
  const double s2 = dof > 0 ? cost / dof : 0.0;
  Eigen::VectorXd norms = jac.colwise().norm();
  Eigen::MatrixXd scaled = jac;
  for (Eigen::Index c = 0; c < nf; ++c) {
    if (norms(c) > 0.0) scaled.col(c) /= norms(c);
  }
  const Eigen::MatrixXd cov = (scaled.transpose() * scaled).completeOrthogonalDecomposition().pseudoInverse();
  for (Eigen::Index c = 0; c < nf; ++c) {
    const auto idx = std::size_t(free[std::size_t(c)]);
    res.stderrs[idx] = norms(c) > 0.0 ? std::sqrt(std::max(s2 * cov(c, c), 0.0)) / norms(c) : kInf;
  }
  return res;
}

FitResult fit(Model m, std::span<const double> x, std::span<const double> y, const FitInit& init,
              const LmOptions& opts) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "x and y lengths differ");
  const std::size_t k = param_count(m);
  if (x.size() < k + 2) {
    throw Error(ErrorCode::kInvalidArgument, std::string(to_string(m)) + " fit needs at least " +
                                                 std::to_string(k + 2) + " points");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error(ErrorCode::kInvalidArgument, "non-finite data");
  }
  const Sorted d = sorted_copy(x, y);
  const auto [lo, hi] = std::minmax_element(d.y.begin(), d.y.end());
  if (*hi - *lo <= 1e-14 * std::max(1.0, std::abs(*hi))) {
    throw Error(ErrorCode::kRankDeficient, std::string(to_string(m)) + " fit on flat data");
  }
  if (d.x.back() == d.x.front()) throw Error(ErrorCode::kRankDeficient, "all abscissae equal");

  std::vector<std::vector<double>> starts;
  if (init.p0) {
    starts.push_back(*init.p0);
  } else {
    starts = initial_guesses(m, d);
  }

  std::optional<FitResult> best;
  std::vector<int> fixed_idx;
  for (const auto& [i, v] : init.fixed) {
    if (i < 0 || std::size_t(i) >= k) throw Error(ErrorCode::kInvalidArgument, "fixed parameter index out of range");
    fixed_idx.push_back(i);
    for (auto& s : starts) s[std::size_t(i)] = v;
  }
  for (auto& s : starts) {
    FitResult r = levenberg_marquardt(m, d.x, d.y, s, opts, fixed_idx);
    if (!std::isfinite(r.residual_norm)) continue;
    const bool better = !best || (r.converged && !best->converged) ||
                        (r.converged == best->converged && r.residual_norm < best->residual_norm);
    if (better) best = std::move(r);
  }
  if (!best || !best->converged) {
    throw Error(ErrorCode::kFitDiverged, std::string(to_string(m)) + " fit did not converge in " +
                                             std::to_string(opts.max_iterations) + " iterations");
  }
  return *best;
}

DftPeak dft_peak(std::span<const double> x, std::span<const double> y, int padding) {
  const std::size_t n = x.size();
  DftPeak best;
  if (n < 2) return best;
  const double lo = *std::min_element(x.begin(), x.end());
  const double hi = *std::max_element(x.begin(), x.end());
  const double span = hi - lo;
  if (!(span > 0.0)) return best;
  const double avg = mean(y);
  // Grid step 1/(padding * span) up to the mean-spacing Nyquist frequency.
  const double df = 1.0 / (double(padding) * span * double(n) / double(n - 1));
  const double fmax = 0.5 * double(n - 1) / span;
  double best_mag = -1.0;
  for (int kk = 1; kk * df <= fmax * (1.0 + 1e-12); ++kk) {
    const double f = kk * df;
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += (y[i] - avg) * std::polar(1.0, -kTwoPi * f * x[i]);
    const double mag = std::abs(acc);
    if (mag > best_mag) {
      best_mag = mag;
      best.frequency = f;
      best.amplitude = 2.0 * mag / double(n);
      best.phase = std::arg(acc);
    }
  }
  return best;
}

double runs_test_pvalue(std::span<const double> r) {
  double n1 = 0, n2 = 0, runs = 0;
  int prev = 0;
  for (double v : r) {
    if (v == 0.0) continue;
    const int s = v > 0 ? 1 : -1;
    (s > 0 ? n1 : n2) += 1;
    if (s != prev) runs += 1;
    prev = s;
  }
  const double n = n1 + n2;
  if (n1 == 0 || n2 == 0) return n < 2 ? 1.0 : 0.0;
  const double mu = 2.0 * n1 * n2 / n + 1.0;
  const double var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n) / (n * n * (n - 1.0));
  if (var <= 0.0) return 1.0;
  const double z = (runs - mu) / std::sqrt(var);
  return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

}  // namespace cmosq::fitting
