#include "fogflow/robust.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fogflow {

namespace {

// Rank of the order statistic ceil(q * D), guarded against q * D landing a
// hair above an integer.
std::size_t ceil_rank(double q, std::size_t d) {
  const double x = q * static_cast<double>(d);
  auto k = static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
  return std::clamp<std::size_t>(k, 1, d);
}

Eigen::LLT<Eigen::MatrixXd> factor(Eigen::MatrixXd& cov, const Eigen::VectorXd& center,
                                   bool& regularized) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt;
  const auto dim = static_cast<double>(cov.rows());
  double delta = 1e-12 * cov.trace() / dim;
  if (!(delta > 0.0)) delta = 1e-12 * center.squaredNorm() / dim;
  if (!(delta > 0.0)) delta = std::numeric_limits<double>::min();
  regularized = true;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::MatrixXd trial = cov + delta * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    llt.compute(trial);
    if (llt.info() == Eigen::Success) {
      cov = trial;
      return llt;
    }
    delta *= 10.0;
  }
  throw std::runtime_error("covariance could not be regularized");
}

}  // namespace

UncertaintySet learn_uncertainty_set(const std::vector<Eigen::VectorXd>& samples,
                                     double epsilon) {
  if (samples.size() < 2) throw std::invalid_argument("need at least 2 samples");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  const auto dim = samples.front().size();
  const auto d = static_cast<double>(samples.size());
  UncertaintySet set;
  set.center = Eigen::VectorXd::Zero(dim);
  for (const auto& xi : samples) {
    if (xi.size() != dim) throw std::invalid_argument("samples differ in dimension");
    if (!xi.allFinite()) throw std::invalid_argument("non-finite sample");
    set.center += xi;
  }
  set.center /= d;
  set.covariance = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& xi : samples) {
    const Eigen::VectorXd e = xi - set.center;
    set.covariance.noalias() += e * e.transpose();
  }
  set.covariance /= d;

  auto llt = factor(set.covariance, set.center, set.regularized);
  const Eigen::MatrixXd lower = llt.matrixL();
  std::vector<double> t;
  t.reserve(samples.size());
  for (const auto& xi : samples) {
    t.push_back(lower.triangularView<Eigen::Lower>().solve(xi - set.center).squaredNorm());
  }
  const std::size_t k = ceil_rank(1.0 - epsilon, t.size());
  std::nth_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(k - 1), t.end());
  set.size = t[k - 1];
  set.shape = std::sqrt(set.size) * lower;
  return set;
}

double mahalanobis(const UncertaintySet& set, const Eigen::VectorXd& xi) {
  Eigen::LLT<Eigen::MatrixXd> llt(set.covariance);
  if (llt.info() != Eigen::Success) throw std::runtime_error("covariance is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  return lower.triangularView<Eigen::Lower>().solve(xi - set.center).squaredNorm();
}

bool contains(const UncertaintySet& set, const Eigen::VectorXd& xi) {
  return mahalanobis(set, xi) <= set.size;
}

UncertaintySet nominal_set(const Eigen::Vector2d& center) {
  UncertaintySet set;
  set.center = center;
  set.covariance = Eigen::MatrixXd::Zero(2, 2);
  set.shape = Eigen::MatrixXd::Zero(2, 2);
  set.size = 0.0;
  return set;
}

double soc_margin(double p_av, double p_link, const UncertaintySet& set, double noise) {
  const Eigen::Vector2d p(p_av, -p_link);
  return p.dot(set.center) - (set.shape.transpose() * p).norm() - noise;
}

bool soc_feasible(double p_av, double p_link, const UncertaintySet& set, double noise) {
  return soc_margin(p_av, p_link, set, noise) >= 0.0;
}

double max_link_power(double p_av, const UncertaintySet& set, double noise, double cap) {
  if (p_av <= 0.0 || cap < 0.0) return 0.0;
  auto f = [&](double q) { return soc_margin(p_av, q, set, noise); };

  const double g1 = set.center(0);
  const double g2 = set.center(1);
  const Eigen::Vector2d c = p_av * set.shape.row(0).transpose();
  const Eigen::Vector2d d = set.shape.row(1).transpose();
  // f(q) = a - q g2 - |c - q d| is concave; the feasible q form an interval.
  const double a = p_av * g1 - noise;
  const double slope_inf = g2 + d.norm();  // f(q) ~ -q * slope_inf

  if (std::isinf(cap)) {
    if (slope_inf <= 0.0) return f(0.0) >= 0.0 ? cap : 0.0;
  } else if (f(cap) >= 0.0) {
    return cap;
  }

  // Candidate roots of (a - q g2)^2 = |c - q d|^2 with a - q g2 >= 0.
  const double qa = g2 * g2 - d.squaredNorm();
  const double qb = -2.0 * a * g2 + 2.0 * c.dot(d);
  const double qc = a * a - c.squaredNorm();
  std::vector<double> roots;
  if (qa == 0.0) {
    if (qb != 0.0) roots.push_back(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double s = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
      if (s != 0.0) {
        roots.push_back(s / qa);
        roots.push_back(qc / s);
      } else {
        roots.push_back(0.0);
      }
    }
  }
  const double upper = std::isinf(cap) ? std::numeric_limits<double>::max() : cap;
  double hi = -1.0;
  for (double r : roots) {
    if (!std::isfinite(r) || r < 0.0 || r > upper) continue;
    if (a - r * g2 < -1e-12 * std::max(std::abs(a), noise)) continue;
    hi = std::max(hi, r);
  }

  // A feasible anchor below the root, for polishing.
  double lo = -1.0;
  if (f(0.0) >= 0.0) {
    lo = 0.0;
  } else {
    for (double r : roots) {
      if (r > 0.0 && r <= upper && f(r) >= 0.0) lo = std::max(lo, r);
    }
    if (lo < 0.0 && roots.size() == 2) {
      const double mid = 0.5 * (roots[0] + roots[1]);
      if (mid >= 0.0 && mid <= upper && f(mid) >= 0.0) lo = mid;
    }
  }
  if (lo < 0.0) return 0.0;
  if (hi < lo) {
    // Rounding hid a (double) root; bracket it from above instead.
    hi = std::max(lo, 1.0);
    for (int k = 0; k < 2100 && f(hi) >= 0.0 && hi < upper; ++k) hi = std::min(upper, 2.0 * hi);
    if (f(hi) >= 0.0) return hi;
  }
  if (f(hi) >= 0.0) return hi;
  // Squaring lost precision; bisect between the anchor and the root.
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

std::pair<double, double> split_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  return {epsilon / 2.0, epsilon / 2.0};
}

QuantileGain quantile_gain(std::vector<double> samples, double epsilon) {
  if (samples.empty()) throw std::invalid_argument("quantile_gain of empty sample");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1)");
  const double x = epsilon * static_cast<double>(samples.size());
  auto idx = static_cast<std::size_t>(std::floor(x + 1e-9 * std::max(1.0, x)));
  idx = std::min(idx, samples.size() - 1);
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(idx),
                   samples.end());
  return {samples[idx], epsilon};
}

void write_samples_csv(std::ostream& out, const std::vector<Eigen::VectorXd>& samples) {
  char buf[32];
  for (const auto& xi : samples) {
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", xi(i));
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

std::vector<Eigen::VectorXd> read_samples_csv(std::istream& in) {
  std::vector<Eigen::VectorXd> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw std::runtime_error("samples line " + std::to_string(line_no) + ": bad number");
      }
    }
    if (!out.empty() && static_cast<Eigen::Index>(values.size()) != out.front().size()) {
      throw std::runtime_error("samples line " + std::to_string(line_no) + ": wrong width");
    }
    out.emplace_back(Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  return out;
}

void save_samples(const std::filesystem::path& path, const std::vector<Eigen::VectorXd>& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_samples_csv(out, samples);
}

std::vector<Eigen::VectorXd> load_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_samples_csv(in);
}

}  // namespace fogflow
