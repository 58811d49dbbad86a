#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

namespace fogflow {

// Ellipsoid {g : (g - center)^T (size * covariance)^-1 (g - center) <= 1},
// equivalently {center + shape * u : |u| <= 1}.
struct UncertaintySet {
  Eigen::VectorXd center;
  Eigen::MatrixXd covariance;  // after regularization, if any was needed
  Eigen::MatrixXd shape;       // sqrt(size) * chol(covariance)
  double size = 0.0;           // z_e
  bool regularized = false;
};

// Requires at least two finite samples of equal dimension.
UncertaintySet learn_uncertainty_set(const std::vector<Eigen::VectorXd>& samples,
                                     double epsilon);

// Squared Mahalanobis distance t(xi) under the set's covariance.
double mahalanobis(const UncertaintySet& set, const Eigen::VectorXd& xi);
bool contains(const UncertaintySet& set, const Eigen::VectorXd& xi);

// A set with zero spread around `center` (nominal constraint).
UncertaintySet nominal_set(const Eigen::Vector2d& center);

// Robust AV constraint for the 2-D set over (g_av / gamma_th, g_cross):
// p^T center - |B^T p| - noise with p = (p_av, -p_link).
double soc_margin(double p_av, double p_link, const UncertaintySet& set, double noise);
bool soc_feasible(double p_av, double p_link, const UncertaintySet& set, double noise);

// Largest p_link in [0, cap] keeping soc_feasible, 0 when there is none.
// `cap` may be infinite.
double max_link_power(double p_av, const UncertaintySet& set, double noise, double cap);

// Throws std::invalid_argument unless 0 < epsilon < 1.
std::pair<double, double> split_epsilon(double epsilon);

struct QuantileGain {
  double gain = 0.0;
  double epsilon = 0.0;
};

// The floor(eps * D) + 1 -th smallest sample.
QuantileGain quantile_gain(std::vector<double> samples, double epsilon);

void write_samples_csv(std::ostream& out, const std::vector<Eigen::VectorXd>& samples);
std::vector<Eigen::VectorXd> read_samples_csv(std::istream& in);
void save_samples(const std::filesystem::path& path, const std::vector<Eigen::VectorXd>& samples);
std::vector<Eigen::VectorXd> load_samples(const std::filesystem::path& path);

}  // namespace fogflow
