#include "fogflow/subchannel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fogflow {

namespace {

// Classic O(n^3) shortest-augmenting-path Hungarian method on a square
// matrix. Returns the column assigned to each row.
std::vector<int> hungarian(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> col(n, -1);
  for (int j = 1; j <= n; ++j) col[p[j] - 1] = j - 1;
  return col;
}

struct Solver {
  const Eigen::MatrixXd& cost;
  int rows;
  int cols;
  int n;
  double forbidden;

  // Optimal matching honouring `fixed` (-2 free, -1 unmatched, else column).
  // Returns empty when the fixing cannot be completed.
  std::vector<int> solve(const std::vector<int>& fixed) const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const double lo = cost.minCoeff();
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) a(i, j) = cost(i, j) - lo;
    }
    for (int i = 0; i < rows; ++i) {
      if (fixed[i] == -2) continue;
      for (int j = 0; j < n; ++j) {
        const bool keep = fixed[i] == -1 ? j >= cols : j == fixed[i];
        if (!keep) a(i, j) = forbidden;
      }
      if (fixed[i] >= 0) {
        for (int r = 0; r < n; ++r) {
          if (r != i) a(r, fixed[i]) = forbidden;
        }
      }
    }
    std::vector<int> col = hungarian(a);
    for (int i = 0; i < n; ++i) {
      if (a(i, col[i]) >= forbidden) return {};
    }
    col.resize(rows);
    for (int& c : col) {
      if (c >= cols) c = -1;
    }
    return col;
  }

  double total(const std::vector<int>& col) const {
    double sum = 0.0;
    for (int i = 0; i < rows; ++i) {
      if (col[i] >= 0) sum += cost(i, col[i]);
    }
    return sum;
  }
};

}  // namespace

Eigen::MatrixXd interference_matrix(const Scenario& scenario, const Trrg& trrg,
                                    const std::vector<int>& active_arcs, int k) {
  const double t = trrg.frame(k).midpoint();
  const double noise = scenario.channel.noise_power();
  Eigen::MatrixXd m(active_arcs.size(), scenario.avs.size());
  for (std::size_t r = 0; r < active_arcs.size(); ++r) {
    const Arc& arc = trrg.arcs().at(active_arcs[r]);
    const Point rx = position_at(scenario.vehicles[trrg.vertices()[arc.head].vehicle], t);
    for (std::size_t c = 0; c < scenario.avs.size(); ++c) {
      m(r, c) = pathloss_gain(scenario.channel, av_tx_at(scenario.avs[c], t), rx) / noise;
    }
  }
  return m;
}

Assignment assign(const Eigen::MatrixXd& cost) {
  Assignment out;
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  out.column_of_row.assign(rows, -1);
  if (rows == 0 || cols == 0) return out;
  if (!cost.allFinite()) throw std::invalid_argument("assign: non-finite cost");

  const int n = std::max(rows, cols);
  const double range = cost.maxCoeff() - cost.minCoeff();
  Solver s{cost, rows, cols, n, 4.0 * (range + 1.0) * (n + 1)};

  std::vector<int> fixed(rows, -2);
  std::vector<int> current = s.solve(fixed);
  double best = s.total(current);
  auto close = [&](double c) { return c <= best + 1e-9 * std::max(1.0, std::abs(best)); };

  // Fix rows one at a time to the smallest column that still admits an
  // optimal completion.
  std::vector<char> taken(cols, 0);
  for (int i = 0; i < rows; ++i) {
    bool done = false;
    for (int j = 0; j <= cols && !done; ++j) {
      const int choice = j < cols ? j : -1;
      if (choice >= 0 && taken[choice]) continue;
      if (choice == -1 && rows <= cols) continue;
      if (current[i] == choice) {
        done = true;
        break;
      }
      fixed[i] = choice;
      std::vector<int> trial = s.solve(fixed);
      if (!trial.empty() && close(s.total(trial))) {
        current = std::move(trial);
        best = std::min(best, s.total(current));
        done = true;
      }
    }
    fixed[i] = current[i];
    if (current[i] >= 0) taken[current[i]] = 1;
  }
  out.column_of_row = current;
  out.cost = s.total(current);
  return out;
}

SubchannelPlan assign_subchannels(const Scenario& scenario, const Trrg& trrg,
                                  const LinkSchedule& schedule) {
  SubchannelPlan plan(schedule.size());
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    plan[k].assign(schedule[k].size(), -1);
    if (schedule[k].empty() || scenario.avs.empty()) continue;
    const auto m = interference_matrix(scenario, trrg, schedule[k], static_cast<int>(k) + 1);
    plan[k] = assign(m).column_of_row;
  }
  return plan;
}

}  // namespace fogflow
