#include "fogflow/flow.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <queue>

namespace fogflow {

namespace {

constexpr double kE = std::numbers::e;

bool usable_for(const Trrg& g, const Arc& a, int task, const std::vector<double>& caps) {
  const int delay = g.task_delay(task);
  switch (a.kind) {
    case ArcKind::kPerception:
      return a.task == task && a.frame <= delay;
    case ArcKind::kCommunication:
    case ArcKind::kCarry:
      return a.frame < delay && caps[a.id] > 0.0;
    case ArcKind::kComputing:
      return caps[a.id] > 0.0;
  }
  return false;
}

}  // namespace

std::string_view to_string(RowClass c) {
  switch (c) {
    case RowClass::kNonnegativity:
      return "nonnegativity";
    case RowClass::kArcCapacity:
      return "arc capacity";
    case RowClass::kCompute:
      return "compute capacity";
    case RowClass::kBsRate:
      return "base-station rate";
  }
  return "?";
}

FlowProgram build_program(const Trrg& trrg, const std::vector<double>& capacities,
                          const std::vector<TaskBs>& bs, const FlowParams& params) {
  if (capacities.size() != trrg.arcs().size()) {
    throw std::invalid_argument("build_program: capacity missing for some arcs");
  }
  for (const auto& a : trrg.arcs()) {
    const double c = capacities[a.id];
    if (std::isnan(c) || c < 0.0) {
      throw std::invalid_argument("build_program: invalid capacity on arc " + std::to_string(a.id));
    }
    if (a.kind == ArcKind::kCommunication && std::isinf(c)) {
      throw std::invalid_argument("build_program: communication arc " + std::to_string(a.id) +
                                  " has no capacity");
    }
  }
  if (static_cast<int>(bs.size()) != trrg.task_count()) {
    throw std::invalid_argument("build_program: base-station gains missing for some tasks");
  }

  FlowProgram p;
  p.trrg = &trrg;
  p.frames = trrg.layers();
  p.tasks = trrg.task_count();
  p.params = params;
  p.capacities = capacities;
  p.bs = bs;
  p.mu_terms.assign(p.tasks, std::vector<std::vector<int>>(p.frames));

  const auto nv = trrg.vertices().size();
  std::map<std::pair<int, int>, int> var_of;  // (arc, task) -> var
  std::vector<std::vector<int>> interior_paths;

  for (int s = 0; s < p.tasks; ++s) {
    const double g_min = std::min(bs[s].gain_up, bs[s].gain_down);
    if (!(g_min > 0.0)) throw std::invalid_argument("build_program: base-station gain must be > 0");
    p.theta_max.push_back(params.bandwidth_hz *
                          std::log2(1.0 + params.p_max_bs_w * g_min / params.noise_w));
    p.power_coeff.push_back(params.w_p * params.noise_w *
                            (1.0 / bs[s].gain_up + 1.0 / bs[s].gain_down));

    // Forward search from alpha and backward search from omega.
    std::vector<int> parent(nv, -2), child(nv, -2);
    std::queue<int> q;
    parent[trrg.alpha()] = -1;
    q.push(trrg.alpha());
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int id : trrg.out_arcs(v)) {
        const Arc& a = trrg.arcs()[id];
        if (!usable_for(trrg, a, s, capacities) || parent[a.head] != -2) continue;
        parent[a.head] = id;
        q.push(a.head);
      }
    }
    child[trrg.omega()] = -1;
    q.push(trrg.omega());
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int id : trrg.in_arcs(v)) {
        const Arc& a = trrg.arcs()[id];
        if (!usable_for(trrg, a, s, capacities) || child[a.tail] != -2) continue;
        child[a.tail] = id;
        q.push(a.tail);
      }
    }

    for (const auto& a : trrg.arcs()) {
      if (a.kind != ArcKind::kCommunication && a.kind != ArcKind::kCarry) continue;
      if (!usable_for(trrg, a, s, capacities)) continue;
      if (parent[a.tail] == -2 || child[a.head] == -2) continue;
      const int idx = p.var_count();
      p.vars.push_back({a.id, s});
      var_of[{a.id, s}] = idx;
      // One alpha -> omega walk through this arc.
      std::vector<int> walk{a.id};
      for (int v = a.tail; parent[v] >= 0; v = trrg.arcs()[parent[v]].tail) walk.push_back(parent[v]);
      for (int v = a.head; child[v] >= 0; v = trrg.arcs()[child[v]].head) walk.push_back(child[v]);
      interior_paths.push_back(std::move(walk));
    }
  }

  const int n = p.var_count();
  for (int j = 0; j < n; ++j) {
    const Arc& a = trrg.arcs()[p.vars[j].arc];
    if (a.kind == ArcKind::kCommunication &&
        trrg.vertices()[a.tail].vehicle == trrg.task_source(p.vars[j].task)) {
      p.mu_terms[p.vars[j].task][a.frame - 1].push_back(j);
    }
  }

  std::vector<Eigen::VectorXd> g_rows;
  std::vector<double> h_vals;
  auto add_row = [&](Eigen::VectorXd row, double h, RowClass c) {
    g_rows.push_back(std::move(row));
    h_vals.push_back(h);
    p.row_class.push_back(c);
  };
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    row(j) = -1.0;
    add_row(std::move(row), 0.0, RowClass::kNonnegativity);
  }
  std::map<int, std::vector<int>> by_arc;
  for (int j = 0; j < n; ++j) by_arc[p.vars[j].arc].push_back(j);
  for (const auto& [arc, js] : by_arc) {
    if (std::isinf(capacities[arc])) continue;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    for (int j : js) row(j) = 1.0;
    add_row(std::move(row), capacities[arc], RowClass::kArcCapacity);
  }
  for (const auto& a : trrg.arcs()) {
    if (a.kind != ArcKind::kComputing || std::isinf(capacities[a.id])) continue;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    bool any = false;
    for (int in : trrg.in_arcs(a.tail)) {
      for (int s = 0; s < p.tasks; ++s) {
        auto it = var_of.find({in, s});
        if (it == var_of.end()) continue;
        row(it->second) = 1.0;
        any = true;
      }
    }
    if (any) add_row(std::move(row), capacities[a.id], RowClass::kCompute);
  }
  for (int s = 0; s < p.tasks; ++s) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    bool any = false;
    for (const auto& terms : p.mu_terms[s]) {
      for (int j : terms) {
        row(j) = params.eta;
        any = true;
      }
    }
    if (any) add_row(std::move(row), p.theta_max[s], RowClass::kBsRate);
  }
  p.G.resize(static_cast<Eigen::Index>(g_rows.size()), n);
  p.h.resize(static_cast<Eigen::Index>(g_rows.size()));
  for (std::size_t i = 0; i < g_rows.size(); ++i) {
    p.G.row(static_cast<Eigen::Index>(i)) = g_rows[i].transpose();
    p.h(static_cast<Eigen::Index>(i)) = h_vals[i];
  }

  // Balance at relay vertices, per task.
  std::vector<Eigen::VectorXd> a_rows;
  for (std::size_t v = 0; v < nv; ++v) {
    const Vertex& vx = trrg.vertices()[v];
    if (vx.kind != VertexKind::kOrdinary || trrg.vehicle_role(vx.vehicle) != Role::kRelay) continue;
    for (int s = 0; s < p.tasks; ++s) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      bool any = false;
      for (int id : trrg.in_arcs(static_cast<int>(v))) {
        if (auto it = var_of.find({id, s}); it != var_of.end()) {
          row(it->second) += 1.0;
          any = true;
        }
      }
      for (int id : trrg.out_arcs(static_cast<int>(v))) {
        if (auto it = var_of.find({id, s}); it != var_of.end()) {
          row(it->second) -= 1.0;
          any = true;
        }
      }
      if (any) a_rows.push_back(std::move(row));
    }
  }
  p.A.resize(static_cast<Eigen::Index>(a_rows.size()), n);
  for (std::size_t i = 0; i < a_rows.size(); ++i) p.A.row(static_cast<Eigen::Index>(i)) = a_rows[i].transpose();

  // Strictly positive balanced flow: one unit along each stored walk.
  p.interior = Eigen::VectorXd::Zero(n);
  for (std::size_t w = 0; w < interior_paths.size(); ++w) {
    const int task = p.vars[w].task;
    for (int id : interior_paths[w]) {
      if (auto it = var_of.find({id, task}); it != var_of.end()) p.interior(it->second) += 1.0;
    }
  }
  return p;
}

void fill_derived(const FlowProgram& p, FlowSolution& sol) {
  const auto& prm = p.params;
  sol.mu.assign(p.tasks, std::vector<double>(p.frames, 0.0));
  sol.theta.assign(p.tasks, 0.0);
  sol.p_up.assign(p.tasks, 0.0);
  sol.p_down.assign(p.tasks, 0.0);
  sol.throughput = 0.0;
  sol.bs_power = 0.0;
  for (int s = 0; s < p.tasks; ++s) {
    double total = 0.0;
    for (int k = 0; k < p.frames; ++k) {
      double mu = 0.0;
      for (int j : p.mu_terms[s][k]) mu += sol.x[j];
      sol.mu[s][k] = mu;
      total += mu;
    }
    sol.theta[s] = prm.eta * total;
    const double gain = std::exp2(sol.theta[s] / prm.bandwidth_hz) - 1.0;
    sol.p_up[s] = gain * prm.noise_w / p.bs[s].gain_up;
    sol.p_down[s] = gain * prm.noise_w / p.bs[s].gain_down;
    sol.throughput += total;
    sol.bs_power += sol.p_up[s] + sol.p_down[s];
  }
}

double evaluate_objective(const FlowProgram& p, const std::vector<double>& x) {
  FlowSolution tmp;
  tmp.x = x;
  fill_derived(p, tmp);
  double utility = 0.0;
  for (int s = 0; s < p.tasks; ++s) {
    for (int k = 0; k < p.frames; ++k) utility += std::log(tmp.mu[s][k] + kE);
  }
  return utility / p.frames - p.params.w_p * tmp.bs_power;
}

double conservation_residual(const FlowProgram& p, const std::vector<double>& x) {
  if (p.A.rows() == 0) return 0.0;
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  return (p.A * xv).cwiseAbs().maxCoeff();
}

namespace {

// Negated objective in scaled variables y = x / scale.
struct Objective {
  const FlowProgram& p;
  double scale;

  double rate() const { return std::numbers::ln2 * p.params.eta * scale / p.params.bandwidth_hz; }

  double theta_exp(const Eigen::VectorXd& y, int s) const {
    double m = 0.0;
    for (const auto& terms : p.mu_terms[s]) {
      for (int j : terms) m += y(j);
    }
    return std::exp(rate() * m);
  }

  double value(const Eigen::VectorXd& y) const {
    double v = 0.0;
    for (int s = 0; s < p.tasks; ++s) {
      for (const auto& terms : p.mu_terms[s]) {
        double m = 0.0;
        for (int j : terms) m += y(j);
        v -= std::log(scale * m + kE) / p.frames;
      }
      v += p.power_coeff[s] * (theta_exp(y, s) - 1.0);
    }
    return v;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& y) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(y.size());
    for (int s = 0; s < p.tasks; ++s) {
      const double pw = p.power_coeff[s] * rate() * theta_exp(y, s);
      for (const auto& terms : p.mu_terms[s]) {
        double m = 0.0;
        for (int j : terms) m += y(j);
        const double d = -scale / (scale * m + kE) / p.frames + pw;
        for (int j : terms) g(j) += d;
      }
    }
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& y) const {
    const auto n = y.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < p.tasks; ++s) {
      const double pw = p.power_coeff[s] * rate() * rate() * theta_exp(y, s);
      std::vector<int> all;
      for (const auto& terms : p.mu_terms[s]) {
        double m = 0.0;
        for (int j : terms) m += y(j);
        const double u = scale * m + kE;
        const double c = scale * scale / (u * u) / p.frames;
        for (int i : terms) {
          for (int j : terms) h(i, j) += c;
        }
        all.insert(all.end(), terms.begin(), terms.end());
      }
      for (int i : all) {
        for (int j : all) h(i, j) += pw;
      }
    }
    return h;
  }
};

}  // namespace

FlowSolution solve(const FlowProgram& p, double tolerance) {
  FlowSolution sol;
  const int n = p.var_count();
  if (n == 0) {
    fill_derived(p, sol);
    sol.objective = evaluate_objective(p, sol.x);
    return sol;
  }

  // Scale variables to O(1) and normalise each capacity row to h = 1.
  // Median arc capacity: one huge compute or cache budget must not shrink the
  // working variables toward zero.
  std::vector<double> sizes;
  for (Eigen::Index i = 0; i < p.h.size(); ++i) {
    if (p.row_class[i] == RowClass::kArcCapacity && p.h(i) > 0.0) sizes.push_back(p.h(i));
  }
  double scale = 1.0;
  if (!sizes.empty()) {
    std::nth_element(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(sizes.size() / 2), sizes.end());
    scale = std::max(1.0, sizes[sizes.size() / 2]);
  }
  const Eigen::Index m = p.G.rows();
  Eigen::MatrixXd G = p.G * scale;
  Eigen::VectorXd h = p.h;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (h(i) > 0.0) {
      G.row(i) /= h(i);
      h(i) = 1.0;
    }
  }
  const Eigen::MatrixXd& A = p.A;
  const Eigen::Index me = A.rows();
  const Objective f0{p, scale};

  // Start on the stored balanced flow, halfway to the nearest capacity.
  const Eigen::VectorXd gc = G * p.interior;
  double tau = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (gc(i) > 0.0) tau = std::min(tau, h(i) / gc(i));
  }
  if (!std::isfinite(tau) || !(tau > 0.0)) {
    throw FlowError(FlowError::Kind::kInfeasible, "no strictly feasible start");
  }
  Eigen::VectorXd y = 0.5 * tau * p.interior;
  Eigen::VectorXd fv = G * y - h;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(fv(i) < 0.0)) {
      throw FlowError(FlowError::Kind::kInfeasible,
                      "start violates a " + std::string(to_string(p.row_class[i])) + " constraint");
    }
  }
  Eigen::VectorXd lambda = (-fv).cwiseInverse();
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(me);

  constexpr double kMu = 10.0;
  constexpr double kAlpha = 0.01;
  constexpr double kBeta = 0.5;
  const double target = std::min(tolerance, 1e-3 * tolerance + 1e-12);

  auto residual = [&](const Eigen::VectorXd& yy, const Eigen::VectorXd& ll,
                      const Eigen::VectorXd& nn, double t, Eigen::VectorXd* grad_out) {
    const Eigen::VectorXd grad = f0.gradient(yy);
    const Eigen::VectorXd ff = G * yy - h;
    Eigen::VectorXd r(n + m + me);
    r.head(n) = grad + G.transpose() * ll + (me ? Eigen::VectorXd(A.transpose() * nn) : Eigen::VectorXd::Zero(n));
    r.segment(n, m) = -ll.cwiseProduct(ff) - Eigen::VectorXd::Constant(m, 1.0 / t);
    if (me) r.tail(me) = A * yy;
    if (grad_out) *grad_out = grad;
    return r;
  };

  auto kkt = [&](const Eigen::VectorXd& yy, const Eigen::VectorXd& ll, const Eigen::VectorXd& nn) {
    const Eigen::VectorXd grad = f0.gradient(yy);
    const Eigen::VectorXd ff = G * yy - h;
    Eigen::VectorXd rd = grad + G.transpose() * ll;
    if (me) rd += A.transpose() * nn;
    const double dual = rd.lpNorm<Eigen::Infinity>() / (1.0 + grad.lpNorm<Eigen::Infinity>());
    const double gap = -ff.dot(ll) / (1.0 + std::abs(f0.value(yy)));
    const double viol = me ? (A * yy).lpNorm<Eigen::Infinity>() : 0.0;
    const double primal = viol > 0.0 ? viol / std::max(yy.lpNorm<Eigen::Infinity>(), 1e-300) : 0.0;
    return std::max({dual, gap, primal});
  };

  int it = 0;
  double res = kkt(y, lambda, nu);
  for (; it < kMaxIpmIterations && res > target; ++it) {
    fv = G * y - h;
    const double eta_hat = -fv.dot(lambda);
    const double t = kMu * static_cast<double>(m) / eta_hat;

    Eigen::VectorXd grad;
    const Eigen::VectorXd r = residual(y, lambda, nu, t, &grad);
    const Eigen::VectorXd r_dual = r.head(n);
    const Eigen::VectorXd r_cent = r.segment(n, m);

    const Eigen::VectorXd w = lambda.cwiseQuotient(-fv);
    Eigen::MatrixXd hpd = f0.hessian(y);
    hpd.noalias() += G.transpose() * w.asDiagonal() * G;
    const Eigen::VectorXd rhs1 = -r_dual - G.transpose() * r_cent.cwiseQuotient(fv);

    Eigen::LLT<Eigen::MatrixXd> llt(hpd);
    if (llt.info() != Eigen::Success) {
      throw FlowError(FlowError::Kind::kNumerical, "Newton matrix is not positive definite");
    }
    Eigen::VectorXd dy;
    Eigen::VectorXd dnu = Eigen::VectorXd::Zero(me);
    if (me) {
      const Eigen::MatrixXd hinv_at = llt.solve(A.transpose());
      Eigen::MatrixXd schur = A * hinv_at;
      schur.diagonal().array() += 1e-14 * schur.diagonal().cwiseAbs().maxCoeff();
      const Eigen::VectorXd hinv_r = llt.solve(rhs1);
      dnu = schur.ldlt().solve(A * hinv_r + r.tail(me));
      dy = hinv_r - hinv_at * dnu;
    } else {
      dy = llt.solve(rhs1);
    }
    const Eigen::VectorXd gdy = G * dy;
    const Eigen::VectorXd dlambda = (r_cent - lambda.cwiseProduct(gdy)).cwiseQuotient(fv);

    double step = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (dlambda(i) < 0.0) step = std::min(step, -lambda(i) / dlambda(i));
    }
    step *= 0.99;
    auto strictly_feasible = [&](double s) { return ((G * (y + s * dy) - h).array() < 0.0).all(); };
    int guard = 0;
    while (!strictly_feasible(step) && guard++ < 200) step *= kBeta;
    const double rnorm = r.norm();
    guard = 0;
    while (residual(y + step * dy, lambda + step * dlambda, nu + step * dnu, t, nullptr).norm() >
               (1.0 - kAlpha * step) * rnorm &&
           guard++ < 60) {
      step *= kBeta;
    }
    if (step < 1e-14) break;
    y += step * dy;
    lambda += step * dlambda;
    nu += step * dnu;
    res = kkt(y, lambda, nu);
  }
  if (res > tolerance) {
    throw FlowError(FlowError::Kind::kIterationLimit,
                    "interior-point method stopped at relative KKT residual " + std::to_string(res));
  }

  sol.x.resize(n);
  for (int j = 0; j < n; ++j) sol.x[j] = scale * y(j);
  sol.iterations = it;
  sol.kkt_residual = res;
  fill_derived(p, sol);
  sol.objective = evaluate_objective(p, sol.x);
  return sol;
}

std::string_view to_string(Approach a) {
  switch (a) {
    case Approach::kRobust:
      return "Robust";
    case Approach::kV2Only:
      return "V2Only";
    case Approach::kV5Only:
      return "V5Only";
    case Approach::kWithoutCarry:
      return "WithoutCarry";
    case Approach::kNoRobust:
      return "NoRobust";
  }
  return "?";
}

Approach parse_approach(std::string_view name) {
  std::string lower;
  for (char c : name) {
    if (c != '-' && c != '_') lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (lower == "robust") return Approach::kRobust;
  if (lower == "v2only") return Approach::kV2Only;
  if (lower == "v5only") return Approach::kV5Only;
  if (lower == "withoutcarry") return Approach::kWithoutCarry;
  if (lower == "norobust" || lower == "nonrobust") return Approach::kNoRobust;
  throw std::invalid_argument("unknown approach '" + std::string(name) + "'");
}

std::vector<double> baseline_mask(const Trrg& trrg, const std::vector<double>& capacities,
                                  Approach approach) {
  std::vector<double> out = capacities;
  const char* keep = nullptr;
  switch (approach) {
    case Approach::kRobust:
    case Approach::kNoRobust:
      return out;
    case Approach::kV2Only:
      keep = "v2";
      break;
    case Approach::kV5Only:
      keep = "v5";
      break;
    case Approach::kWithoutCarry:
      break;
  }
  for (const auto& a : trrg.arcs()) {
    if (a.kind != ArcKind::kCarry) continue;
    const int vehicle = trrg.vertices()[a.tail].vehicle;
    if (keep == nullptr || trrg.vehicle_id(vehicle) != keep) out[a.id] = 0.0;
  }
  return out;
}

void write_solution_csv(std::ostream& out, const FlowProgram& p, const FlowSolution& sol,
                        const std::vector<std::string>& task_ids) {
  const Trrg& g = *p.trrg;
  std::map<std::pair<int, int>, double> flow;
  for (int j = 0; j < p.var_count(); ++j) flow[{p.vars[j].arc, p.vars[j].task}] = sol.x[j];
  auto num = [](double v) {
    if (std::isinf(v)) return std::string("inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "frame,arc,task,flow_bits,capacity_bits\n";
  for (const auto& a : g.arcs()) {
    for (int s = 0; s < p.tasks; ++s) {
      double value = 0.0;
      if (a.kind == ArcKind::kPerception) {
        if (a.task != s) continue;
        value = sol.mu[s][a.frame - 1];
      } else {
        auto it = flow.find({a.id, s});
        if (it == flow.end()) continue;
        value = it->second;
      }
      out << a.frame << ',' << a.id << ',' << task_ids.at(s) << ',' << num(value) << ','
          << num(p.capacities[a.id]) << '\n';
    }
  }
  out << "objective,throughput,bs_power,frames,tasks,w_p\n";
  out << num(sol.objective) << ',' << num(sol.throughput) << ',' << num(sol.bs_power) << ','
      << p.frames << ',' << p.tasks << ',' << num(p.params.w_p) << '\n';
}

}  // namespace fogflow
