#include "fogflow/trrg.hpp"

#include <cmath>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace fogflow {

std::string_view to_string(ArcKind kind) {
  switch (kind) {
    case ArcKind::kCommunication:
      return "communication";
    case ArcKind::kComputing:
      return "computing";
    case ArcKind::kPerception:
      return "perception";
    case ArcKind::kCarry:
      return "carry";
  }
  return "?";
}

int Trrg::vertex_of(int vehicle, int k) const {
  if (vehicle < 0 || vehicle >= vehicle_count() || k < 1 || k > layers()) return -1;
  return vertex_index_[vehicle][k - 1];
}

std::vector<int> Trrg::arcs_of_kind(ArcKind kind) const {
  std::vector<int> out;
  for (const auto& a : arcs_) {
    if (a.kind == kind) out.push_back(a.id);
  }
  return out;
}

std::string Trrg::label(int vertex) const {
  const Vertex& v = vertices_.at(vertex);
  switch (v.kind) {
    case VertexKind::kSource:
      return "alpha";
    case VertexKind::kSink:
      return "omega";
    case VertexKind::kOrdinary:
      break;
  }
  return "v" + std::to_string(v.frame) + ":" + vehicle_ids_[v.vehicle];
}

int Trrg::add_vertex(Vertex v) {
  vertices_.push_back(v);
  out_.emplace_back();
  in_.emplace_back();
  return static_cast<int>(vertices_.size()) - 1;
}

int Trrg::add_arc(Arc arc) {
  arc.id = static_cast<int>(arcs_.size());
  out_[arc.tail].push_back(arc.id);
  in_[arc.head].push_back(arc.id);
  if (arc.kind == ArcKind::kCommunication) comm_by_frame_[arc.frame - 1].push_back(arc.id);
  arcs_.push_back(arc);
  return arc.id;
}

Trrg build_trrg(const Scenario& scenario, const std::vector<Frame>& frames,
                double comm_range) {
  if (frames.empty()) throw std::invalid_argument("build_trrg: empty frame list");
  Trrg g;
  g.frames_ = frames;
  const int n = static_cast<int>(scenario.vehicles.size());
  const int layers = static_cast<int>(frames.size());
  for (const auto& v : scenario.vehicles) {
    g.vehicle_ids_.push_back(v.id);
    g.roles_.push_back(v.role);
  }
  for (const auto& t : scenario.tasks) {
    auto src = scenario.find_vehicle(t.source);
    if (!src) throw std::invalid_argument("task '" + t.id + "' has unknown source");
    g.task_sources_.push_back(static_cast<int>(*src));
    g.task_delays_.push_back(t.delay_frames);
  }
  g.comm_by_frame_.resize(layers);

  g.alpha_ = g.add_vertex({VertexKind::kSource, -1, 0});
  g.vertex_index_.assign(n, std::vector<int>(layers, -1));
  for (int k = 1; k <= layers; ++k) {
    for (int i = 0; i < n; ++i) {
      g.vertex_index_[i][k - 1] = g.add_vertex({VertexKind::kOrdinary, i, k});
    }
  }
  g.omega_ = g.add_vertex({VertexKind::kSink, -1, 0});

  for (int k = 1; k <= layers; ++k) {
    const double t = frames[k - 1].midpoint();
    // Perception arcs first, task order.
    for (int s = 0; s < g.task_count(); ++s) {
      if (k > g.task_delays_[s]) continue;
      Arc a;
      a.kind = ArcKind::kPerception;
      a.tail = g.alpha_;
      a.head = g.vertex_index_[g.task_sources_[s]][k - 1];
      a.frame = k;
      a.task = s;
      g.add_arc(a);
    }
    for (int i = 0; i < n; ++i) {
      if (!can_transmit(g.roles_[i])) continue;
      const Point pi = position_at(scenario.vehicles[i], t);
      for (int j = 0; j < n; ++j) {
        if (j == i || !can_receive(g.roles_[j])) continue;
        if (distance(pi, position_at(scenario.vehicles[j], t)) > comm_range) continue;
        Arc a;
        a.kind = ArcKind::kCommunication;
        a.tail = g.vertex_index_[i][k - 1];
        a.head = g.vertex_index_[j][k - 1];
        a.frame = k;
        g.add_arc(a);
      }
    }
    for (int i = 0; i < n; ++i) {
      const auto& spec = scenario.vehicles[i];
      if (spec.role == Role::kFog) {
        Arc a;
        a.kind = ArcKind::kComputing;
        a.tail = g.vertex_index_[i][k - 1];
        a.head = g.omega_;
        a.frame = k;
        a.capacity_bits = spec.compute_capacity_bits.value_or(0.0);
        g.add_arc(a);
      } else if (spec.role == Role::kRelay && k < layers) {
        Arc a;
        a.kind = ArcKind::kCarry;
        a.tail = g.vertex_index_[i][k - 1];
        a.head = g.vertex_index_[i][k];
        a.frame = k;
        a.capacity_bits = spec.cache_capacity_bits.value_or(0.0);
        g.add_arc(a);
      }
    }
  }
  return g;
}

bool reachable_paths_exist(const Trrg& trrg, int task, int delay_budget) {
  std::vector<double> caps;
  caps.reserve(trrg.arcs().size());
  for (const auto& a : trrg.arcs()) caps.push_back(a.capacity_bits);
  return reachable_paths_exist(trrg, task, delay_budget, caps);
}

bool reachable_paths_exist(const Trrg& trrg, int task, int delay_budget,
                           const std::vector<double>& capacities) {
  if (task < 0 || task >= trrg.task_count()) {
    throw std::out_of_range("reachable_paths_exist: unknown task");
  }
  std::vector<char> seen(trrg.vertices().size(), 0);
  std::queue<int> frontier;
  frontier.push(trrg.alpha());
  seen[trrg.alpha()] = 1;
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    if (v == trrg.omega()) return true;
    for (int id : trrg.out_arcs(v)) {
      const Arc& a = trrg.arcs()[id];
      if (capacities.at(id) <= 0.0) continue;
      switch (a.kind) {
        case ArcKind::kPerception:
          if (a.task != task || a.frame > delay_budget) continue;
          break;
        case ArcKind::kCommunication:
        case ArcKind::kCarry:
          if (a.frame >= delay_budget) continue;
          break;
        case ArcKind::kComputing:
          break;
      }
      if (!seen[a.head]) {
        seen[a.head] = 1;
        frontier.push(a.head);
      }
    }
  }
  return false;
}

void write_edge_list(const Trrg& trrg, std::ostream& out,
                     const std::vector<double>* capacities) {
  out << "# tail head kind frame capacity_bits\n";
  for (const auto& a : trrg.arcs()) {
    const double cap = capacities ? capacities->at(a.id) : a.capacity_bits;
    out << trrg.label(a.tail) << ' ' << trrg.label(a.head) << ' '
        << to_string(a.kind) << ' ' << a.frame << ' ';
    if (std::isinf(cap)) {
      out << "inf";
    } else {
      out << cap;
    }
    out << '\n';
  }
}

}  // namespace fogflow
