#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "fogflow/scenario.hpp"

namespace fogflow {

enum class VertexKind { kOrdinary, kSource, kSink };

struct Vertex {
  VertexKind kind = VertexKind::kOrdinary;
  int vehicle = -1;  // index into Scenario::vehicles, ordinary only
  int frame = 0;     // 1-based, ordinary only
};

enum class ArcKind { kCommunication, kComputing, kPerception, kCarry };

std::string_view to_string(ArcKind kind);

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct Arc {
  int id = 0;
  ArcKind kind = ArcKind::kCommunication;
  int tail = 0;
  int head = 0;
  // Frame of the tail vertex; for perception arcs the frame of the head.
  int frame = 0;
  int task = -1;  // perception arcs only
  // Structural capacity in bits per frame: cache for carry, compute for
  // computing, unbounded for perception, and unbounded for communication
  // arcs until the power stage fills it in.
  double capacity_bits = kUnbounded;
};

class Trrg {
 public:
  int layers() const { return static_cast<int>(frames_.size()); }
  const std::vector<Frame>& frames() const { return frames_; }
  const Frame& frame(int k) const { return frames_.at(k - 1); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  int alpha() const { return alpha_; }
  int omega() const { return omega_; }

  // -1 when the vehicle has no vertex in frame k.
  int vertex_of(int vehicle, int k) const;
  const std::vector<int>& out_arcs(int vertex) const { return out_[vertex]; }
  const std::vector<int>& in_arcs(int vertex) const { return in_[vertex]; }
  // Communication arcs of frame k in ascending id order.
  const std::vector<int>& communication_arcs(int k) const {
    return comm_by_frame_.at(k - 1);
  }
  std::vector<int> arcs_of_kind(ArcKind kind) const;

  const std::string& vehicle_id(int vehicle) const { return vehicle_ids_.at(vehicle); }
  Role vehicle_role(int vehicle) const { return roles_.at(vehicle); }
  int vehicle_count() const { return static_cast<int>(vehicle_ids_.size()); }
  int task_count() const { return static_cast<int>(task_delays_.size()); }
  int task_delay(int task) const { return task_delays_.at(task); }
  int task_source(int task) const { return task_sources_.at(task); }

  // `vK:id`, `alpha` or `omega`.
  std::string label(int vertex) const;

 private:
  friend Trrg build_trrg(const Scenario&, const std::vector<Frame>&, double);

  int add_vertex(Vertex v);
  int add_arc(Arc arc);

  std::vector<Frame> frames_;
  std::vector<Vertex> vertices_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> comm_by_frame_;
  std::vector<std::vector<int>> vertex_index_;  // [vehicle][k-1]
  std::vector<std::string> vehicle_ids_;
  std::vector<Role> roles_;
  std::vector<int> task_delays_;
  std::vector<int> task_sources_;
  int alpha_ = -1;
  int omega_ = -1;
};

// Throws std::invalid_argument for an empty frame list.
Trrg build_trrg(const Scenario& scenario, const std::vector<Frame>& frames,
                double comm_range);

// Is there an alpha -> omega path for `task` using communication and carry
// arcs of frames k < delay_budget? Arcs whose capacity is exactly zero are
// skipped, so masked graphs can be checked with `capacities`.
bool reachable_paths_exist(const Trrg& trrg, int task, int delay_budget);
bool reachable_paths_exist(const Trrg& trrg, int task, int delay_budget,
                           const std::vector<double>& capacities);

// Plain-text edge list: `tail head kind frame capacity_bits` per line.
void write_edge_list(const Trrg& trrg, std::ostream& out,
                     const std::vector<double>* capacities = nullptr);

}  // namespace fogflow
