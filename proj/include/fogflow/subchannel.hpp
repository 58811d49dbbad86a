#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fogflow/link_scheduler.hpp"

namespace fogflow {

// Rows follow `active_arcs`, columns follow scenario.avs. Entry = pathloss
// gain from the AV transmitter to the link receiver over sigma^2, at frame
// midpoint.
Eigen::MatrixXd interference_matrix(const Scenario& scenario, const Trrg& trrg,
                                    const std::vector<int>& active_arcs, int k);

struct Assignment {
  std::vector<int> column_of_row;  // -1 when unmatched
  double cost = 0.0;               // sum over matched rows, row order
};

// Minimum-cost matching that covers the smaller side. Among optimal
// matchings the one lexicographically smallest in (row, column) is chosen,
// with "unmatched" ordered after every column.
Assignment assign(const Eigen::MatrixXd& cost);

// Per frame: AV index for each active arc (parallel to LinkSchedule), -1 if
// the arc got no subchannel.
using SubchannelPlan = std::vector<std::vector<int>>;

SubchannelPlan assign_subchannels(const Scenario& scenario, const Trrg& trrg,
                                  const LinkSchedule& schedule);

}  // namespace fogflow
