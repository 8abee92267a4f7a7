#pragma once

#include <string>
#include <vector>

#include "singheat/grid.hpp"

namespace singheat {

/// Trajectory CSV with header row `t, x_1..x_nx`, %.12e numerics.
/// `times` overrides the default node times (used for half-node fields).
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const SpaceTimeGrid& grid,
                          const std::vector<double>* times = nullptr);

/// Generic CSV: header names + numeric rows.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

/// gnuplot-friendly whitespace-separated data, column 1 is the abscissa.
void write_dat(const std::string& path, const std::vector<std::vector<double>>& rows);

std::vector<double> read_column_csv(const std::string& path);

}  // namespace singheat
