#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wnlab/flow.hpp"

namespace wnlab::io {

/// Snapshot CSV. First line: "# wnlab-trajectory variant=<v> depth=<L> eta=<η̃> n=<N>",
/// then the header "iter,t,loss,<state columns>" and one row per snapshot.
/// State columns are x_i (plain), r,u_i (WN) or up_i,um_i (signed). When
/// `coords` is given only those indices are written; such files cannot be
/// read back for audits.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& traj,
                          const std::optional<std::vector<Eigen::Index>>& coords = std::nullopt);

/// Parses a full-state trajectory CSV. Errors are ParseError with the line number.
TrajectoryRecord read_trajectory_csv(std::istream& in);
TrajectoryRecord read_trajectory_csv(const std::filesystem::path& path);

/// {reason, iters, final_loss, l1_of_xtilde} as a JSON object string.
std::string terminal_summary_json(const TrajectoryRecord& traj);

/// Per-iteration loss history as "iter,t,loss" rows.
void write_loss_history_csv(std::ostream& out, const TrajectoryRecord& traj);

}  // namespace wnlab::io
