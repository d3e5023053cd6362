#pragma once

#include <filesystem>

#include "json.hpp"

#include "ergodyn/dynamics.hpp"

namespace ergodyn {

inline constexpr char kTrajectoryMagic[9] = "ERGDYN01";

/// Files written into `dir`:
///   trajectory.bin   "ERGDYN01", u64 iterate count, u64 dimension, then the
///                    iterates as little-endian f64, one after another
///   trajectory.json  seed, layout, stored steps and run settings
///   records.csv      step,eta,batch_loss,batch (indices joined by ';')
void write_trajectory(const Trajectory& traj, const std::filesystem::path& dir);
Trajectory read_trajectory(const std::filesystem::path& dir);

nlohmann::json trajectory_metadata(const Trajectory& traj);
void write_records_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace ergodyn
