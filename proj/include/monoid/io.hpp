#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "monoid/adjoint.hpp"
#include "monoid/optimize.hpp"
#include "monoid/pde.hpp"

namespace monoid::io {

inline constexpr const char* kWeightsHeader = "monoid-weights v1";
inline constexpr const char* kGradientHeader = "monoid-grad v1";
inline constexpr const char* kDatasetHeader = "monoid-dataset v1";
inline constexpr const char* kGridHeader = "monoid-grid v1";
inline constexpr const char* kKktHeader = "monoid-kkt v1";

/// Shortest text that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& text);

/// Weight document:
///   monoid-weights v1
///   layer_dims 2 2 2
///   A 1 <n_1 * n_0 entries, row-major>
///   b 1 <n_1 entries>
///   ...
void write_weights(std::ostream& out, const WeightStack& weights);
void write_weights(const std::filesystem::path& path, const WeightStack& weights);
WeightStack read_weights(std::istream& in);
WeightStack read_weights(const std::filesystem::path& path);

/// Same layout with the gradient header.
void write_gradient(std::ostream& out, const WeightGradient& gradient);
WeightGradient read_gradient(std::istream& in);

/// CSV with header `t,v,w`.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);

struct Samples {
  std::vector<double> times;
  std::vector<Vec2> states;
};
Samples read_trajectory_csv(std::istream& in);
Samples read_trajectory_csv(const std::filesystem::path& path);

/// Writes `dir/manifest.txt` and `dir/traj_<k>.csv`:
///   monoid-dataset v1
///   T 40
///   n_steps 800
///   K 7
///   entry <v0> <w0> traj_0.csv
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

/// Reads a manifest; CSV paths are relative to the manifest. Samples that do
/// not sit on the manifest grid are linearly interpolated onto it.
Dataset read_dataset(const std::filesystem::path& manifest);

/// `iter,objective,grad_norm,step,backtracks`
void write_report_csv(std::ostream& out, const TrainReport& report);
void write_report_csv(const std::filesystem::path& path, const TrainReport& report);

/// `key value` lines after the monoid-kkt header.
void write_kkt(std::ostream& out, const KktReport& kkt);

/// Grid descriptor plus `field_<k>.csv` (columns i,j,v,w) per snapshot.
void write_field_trajectory(const std::filesystem::path& dir, const FieldTrajectory& fields,
                            int stride = 1);

}  // namespace monoid::io
