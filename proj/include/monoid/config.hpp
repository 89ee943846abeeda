#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "monoid/optimize.hpp"
#include "monoid/pde.hpp"

namespace monoid {

/// Everything a CLI run needs, read from an INI-style document with the
/// sections [model], [fh], [network], [activation], [time], [train], [io].
/// Missing keys keep their defaults; unknown sections or keys are rejected.
struct RunConfig {
  OdeModelConfig model;
  double nu = 1.0;
  SpaceGrid space;
  FhParams fh;
  NetworkArchitecture architecture = NetworkArchitecture::uniform(7, 2);
  ActivationSpec activation = ActivationSpec::smoothed_relu(2.0);
  double final_time = 40.0;
  double dt = 0.05;
  /// Uniform init on [-1, 1]; the narrower library default trains the
  /// seven-layer FitzHugh-Nagumo fit into poorer minima.
  TrainConfig train = [] {
    TrainConfig t;
    t.init_scale = 1.0;
    return t;
  }();
  std::filesystem::path output_dir = "out";
  std::filesystem::path dataset;
  std::filesystem::path weights;

  TimeGrid time_grid() const { return TimeGrid::with_step(final_time, dt); }
  PdeModelConfig pde_model() const;
};

/// Throws FormatError (schema violations) or DomainError (invalid values).
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully populated document with the defaults, suitable as a template.
void write_run_config(std::ostream& out, const RunConfig& cfg);

/// Applies "a=0,b=0,..." overrides to the FitzHugh-Nagumo parameters
/// (keys a, b, c, d, eta, gamma, f_v, f_w).
void apply_fh_overrides(RunConfig& cfg, const std::string& overrides);

}  // namespace monoid
