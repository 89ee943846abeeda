#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "monoid/config.hpp"
#include "monoid/gradcheck.hpp"
#include "monoid/io.hpp"
#include "monoid/parallel.hpp"
#include "monoid/plot.hpp"

namespace fs = std::filesystem;
using namespace monoid;

namespace {

enum Exit : int {
  kOk = 0,
  kToleranceBreach = 1,
  kFormat = 2,
  kSolver = 3,
  kLineSearch = 4,
  kIo = 5,
  kUsage = 6,
  kInternal = 7,
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string adjoint;
  std::string mode = "ode";
  std::string params;
};

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
    if (c == '"') c = '\'';
  }
  return text;
}

int fail(int code, const char* kind, const std::string& message) {
  std::cerr << "monoid: error kind=" << kind << " exit=" << code << " message=\""
            << one_line(message) << "\"\n";
  return code;
}

RunConfig load(const Options& opt) {
  RunConfig cfg;
  if (!opt.config.empty()) cfg = load_run_config(opt.config);
  if (opt.seed) cfg.train.seed = *opt.seed;
  if (!opt.adjoint.empty()) cfg.train.adjoint = parse_adjoint_mode(opt.adjoint);
  if (!opt.params.empty()) apply_fh_overrides(cfg, opt.params);
  set_thread_cap(opt.threads);
  return cfg;
}

Vec2 parse_state(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError("--z0 expects 'v,w', got '" + text + "'");
  return {io::parse_double(text.substr(0, comma)), io::parse_double(text.substr(comma + 1))};
}

void require_ode(const Options& opt, const char* command) {
  if (opt.mode != "ode") throw UsageError(std::string(command) + " supports --mode ode only");
}

Dataset load_or_generate(const RunConfig& cfg, const std::string& data) {
  fs::path manifest = data.empty() ? cfg.dataset : fs::path(data);
  if (manifest.empty()) return generate_dataset(cfg.fh, cfg.model.forcing, cfg.time_grid());
  if (fs::is_directory(manifest)) manifest /= "manifest.txt";
  return io::read_dataset(manifest);
}

WeightStack load_weights(const RunConfig& cfg, const std::string& path) {
  const fs::path p = path.empty() ? cfg.weights : fs::path(path);
  if (p.empty()) throw UsageError("no weights given (--weights or [io] weights)");
  WeightStack w = io::read_weights(p);
  if (!(w.architecture() == cfg.architecture)) {
    throw ShapeError("weights in '" + p.string() + "' do not match [network] layer_dims");
  }
  return w;
}

int cmd_generate(const Options& opt, const std::string& out) {
  require_ode(opt, "generate");
  const RunConfig cfg = load(opt);
  const fs::path dir = out.empty() ? cfg.output_dir / "dataset" : fs::path(out);
  const Dataset data = generate_dataset(cfg.fh, cfg.model.forcing, cfg.time_grid());
  io::write_dataset(dir, data);
  std::cout << "dataset " << (dir / "manifest.txt").string() << " trajectories=" << data.size()
            << " steps=" << data.grid.n_steps() << '\n';
  return kOk;
}

int cmd_train(const Options& opt, const std::string& data_path, const std::string& out,
              std::optional<int> max_iters, int log_every) {
  require_ode(opt, "train");
  RunConfig cfg = load(opt);
  if (max_iters) cfg.train.max_iters = *max_iters;
  cfg.train.validate();
  const Dataset data = load_or_generate(cfg, data_path);
  const fs::path dir = out.empty() ? cfg.output_dir : fs::path(out);

  const auto progress = [&](const IterationRecord& r) {
    if (log_every > 0 && r.iter % log_every == 0) {
      std::cout << "iter " << r.iter << " objective " << io::format_double(r.objective)
                << " grad_norm " << io::format_double(r.grad_norm) << '\n';
    }
  };
  const TrainReport report =
      train(data, cfg.architecture, cfg.activation, cfg.model, cfg.train, std::nullopt, progress);

  fs::create_directories(dir);
  io::write_weights(dir / "weights.txt", report.weights);
  io::write_report_csv(dir / "report.csv", report);
  {
    std::ofstream kkt(dir / "kkt.txt");
    io::write_kkt(kkt, report.kkt);
    if (!kkt) throw IoError("write to '" + (dir / "kkt.txt").string() + "' failed");
  }
  const IterationRecord& last = report.history.back();
  std::cout << "reason=" << to_string(report.reason) << " iterations=" << last.iter
            << " objective=" << io::format_double(last.objective)
            << " grad_norm=" << io::format_double(last.grad_norm)
            << " weights=" << (dir / "weights.txt").string() << '\n';
  if (report.reason == StopReason::line_search_failed) {
    return fail(kLineSearch, "line_search", report.message);
  }
  return kOk;
}

void write_columns(const fs::path& path, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& columns) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (std::size_t r = 0; r < columns.front().size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << (c ? "," : "") << io::format_double(columns[c][r]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

int cmd_simulate(const Options& opt, const std::string& weights_path, const std::string& z0_text,
                 const std::string& out, bool reference, int stride) {
  const RunConfig cfg = load(opt);
  const WeightStack w = load_weights(cfg, weights_path);
  const Vec2 z0 = parse_state(z0_text);
  const TimeGrid grid = cfg.time_grid();
  const Trajectory nn = simulate_cn(NetworkDynamics(w, cfg.activation, cfg.model), z0, grid);

  if (opt.mode == "pde") {
    const fs::path dir = out.empty() ? cfg.output_dir / "fields" : fs::path(out);
    const auto n = static_cast<std::size_t>(cfg.space.size());
    const FieldTrajectory fields = simulate_pde(w, cfg.activation, cfg.pde_model(),
                                                std::vector<double>(n, z0[0]),
                                                std::vector<double>(n, z0[1]), grid);
    io::write_field_trajectory(dir, fields, stride);
    std::vector<double> t, v_mean, w_mean, v_ode;
    double worst = 0.0;
    for (int k = 0; k < grid.size(); ++k) {
      const auto uk = static_cast<std::size_t>(k);
      t.push_back(grid.time(k));
      v_mean.push_back(spatial_mean(cfg.space, fields.v_fields[uk]));
      w_mean.push_back(spatial_mean(cfg.space, fields.w_fields[uk]));
      v_ode.push_back(nn.states[uk][0]);
      for (const double v : fields.v_fields[uk]) worst = std::max(worst, std::abs(v - nn.states[uk][0]));
    }
    write_columns(dir / "mean.csv", {"t", "v_mean", "w_mean", "v_ode"}, {t, v_mean, w_mean, v_ode});
    std::cout << "fields " << dir.string() << " snapshots=" << (grid.n_steps() / stride + 1)
              << " max_abs_dev_from_ode=" << io::format_double(worst) << '\n';
    return kOk;
  }
  if (opt.mode != "ode") throw UsageError("--mode must be ode or pde");

  const fs::path file = out.empty() ? cfg.output_dir / "simulate.csv" : fs::path(out);
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  if (!reference) {
    io::write_trajectory_csv(file, nn);
    std::cout << "trajectory " << file.string() << '\n';
    return kOk;
  }
  const Trajectory fh = simulate_cn(FhDynamics{cfg.fh, cfg.model.forcing}, z0, grid);
  std::vector<double> t, v_nn, v_fh;
  for (int k = 0; k < grid.size(); ++k) {
    t.push_back(grid.time(k));
    v_nn.push_back(nn.states[static_cast<std::size_t>(k)][0]);
    v_fh.push_back(fh.states[static_cast<std::size_t>(k)][0]);
  }
  write_columns(file, {"t", "v_nn", "v_fh"}, {t, v_nn, v_fh});
  const double misfit = relative_v_misfit(nn, fh);
  char pct[32];
  std::snprintf(pct, sizeof pct, "%.1f%%", 100.0 * misfit);
  std::cout << "comparison " << file.string() << " relative_v_misfit=" << io::format_double(misfit)
            << " (" << pct << ")\n";
  return kOk;
}

int cmd_gradcheck(const Options& opt, std::optional<double> tol, double h, double scale,
                  const std::string& data_path) {
  require_ode(opt, "gradcheck");
  const RunConfig cfg = load(opt);
  const Dataset data = load_or_generate(cfg, data_path);
  const WeightStack w = init_weights(cfg.architecture, cfg.train.seed, scale);
  const double tolerance = tol ? *tol : default_gradcheck_tolerance(cfg.activation);
  const GradCheckReport r = gradient_check(w, data, cfg.model, cfg.activation, cfg.train.objective,
                                           tolerance, h, cfg.train.adjoint, cfg.train.newton);
  for (std::size_t l = 0; l < r.layer_errors.size(); ++l) {
    std::cout << "layer " << l + 1 << " rel_err " << io::format_double(r.layer_errors[l]) << '\n';
  }
  std::cout << "worst " << io::format_double(r.worst) << " tolerance " << io::format_double(r.tolerance)
            << (r.passed ? " PASS" : " FAIL") << '\n';
  if (!r.passed) {
    return fail(kToleranceBreach, "gradcheck",
                "worst relative error " + io::format_double(r.worst) + " exceeds " +
                    io::format_double(r.tolerance));
  }
  return kOk;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

int cmd_export_plot(const std::string& input, const std::string& out, std::string title,
                    const std::vector<std::string>& columns) {
  std::ifstream in(input);
  if (!in) throw IoError("cannot open '" + input + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(input + ": empty file");
  const auto header = split_csv(line);
  if (header.size() < 2) throw FormatError(input + ": need an abscissa and at least one series");
  std::vector<std::vector<double>> data(header.size());
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw FormatError(input + ": row " + std::to_string(row) + " has " +
                        std::to_string(cells.size()) + " columns, header has " +
                        std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) data[c].push_back(io::parse_double(cells[c]));
  }

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::vector<PlotSeries> series;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (!columns.empty() && std::find(columns.begin(), columns.end(), header[c]) == columns.end()) {
      continue;
    }
    series.push_back({header[c], palette[series.size() % std::size(palette)], data[c]});
  }
  if (series.empty()) throw UsageError("none of the requested --columns appear in " + input);
  const fs::path svg = out.empty() ? fs::path(input).replace_extension(".svg") : fs::path(out);
  if (title.empty()) title = fs::path(input).filename().string();
  write_svg_plot(svg, data[0], series, title);
  std::cout << "plot " << svg.string() << " series=" << series.size() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn monodomain reaction terms with a neural network"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config, "INI run configuration");
  app.add_option("--seed", opt.seed, "Seed for weight initialization");
  app.add_option("--threads", opt.threads, "Cap on OpenMP worker threads")->check(CLI::NonNegativeNumber);
  app.add_option("--adjoint", opt.adjoint, "Adjoint scheme")->check(CLI::IsMember({"paper", "discrete"}));
  app.add_option("--mode", opt.mode, "Forward model")->check(CLI::IsMember({"ode", "pde"}));
  app.add_option("--params", opt.params, "FitzHugh-Nagumo overrides, e.g. a=0,b=0");

  std::string out;
  std::string data;
  std::string weights;
  std::string z0 = "2,0";
  std::optional<int> max_iters;
  int log_every = 100;
  bool no_reference = false;
  int stride = 10;
  std::optional<double> tol;
  double h = 1e-5;
  double gradcheck_scale = TrainConfig{}.init_scale;
  std::string input;
  std::string title;
  std::vector<std::string> columns;

  auto* generate = app.add_subcommand("generate", "Write the FitzHugh-Nagumo training dataset");
  generate->add_option("--out", out, "Output directory");

  auto* train_cmd = app.add_subcommand("train", "Fit the network to a dataset");
  train_cmd->add_option("--data", data, "Dataset manifest or directory (default: generate)");
  train_cmd->add_option("--out", out, "Output directory");
  train_cmd->add_option("--max-iters", max_iters, "Override [train] max_iters")->check(CLI::PositiveNumber);
  train_cmd->add_option("--log-every", log_every, "Progress interval in iterations (0: silent)");

  auto* simulate = app.add_subcommand("simulate", "Simulate the learned model from one initial state");
  simulate->add_option("--weights", weights, "Weights file");
  simulate->add_option("--z0", z0, "Initial state v,w")->capture_default_str();
  simulate->add_option("--out", out, "Output CSV (ode) or directory (pde)");
  simulate->add_flag("--no-reference", no_reference, "Write t,v,w instead of the comparison");
  simulate->add_option("--stride", stride, "Field snapshot stride (pde)")->check(CLI::PositiveNumber);

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare adjoint gradients with finite differences");
  gradcheck->add_option("--tol", tol, "Relative error tolerance");
  gradcheck->add_option("--fd-step", h, "Finite-difference step")->capture_default_str();
  gradcheck->add_option("--init-scale", gradcheck_scale, "Range of the seeded weights")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  gradcheck->add_option("--data", data, "Dataset manifest or directory (default: generate)");

  auto* plot = app.add_subcommand("export-plot", "Render a CSV as an SVG line chart");
  plot->add_option("--input", input, "CSV whose first column is the abscissa")->required();
  plot->add_option("--out", out, "SVG path (default: input with .svg)");
  plot->add_option("--title", title, "Chart title");
  plot->add_option("--columns", columns, "Series to draw (default: all)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    if (*generate) return cmd_generate(opt, out);
    if (*train_cmd) return cmd_train(opt, data, out, max_iters, log_every);
    if (*simulate) return cmd_simulate(opt, weights, z0, out, !no_reference, stride);
    if (*gradcheck) return cmd_gradcheck(opt, tol, h, gradcheck_scale, data);
    return cmd_export_plot(input, out, title, columns);
  } catch (const FormatError& e) {
    return fail(kFormat, "format", e.what());
  } catch (const DomainError& e) {
    return fail(kFormat, "domain", e.what());
  } catch (const ShapeError& e) {
    return fail(kFormat, "shape", e.what());
  } catch (const SolverError& e) {
    return fail(kSolver, "solver", e.what());
  } catch (const LineSearchError& e) {
    return fail(kLineSearch, "line_search", e.what());
  } catch (const IoError& e) {
    return fail(kIo, "io", e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(kIo, "io", e.what());
  } catch (const UsageError& e) {
    return fail(kUsage, "usage", e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, "internal", e.what());
  }
}
