#include "monoid/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace monoid::io {

namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw FormatError("not a number: '" + text + "'");
  }
  return value;
}

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> words(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

/// Next non-empty line, split into words; FormatError at end of input.
std::vector<std::string> next_record(std::istream& in, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    auto w = words(strip_cr(line));
    if (!w.empty()) return w;
  }
  throw FormatError(std::string("unexpected end of input, expected ") + what);
}

int parse_int(const std::string& text) {
  int value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError("not an integer: '" + text + "'");
  }
  return value;
}

void write_layers(std::ostream& out, const char* header, const LayerStack& stack) {
  out << header << '\n' << "layer_dims";
  const NetworkArchitecture arch = stack.architecture();
  for (const int n : arch.layer_dims()) out << ' ' << n;
  out << '\n';
  for (int l = 0; l < stack.depth(); ++l) {
    const Layer& layer = stack.layer(l);
    out << "A " << l + 1;
    for (Eigen::Index i = 0; i < layer.A.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.A.cols(); ++j) out << ' ' << format_double(layer.A(i, j));
    }
    out << '\n' << "b " << l + 1;
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) out << ' ' << format_double(layer.b[i]);
    out << '\n';
  }
}

std::vector<Layer> read_layers(std::istream& in, const char* header) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != header) {
    throw FormatError(std::string("missing header '") + header + "'");
  }
  auto dims_rec = next_record(in, "layer_dims");
  if (dims_rec.front() != "layer_dims" || dims_rec.size() < 4) {
    throw FormatError("expected 'layer_dims n_0 ... n_L' with L >= 2");
  }
  std::vector<int> dims;
  for (std::size_t i = 1; i < dims_rec.size(); ++i) dims.push_back(parse_int(dims_rec[i]));
  const NetworkArchitecture arch(dims);

  std::vector<Layer> layers;
  for (int l = 1; l <= arch.depth(); ++l) {
    const int rows = arch.dim(l);
    const int cols = arch.dim(l - 1);
    auto a_rec = next_record(in, "A record");
    if (a_rec.size() != static_cast<std::size_t>(2 + rows * cols) || a_rec[0] != "A" ||
        parse_int(a_rec[1]) != l) {
      throw FormatError("layer " + std::to_string(l) + ": malformed A record");
    }
    Layer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        layer.A(i, j) = parse_double(a_rec[static_cast<std::size_t>(2 + i * cols + j)]);
      }
    }
    auto b_rec = next_record(in, "b record");
    if (b_rec.size() != static_cast<std::size_t>(2 + rows) || b_rec[0] != "b" ||
        parse_int(b_rec[1]) != l) {
      throw FormatError("layer " + std::to_string(l) + ": malformed b record");
    }
    for (int i = 0; i < rows; ++i) layer.b[i] = parse_double(b_rec[static_cast<std::size_t>(2 + i)]);
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

void write_weights(std::ostream& out, const WeightStack& weights) {
  write_layers(out, kWeightsHeader, weights);
}

void write_weights(const fs::path& path, const WeightStack& weights) {
  auto out = open_out(path);
  write_weights(out, weights);
  finish(out, path);
}

WeightStack read_weights(std::istream& in) { return WeightStack(read_layers(in, kWeightsHeader)); }

WeightStack read_weights(const fs::path& path) {
  auto in = open_in(path);
  return read_weights(in);
}

void write_gradient(std::ostream& out, const WeightGradient& gradient) {
  write_layers(out, kGradientHeader, gradient);
}

WeightGradient read_gradient(std::istream& in) {
  return WeightGradient(read_layers(in, kGradientHeader));
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,v,w\n";
  for (int k = 0; k < static_cast<int>(trajectory.states.size()); ++k) {
    const Vec2& z = trajectory.states[static_cast<std::size_t>(k)];
    out << format_double(trajectory.grid.time(k)) << ',' << format_double(z[0]) << ','
        << format_double(z[1]) << '\n';
  }
}

void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory) {
  auto out = open_out(path);
  write_trajectory_csv(out, trajectory);
  finish(out, path);
}

Samples read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "t,v,w") {
    throw FormatError("trajectory CSV must start with the header 't,v,w'");
  }
  Samples samples;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 3) throw FormatError("row " + std::to_string(row) + ": expected 3 columns");
    samples.times.push_back(parse_double(cells[0]));
    samples.states.emplace_back(parse_double(cells[1]), parse_double(cells[2]));
  }
  if (samples.times.empty()) throw FormatError("trajectory CSV has no rows");
  return samples;
}

Samples read_trajectory_csv(const fs::path& path) {
  auto in = open_in(path);
  try {
    return read_trajectory_csv(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_dataset(const fs::path& dir, const Dataset& dataset) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path manifest_path = dir / "manifest.txt";
  auto manifest = open_out(manifest_path);
  manifest << kDatasetHeader << '\n'
           << "T " << format_double(dataset.grid.final_time()) << '\n'
           << "n_steps " << dataset.grid.n_steps() << '\n'
           << "K " << dataset.size() << '\n';
  for (int k = 0; k < dataset.size(); ++k) {
    const DatasetEntry& entry = dataset.entries[static_cast<std::size_t>(k)];
    const std::string name = "traj_" + std::to_string(k) + ".csv";
    write_trajectory_csv(dir / name, entry.trajectory);
    manifest << "entry " << format_double(entry.z0[0]) << ' ' << format_double(entry.z0[1]) << ' '
             << name << '\n';
  }
  finish(manifest, manifest_path);
}

Dataset read_dataset(const fs::path& manifest_path) {
  auto in = open_in(manifest_path);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kDatasetHeader) {
    throw FormatError(manifest_path.string() + ": missing header '" + kDatasetHeader + "'");
  }
  auto expect = [&](const char* key) {
    auto rec = next_record(in, key);
    if (rec.size() != 2 || rec[0] != key) {
      throw FormatError(manifest_path.string() + ": expected '" + key + " <value>'");
    }
    return rec[1];
  };
  const double T = parse_double(expect("T"));
  const int n_steps = parse_int(expect("n_steps"));
  const int K = parse_int(expect("K"));
  if (K <= 0) throw FormatError(manifest_path.string() + ": K must be positive");

  Dataset data;
  data.grid = TimeGrid(T, n_steps);
  const fs::path base = manifest_path.parent_path();
  for (int k = 0; k < K; ++k) {
    auto rec = next_record(in, "entry");
    if (rec.size() != 4 || rec[0] != "entry") {
      throw FormatError(manifest_path.string() + ": expected 'entry <v0> <w0> <csv>'");
    }
    const Vec2 z0(parse_double(rec[1]), parse_double(rec[2]));
    const Samples samples = read_trajectory_csv(base / rec[3]);
    bool on_grid = static_cast<int>(samples.times.size()) == data.grid.size();
    for (std::size_t i = 0; on_grid && i < samples.times.size(); ++i) {
      on_grid = std::abs(samples.times[i] - data.grid.time(static_cast<int>(i))) <= 1e-9 * std::max(1.0, T);
    }
    Trajectory traj;
    if (on_grid) {
      traj.grid = data.grid;
      traj.states = samples.states;
    } else {
      traj = resample_linear(samples.times, samples.states, data.grid);
    }
    if ((traj.states.front() - z0).lpNorm<Eigen::Infinity>() > 1e-12 * std::max(1.0, z0.norm())) {
      throw FormatError(manifest_path.string() + ": entry " + std::to_string(k) +
                        " does not start at its initial condition");
    }
    data.entries.push_back({z0, std::move(traj)});
  }
  while (std::getline(in, line)) {
    if (!words(strip_cr(line)).empty()) {
      throw FormatError(manifest_path.string() + ": more entries than K = " + std::to_string(K));
    }
  }
  return data;
}

void write_report_csv(std::ostream& out, const TrainReport& report) {
  out << "iter,objective,grad_norm,step,backtracks\n";
  for (const IterationRecord& rec : report.history) {
    out << rec.iter << ',' << format_double(rec.objective) << ',' << format_double(rec.grad_norm)
        << ',' << format_double(rec.step) << ',' << rec.backtracks << '\n';
  }
}

void write_report_csv(const fs::path& path, const TrainReport& report) {
  auto out = open_out(path);
  write_report_csv(out, report);
  finish(out, path);
}

void write_kkt(std::ostream& out, const KktReport& kkt) {
  out << kKktHeader << '\n'
      << "stationarity " << format_double(kkt.stationarity) << '\n'
      << "complementarity " << format_double(kkt.complementarity) << '\n'
      << "feasibility " << format_double(kkt.feasibility) << '\n'
      << "lambda " << format_double(kkt.lambda) << '\n'
      << "weight_norm_sq " << format_double(kkt.weight_norm_sq) << '\n'
      << "ball_C " << (kkt.ball_C ? format_double(*kkt.ball_C) : std::string("none")) << '\n';
}

void write_field_trajectory(const fs::path& dir, const FieldTrajectory& fields, int stride) {
  if (stride <= 0) throw DomainError("snapshot stride must be positive");
  std::error_code ec;
  fs::create_directories(dir, ec);
  const int count = static_cast<int>(fields.v_fields.size());
  const fs::path grid_path = dir / "grid.txt";
  auto grid = open_out(grid_path);
  const SpaceGrid& s = fields.space;
  int snapshots = 0;
  for (int k = 0; k < count; k += stride) ++snapshots;
  grid << kGridHeader << '\n'
       << "dim " << s.dim << '\n'
       << "nx " << s.nx << '\n'
       << "ny " << (s.dim == 2 ? s.ny : 1) << '\n'
       << "h " << format_double(s.h) << '\n'
       << "T " << format_double(fields.grid.final_time()) << '\n'
       << "n_steps " << fields.grid.n_steps() << '\n'
       << "stride " << stride << '\n'
       << "snapshots " << snapshots << '\n';
  finish(grid, grid_path);

  for (int k = 0; k < count; k += stride) {
    const fs::path path = dir / ("field_" + std::to_string(k) + ".csv");
    auto out = open_out(path);
    out << "i,j,v,w\n";
    const auto& v = fields.v_fields[static_cast<std::size_t>(k)];
    const auto& w = fields.w_fields[static_cast<std::size_t>(k)];
    for (int idx = 0; idx < s.size(); ++idx) {
      const auto i = static_cast<std::size_t>(idx);
      out << idx % s.nx << ',' << idx / s.nx << ',' << format_double(v[i]) << ','
          << format_double(w[i]) << '\n';
    }
    finish(out, path);
  }
}

}  // namespace monoid::io
