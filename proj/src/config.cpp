#include "monoid/config.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "monoid/io.hpp"

namespace monoid {

namespace pt = boost::property_tree;

PdeModelConfig RunConfig::pde_model() const {
  return {nu, model.delta, model.forcing, space};
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"model", {"delta", "f_v", "f_w", "nu", "space_dim", "nx", "ny", "h"}},
      {"fh", {"a", "b", "c", "d", "eta", "gamma"}},
      {"network", {"layer_dims"}},
      {"activation", {"kind", "epsilon"}},
      {"time", {"T", "dt"}},
      {"train",
       {"alpha", "ball_C", "terminal_weight", "max_iters", "grad_tol", "c1", "backtrack",
        "max_backtracks", "bb_variant", "step_min", "step_max", "initial_step", "seed",
        "init_scale", "adjoint", "newton_tol", "newton_max_iter"}},
      {"io", {"output_dir", "dataset", "weights"}},
  };
  return keys;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const std::string& key) const {
    if (tree_ == nullptr) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }

  void number(const std::string& key, double& target) const {
    if (auto v = raw(key)) target = parse(key, *v);
  }

  void integer(const std::string& key, int& target) const {
    if (auto v = raw(key)) {
      const double d = parse(key, *v);
      if (d != static_cast<int>(d)) fail(key, "expected an integer");
      target = static_cast<int>(d);
    }
  }

  void text(const std::string& key, std::string& target) const {
    if (auto v = raw(key)) target = *v;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw FormatError("[" + name_ + "] " + key + ": " + why);
  }

 private:
  double parse(const std::string& key, const std::string& value) const {
    try {
      return io::parse_double(value);
    } catch (const FormatError&) {
      fail(key, "not a number: '" + value + "'");
    }
  }

  const pt::ptree* tree_;
  std::string name_;
};

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    std::istringstream cell(item);
    int n = 0;
    if (!(cell >> n)) throw FormatError("[network] layer_dims: expected comma-separated integers");
    dims.push_back(n);
  }
  return dims;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw FormatError("config: unknown section [" + section + "]");
    if (!body.data().empty()) throw FormatError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw FormatError("config: unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
  auto section = [&](const char* name) {
    auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
  };

  RunConfig cfg;
  const Section model = section("model");
  model.number("delta", cfg.model.delta);
  model.number("f_v", cfg.model.forcing.v);
  model.number("f_w", cfg.model.forcing.w);
  model.number("nu", cfg.nu);
  model.integer("space_dim", cfg.space.dim);
  model.integer("nx", cfg.space.nx);
  model.integer("ny", cfg.space.ny);
  model.number("h", cfg.space.h);

  const Section fh = section("fh");
  fh.number("a", cfg.fh.a);
  fh.number("b", cfg.fh.b);
  fh.number("c", cfg.fh.c);
  fh.number("d", cfg.fh.d);
  fh.number("eta", cfg.fh.eta);
  fh.number("gamma", cfg.fh.gamma);

  if (auto dims = section("network").raw("layer_dims")) {
    cfg.architecture = NetworkArchitecture(parse_dims(*dims));
  }

  const Section activation = section("activation");
  std::string kind = cfg.activation.name();
  double epsilon = cfg.activation.epsilon();
  activation.text("kind", kind);
  activation.number("epsilon", epsilon);
  cfg.activation = parse_activation(kind, epsilon);

  const Section time = section("time");
  time.number("T", cfg.final_time);
  time.number("dt", cfg.dt);

  const Section train = section("train");
  TrainConfig& tc = cfg.train;
  train.number("alpha", tc.objective.alpha);
  train.number("terminal_weight", tc.objective.terminal_weight);
  if (auto c = train.raw("ball_C"); c && *c != "none") {
    double value = 0.0;
    train.number("ball_C", value);
    tc.ball_C = value;
  }
  train.integer("max_iters", tc.max_iters);
  train.number("grad_tol", tc.grad_tol);
  train.number("c1", tc.armijo.c1);
  train.number("backtrack", tc.armijo.backtrack);
  train.integer("max_backtracks", tc.armijo.max_backtracks);
  if (auto v = train.raw("bb_variant")) tc.bb.variant = parse_bb_variant(*v);
  train.number("step_min", tc.bb.step_min);
  train.number("step_max", tc.bb.step_max);
  train.number("initial_step", tc.bb.initial_step);
  if (auto v = train.raw("seed")) {
    try {
      tc.seed = std::stoull(*v);
    } catch (const std::exception&) {
      train.fail("seed", "expected an unsigned integer");
    }
  }
  train.number("init_scale", tc.init_scale);
  if (auto v = train.raw("adjoint")) tc.adjoint = parse_adjoint_mode(*v);
  train.number("newton_tol", tc.newton.tol);
  train.integer("newton_max_iter", tc.newton.max_iter);

  const Section io = section("io");
  if (auto v = io.raw("output_dir")) cfg.output_dir = *v;
  if (auto v = io.raw("dataset")) cfg.dataset = *v;
  if (auto v = io.raw("weights")) cfg.weights = *v;

  tc.validate();
  cfg.space.validate();
  if (!(cfg.nu > 0.0)) throw DomainError("[model] nu must be positive");
  if (!(cfg.model.delta >= 0.0)) throw DomainError("[model] delta must be >= 0");
  (void)cfg.time_grid();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_run_config(in);
}

void write_run_config(std::ostream& out, const RunConfig& cfg) {
  using io::format_double;
  const TrainConfig& tc = cfg.train;
  out << "[model]\n"
      << "delta = " << format_double(cfg.model.delta) << '\n'
      << "f_v = " << format_double(cfg.model.forcing.v) << '\n'
      << "f_w = " << format_double(cfg.model.forcing.w) << '\n'
      << "nu = " << format_double(cfg.nu) << '\n'
      << "space_dim = " << cfg.space.dim << '\n'
      << "nx = " << cfg.space.nx << '\n'
      << "ny = " << cfg.space.ny << '\n'
      << "h = " << format_double(cfg.space.h) << "\n\n"
      << "[fh]\n"
      << "a = " << format_double(cfg.fh.a) << '\n'
      << "b = " << format_double(cfg.fh.b) << '\n'
      << "c = " << format_double(cfg.fh.c) << '\n'
      << "d = " << format_double(cfg.fh.d) << '\n'
      << "eta = " << format_double(cfg.fh.eta) << '\n'
      << "gamma = " << format_double(cfg.fh.gamma) << "\n\n"
      << "[network]\n"
      << "layer_dims = ";
  const auto& dims = cfg.architecture.layer_dims();
  for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? "," : "") << dims[i];
  out << "\n\n"
      << "[activation]\n"
      << "kind = " << cfg.activation.name() << '\n'
      << "epsilon = " << format_double(cfg.activation.epsilon()) << "\n\n"
      << "[time]\n"
      << "T = " << format_double(cfg.final_time) << '\n'
      << "dt = " << format_double(cfg.dt) << "\n\n"
      << "[train]\n"
      << "alpha = " << format_double(tc.objective.alpha) << '\n'
      << "terminal_weight = " << format_double(tc.objective.terminal_weight) << '\n'
      << "ball_C = " << (tc.ball_C ? format_double(*tc.ball_C) : std::string("none")) << '\n'
      << "max_iters = " << tc.max_iters << '\n'
      << "grad_tol = " << format_double(tc.grad_tol) << '\n'
      << "c1 = " << format_double(tc.armijo.c1) << '\n'
      << "backtrack = " << format_double(tc.armijo.backtrack) << '\n'
      << "max_backtracks = " << tc.armijo.max_backtracks << '\n'
      << "bb_variant = " << (tc.bb.variant == BbVariant::bb1 ? "BB1" : "BB2") << '\n'
      << "step_min = " << format_double(tc.bb.step_min) << '\n'
      << "step_max = " << format_double(tc.bb.step_max) << '\n'
      << "initial_step = " << format_double(tc.bb.initial_step) << '\n'
      << "seed = " << tc.seed << '\n'
      << "init_scale = " << format_double(tc.init_scale) << '\n'
      << "adjoint = " << to_string(tc.adjoint) << '\n'
      << "newton_tol = " << format_double(tc.newton.tol) << '\n'
      << "newton_max_iter = " << tc.newton.max_iter << "\n\n"
      << "[io]\n"
      << "output_dir = " << cfg.output_dir.string() << '\n'
      << "dataset = " << cfg.dataset.string() << '\n'
      << "weights = " << cfg.weights.string() << '\n';
}

void apply_fh_overrides(RunConfig& cfg, const std::string& overrides) {
  std::istringstream ss(overrides);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (boost::algorithm::trim_copy(item).empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw FormatError("--params: expected key=value, got '" + item + "'");
    const std::string key = boost::algorithm::trim_copy(item.substr(0, eq));
    const double value = io::parse_double(boost::algorithm::trim_copy(item.substr(eq + 1)));
    if (key == "a") cfg.fh.a = value;
    else if (key == "b") cfg.fh.b = value;
    else if (key == "c") cfg.fh.c = value;
    else if (key == "d") cfg.fh.d = value;
    else if (key == "eta") cfg.fh.eta = value;
    else if (key == "gamma") cfg.fh.gamma = value;
    else if (key == "f_v") cfg.model.forcing.v = value;
    else if (key == "f_w") cfg.model.forcing.w = value;
    else throw FormatError("--params: unknown parameter '" + key + "'");
  }
}

}  // namespace monoid
