#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "monoid/config.hpp"
#include "monoid/io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using monoid::ActivationSpec;
using monoid::NetworkArchitecture;
using monoid::TimeGrid;
using monoid::Vec2;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("monoid_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

monoid::RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return monoid::parse_run_config(in);
}

}  // namespace

TEST_CASE("number formatting round trips") {
  for (const double x : {0.0, -0.0, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.064}) {
    CHECK(monoid::io::parse_double(monoid::io::format_double(x)) == x);
  }
  CHECK(monoid::io::format_double(0.5) == "0.5");
  CHECK_THROWS_AS(monoid::io::parse_double("1.5x"), monoid::FormatError);
  CHECK_THROWS_AS(monoid::io::parse_double(""), monoid::FormatError);
}

TEST_CASE("weights round trip reproduces the network bit for bit") {
  const auto w = oracle::random_stack(NetworkArchitecture({2, 3, 4, 2}), 12, 1.3);
  std::stringstream buf;
  monoid::io::write_weights(buf, w);
  CHECK(buf.str().rfind("monoid-weights v1\nlayer_dims 2 3 4 2\n", 0) == 0);
  const auto back = monoid::io::read_weights(buf);
  CHECK(back.flat() == w.flat());
  const auto act = ActivationSpec::smoothed_relu(0.5);
  for (const Vec2& z : {Vec2(0.1, -0.4), Vec2(3.0, 2.0), Vec2(-1.0, 0.0)}) {
    CHECK(monoid::nn_forward(z, back, act) == monoid::nn_forward(z, w, act));
  }
}

TEST_CASE("malformed weight documents are rejected") {
  const char* bad[] = {
      "",
      "monoid-grad v1\nlayer_dims 2 2 2\n",
      "monoid-weights v1\nlayer_dims 2 2\n",
      "monoid-weights v1\nlayer_dims 2 2 2\nA 1 1 0 0 1\nb 1 0 0\nA 2 1 0\n",
      "monoid-weights v1\nlayer_dims 2 2 2\nA 1 1 0 0 x\n",
  };
  for (const char* text : bad) {
    std::istringstream in(text);
    CHECK_THROWS_AS(monoid::io::read_weights(in), monoid::FormatError);
  }
}

TEST_CASE("gradient documents carry their own header") {
  const auto arch = NetworkArchitecture::uniform(3, 2);
  const auto g = monoid::WeightGradient::from_flat(arch, oracle::random_stack(arch, 2, 1.0).flat());
  std::stringstream buf;
  monoid::io::write_gradient(buf, g);
  CHECK(buf.str().rfind("monoid-grad v1\n", 0) == 0);
  CHECK(monoid::io::read_gradient(buf).flat() == g.flat());
  std::stringstream weights;
  monoid::io::write_weights(weights, oracle::random_stack(arch, 2, 1.0));
  CHECK_THROWS_AS(monoid::io::read_gradient(weights), monoid::FormatError);
}

TEST_CASE("dataset directory round trip") {
  const auto dir = scratch("dataset");
  const auto data = monoid::generate_dataset(monoid::FhParams::classic(), {}, TimeGrid(4.0, 80));
  monoid::io::write_dataset(dir, data);
  CHECK(fs::exists(dir / "manifest.txt"));
  const auto back = monoid::io::read_dataset(dir / "manifest.txt");
  REQUIRE(back.size() == data.size());
  CHECK(back.grid.n_steps() == 80);
  for (int k = 0; k < data.size(); ++k) {
    const auto& a = data.entries[static_cast<std::size_t>(k)];
    const auto& b = back.entries[static_cast<std::size_t>(k)];
    CHECK(a.z0 == b.z0);
    CHECK(a.trajectory.states == b.trajectory.states);
  }
}

TEST_CASE("corrupt manifests raise FormatError") {
  const auto dir = scratch("corrupt");
  monoid::io::write_dataset(dir, monoid::generate_dataset(monoid::FhParams::classic(), {}, TimeGrid(1.0, 10)));
  const auto manifest = dir / "manifest.txt";
  std::string original;
  {
    std::ifstream in(manifest);
    original.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto rewrite = [&](const std::string& text) {
    std::ofstream(manifest) << text;
    return manifest;
  };
  CHECK_THROWS_AS(monoid::io::read_dataset(rewrite("garbage\n")), monoid::FormatError);
  CHECK_THROWS_AS(monoid::io::read_dataset(rewrite(original.substr(0, original.find("entry 1")))),
                  monoid::FormatError);
  std::string wrong_k = original;
  wrong_k.replace(wrong_k.find("K 7"), 3, "K 9");
  CHECK_THROWS_AS(monoid::io::read_dataset(rewrite(wrong_k)), monoid::FormatError);
  rewrite(original);
  std::ofstream(dir / "traj_3.csv") << "t,v,w\n0,1\n";
  CHECK_THROWS_AS(monoid::io::read_dataset(manifest), monoid::FormatError);
  CHECK_THROWS_AS(monoid::io::read_dataset(dir / "missing.txt"), monoid::IoError);
}

TEST_CASE("off-grid samples are interpolated onto the manifest grid") {
  std::istringstream csv("t,v,w\n0,0,1\n0.5,1,1\n2,4,-2\n");
  const auto samples = monoid::io::read_trajectory_csv(csv);
  const auto tr = monoid::resample_linear(samples.times, samples.states, TimeGrid(2.0, 4));
  CHECK(tr.states[1] == Vec2(1.0, 1.0));
  CHECK(tr.states[2][0] == doctest::Approx(2.0));
  CHECK(tr.states[2][1] == doctest::Approx(0.0));
  CHECK(tr.states[4] == Vec2(4.0, -2.0));
}

TEST_CASE("config defaults, overrides and schema") {
  const auto def = parse("");
  CHECK(def.final_time == 40.0);
  CHECK(def.dt == 0.05);
  CHECK(def.time_grid().n_steps() == 800);
  CHECK(def.architecture == NetworkArchitecture::uniform(7, 2));
  CHECK(def.activation.name() == "smoothed_relu");
  CHECK(def.activation.epsilon() == 2.0);
  CHECK(def.train.objective.alpha == 0.01);
  CHECK(!def.train.ball_C);

  const auto cfg = parse(
      "[network]\nlayer_dims = 2,5,2\n[activation]\nkind = tanh\n[train]\nball_C = 0.3\n"
      "bb_variant = BB2\nseed = 17\nadjoint = paper\n[time]\nT = 2\ndt = 0.1\n");
  CHECK(cfg.architecture.layer_dims() == std::vector<int>{2, 5, 2});
  CHECK(cfg.activation.name() == "tanh");
  CHECK(cfg.train.ball_C == 0.3);
  CHECK(cfg.train.bb.variant == monoid::BbVariant::bb2);
  CHECK(cfg.train.seed == 17);
  CHECK(cfg.train.adjoint == monoid::AdjointMode::paper);
  CHECK(cfg.time_grid().n_steps() == 20);

  CHECK_THROWS_AS(parse("[trian]\nalpha = 1\n"), monoid::FormatError);
  CHECK_THROWS_AS(parse("[train]\nalhpa = 1\n"), monoid::FormatError);
  CHECK_THROWS_AS(parse("[train]\nalpha = fast\n"), monoid::FormatError);
  CHECK_THROWS_AS(parse("[train]\nmax_iters = 2.5\n"), monoid::FormatError);
  CHECK_THROWS_AS(parse("[train]\nseed = -x\n"), monoid::FormatError);
  CHECK_THROWS_AS(parse("[activation]\nkind = sigmoid\n"), monoid::FormatError);
  CHECK_THROWS_AS(parse("[train]\nalpha = -1\n"), monoid::DomainError);
  CHECK_THROWS_AS(parse("[model]\nnu = 0\n"), monoid::DomainError);
  CHECK_THROWS_AS(monoid::load_run_config("/nonexistent/monoid.ini"), monoid::IoError);
}

TEST_CASE("written config parses back to the same settings") {
  monoid::RunConfig cfg;
  cfg.train.ball_C = 0.125;
  cfg.train.seed = 9;
  cfg.fh.eta = 0.1;
  cfg.model.forcing.v = 0.25;
  cfg.activation = ActivationSpec::smoothed_relu(0.5);
  std::stringstream buf;
  monoid::write_run_config(buf, cfg);
  const auto back = monoid::parse_run_config(buf);
  CHECK(back.train.ball_C == 0.125);
  CHECK(back.train.seed == 9);
  CHECK(back.train.init_scale == cfg.train.init_scale);
  CHECK(back.fh.eta == 0.1);
  CHECK(back.model.forcing.v == 0.25);
  CHECK(back.activation.epsilon() == 0.5);
  CHECK(back.architecture == cfg.architecture);

  std::stringstream again;
  monoid::write_run_config(again, back);
  buf.clear();
  buf.seekg(0);
  CHECK(again.str() == buf.str());
}

TEST_CASE("FitzHugh-Nagumo overrides") {
  monoid::RunConfig cfg;
  monoid::apply_fh_overrides(cfg, "a=-0.3333333333333333, gamma=0.08,f_v=0.4");
  CHECK(cfg.fh.a == -0.3333333333333333);
  CHECK(cfg.fh.gamma == 0.08);
  CHECK(cfg.model.forcing.v == 0.4);
  CHECK(cfg.fh.c == -1.0);
  CHECK_THROWS_AS(monoid::apply_fh_overrides(cfg, "zeta=1"), monoid::FormatError);
  CHECK_THROWS_AS(monoid::apply_fh_overrides(cfg, "a"), monoid::FormatError);
  CHECK_THROWS_AS(monoid::apply_fh_overrides(cfg, "a=x"), monoid::FormatError);
}
