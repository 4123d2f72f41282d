#include "doctest.h"

#include "oatdcc/io.hpp"
#include "oatdcc/runner.hpp"
#include "support/random_instances.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace oatdcc;
namespace fs = std::filesystem;

namespace {

double max_abs(const MatrixXc& m) { return m.cwiseAbs().maxCoeff(); }

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("oatdcc_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunConfig tiny_config(const std::string& out) {
  RunConfig c;
  c.half_width = 8.0;
  c.n_grid = 32;
  c.n_particles = 2;
  c.n_orbitals = 3;
  c.wp_x0 = 4.0;
  c.relax_ds = 0.02;
  c.relax_tol = 1e-6;
  c.dt = 0.01;
  c.t_final = 0.05;
  c.density_stride = 2;
  c.output = out;
  return c;
}

}  // namespace

TEST_CASE("config parsing, validation and round trip") {
  const RunConfig c = parse_config(
      "# comment\n"
      "method = mctdhf\n"
      "\n"
      "n_grid=128\n"
      "dt = 0.0025  \n"
      "squared_distance = true\n"
      "seed = 17\n"
      "output = out/dir\n");
  CHECK(c.method == "mctdhf");
  CHECK(c.n_grid == 128);
  CHECK(c.dt == 0.0025);
  CHECK(c.squared_distance);
  CHECK(c.seed == 17);
  CHECK(c.output == "out/dir");
  CHECK(c.t_final == 30.0);
  CHECK_NOTHROW(validate(c));

  RunConfig back;
  for (const auto& [k, v] : config_entries(c)) set_config_value(back, k, v);
  CHECK(config_entries(back) == config_entries(c));
  CHECK(back.dt == c.dt);
  CHECK(back.eps == c.eps);

  CHECK_THROWS_AS(parse_config("nonsense = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("dt = fast\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("n_grid = 12.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("just a line\n"), std::invalid_argument);

  auto invalid = [](const std::string& text) {
    const RunConfig bad = parse_config(text);
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  };
  invalid("dt = -0.1\n");
  invalid("n_grid = 48\n");
  invalid("method = ccsd\n");
  invalid("integrator = euler\n");
  invalid("n_particles = 9\n");
  invalid("wp_sigma = 0\n");
  invalid("stride = 0\n");
  CHECK_THROWS(load_config("/nonexistent/path.cfg"));
}

TEST_CASE("energy.csv round trip is exact") {
  TempDir d("csv");
  std::vector<ObservableRecord> recs;
  std::mt19937_64 rng(1);
  for (int k = 0; k < 5; ++k) {
    ObservableRecord r;
    r.t = 0.005 * k;
    r.energy = testing_support::random_cplx(rng, 10.0);
    r.norm = testing_support::random_cplx(rng, 1.0);
    r.f = 1e-3 * k / 3.0;
    recs.push_back(r);
  }
  write_energy_csv(d / "energy.csv", recs);
  CHECK(slurp(d / "energy.csv").rfind("t,ReE,ImE,norm_re,norm_im,f_t\n", 0) == 0);
  const auto back = read_energy_csv(d / "energy.csv");
  REQUIRE(back.size() == recs.size());
  for (std::size_t k = 0; k < recs.size(); ++k) {
    CHECK(back[k].t == recs[k].t);
    CHECK(back[k].energy == recs[k].energy);
    CHECK(back[k].norm == recs[k].norm);
    CHECK(back[k].f == recs[k].f);
  }
}

TEST_CASE("density.bin round trip and corruption") {
  TempDir d("dens");
  std::mt19937_64 rng(2);
  std::vector<DensitySnapshot> snaps;
  for (int k = 0; k < 3; ++k) snaps.push_back({0.1 * k, testing_support::random_matrix(rng, 16, 1, 1.0).col(0)});
  write_density_bin(d / "density.bin", 8, snaps);
  const DensityFile f = read_density_bin(d / "density.bin");
  CHECK(f.version == 1);
  CHECK(f.n_basis == 16);
  CHECK(f.n_grid == 8);
  REQUIRE(f.snapshots.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(f.snapshots[k].t == snaps[k].t);
    CHECK(max_abs(f.snapshots[k].n - snaps[k].n) == 0.0);
  }
  const std::string bytes = slurp(d / "density.bin");
  CHECK(bytes.substr(0, 4) == "OATD");
  CHECK(bytes.size() == 4 + 4 * 4 + 3 * (8 + 16 * 16));

  std::ofstream(d / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 7);
  CHECK_THROWS_AS(read_density_bin(d / "short.bin"), std::runtime_error);
  std::ofstream(d / "magic.bin", std::ios::binary) << "XXXX" << bytes.substr(4);
  CHECK_THROWS_AS(read_density_bin(d / "magic.bin"), std::runtime_error);
  CHECK_THROWS(write_density_bin(d / "bad.bin", 5, snaps));
}

TEST_CASE("checkpoints restore the state exactly") {
  TempDir d("chk");
  const GridSpec g = build_grid(8.0, 32);
  McState mc = random_initial_state(g, 2, 4, alternating_spins(4), 3);
  mc.t = 1.25;
  write_checkpoint(d / "mc.chk", mc);
  const Checkpoint a = read_checkpoint(d / "mc.chk");
  REQUIRE(std::holds_alternative<McState>(a));
  const McState& m2 = std::get<McState>(a);
  CHECK(max_abs(m2.ket - mc.ket) == 0.0);
  CHECK(max_abs(m2.coeff - mc.coeff) == 0.0);
  CHECK(m2.space.dets == mc.space.dets);
  CHECK(m2.space.spins == mc.space.spins);
  CHECK(m2.space.n_up == mc.space.n_up);
  CHECK(m2.dx == mc.dx);
  CHECK(m2.t == mc.t);

  CCState cc;
  cc.orbitals = hermitian_pair(mc.ket, 2, g.dx);
  std::mt19937_64 rng(4);
  cc.orbitals.bra += testing_support::random_matrix(rng, 4, g.n_basis(), 0.01);
  cc.amp.tau = testing_support::random_antisym(rng, 2, 2, 2, 2, 0.1);
  cc.amp.lambda = testing_support::random_antisym(rng, 2, 2, 2, 2, 0.1);
  cc.t = 0.5;
  write_checkpoint(d / "cc.chk", cc);
  const Checkpoint b = read_checkpoint(d / "cc.chk");
  REQUIRE(std::holds_alternative<CCState>(b));
  const CCState& c2 = std::get<CCState>(b);
  CHECK(max_abs(c2.orbitals.ket - cc.orbitals.ket) == 0.0);
  CHECK(max_abs(c2.orbitals.bra - cc.orbitals.bra) == 0.0);
  CHECK((c2.amp.tau - cc.amp.tau).max_abs() == 0.0);
  CHECK((c2.amp.lambda - cc.amp.lambda).max_abs() == 0.0);
  CHECK(c2.n_occ() == 2);
  CHECK(c2.t == 0.5);

  CHECK_THROWS_AS(read_checkpoint(d / "missing.chk"), std::runtime_error);
}

TEST_CASE("runs write every output and are bitwise reproducible") {
  TempDir d("run");
  std::ostringstream log;
  const RunConfig c1 = tiny_config(d / "a");
  const RunConfig c2 = tiny_config(d / "b");
  CHECK(run(c1, Workflow::propagate, log) == 0);
  CHECK(run(c2, Workflow::propagate, log) == 0);
  for (const char* f : {"manifest.json", "relax.csv", "energy.csv", "density.bin", "final.chk", "initial_cc.chk"})
    CHECK(fs::exists(fs::path(d / "a") / f));
  CHECK(slurp(d / "a/energy.csv") == slurp(d / "b/energy.csv"));
  CHECK(slurp(d / "a/density.bin") == slurp(d / "b/density.bin"));

  const auto recs = read_energy_csv(d / "a/energy.csv");
  CHECK(recs.size() == 6);
  for (const auto& r : recs) CHECK(std::abs(r.norm - 1.0) < 1e-12);
  const std::string manifest = slurp(d / "a/manifest.json");
  CHECK(manifest.find("\"seed\"") != std::string::npos);
  CHECK(manifest.find("\"code_version\"") != std::string::npos);

  const CompareReport same = compare(d / "a", d / "b");
  CHECK(same.overall_max == 0.0);
  CHECK(same.t.size() == read_density_bin(d / "a/density.bin").snapshots.size());

  RunConfig other = tiny_config(d / "c");
  other.n_grid = 64;
  CHECK(run(other, Workflow::propagate, log) == 0);
  CHECK_THROWS_AS(compare(d / "a", d / "c"), std::runtime_error);

  write_compare_report(same, d / "cmp.csv", d / "cmp.json");
  CHECK(fs::exists(d / "cmp.csv"));
  CHECK(fs::exists(d / "cmp.json"));

  RunConfig bad = tiny_config(d / "bad");
  bad.dt = 0.0;
  CHECK_THROWS_AS(run(bad, Workflow::propagate, log), std::invalid_argument);
  CHECK(!fs::exists(d / "bad"));
}

TEST_CASE("both methods from one checkpoint agree for two electrons") {
  TempDir d("equiv");
  std::ostringstream log;
  RunConfig prep = tiny_config(d / "prep");
  prep.attach_wavepacket = false;
  prep.n_orbitals = 4;
  prep.relax_tol = 1e-8;
  REQUIRE(run(prep, Workflow::relax, log) == 0);

  RunConfig a = tiny_config(d / "mc");
  a.method = "mctdhf";
  a.attach_wavepacket = false;
  a.n_orbitals = 4;
  a.initial_checkpoint = d / "prep/ground.chk";
  a.potential_substeps = 4;
  RunConfig b = a;
  b.method = "oatdccd";
  b.output = d / "cc";
  REQUIRE(run(a, Workflow::propagate, log) == 0);
  REQUIRE(run(b, Workflow::propagate, log) == 0);
  const CompareReport r = compare(d / "mc", d / "cc");
  CHECK(r.overall_max < 1e-8);
  const auto ea = read_energy_csv(d / "mc/energy.csv");
  const auto eb = read_energy_csv(d / "cc/energy.csv");
  REQUIRE(ea.size() == eb.size());
  for (std::size_t k = 0; k < ea.size(); ++k) CHECK(std::abs(ea[k].energy - eb[k].energy) < 1e-8);
}
