#include "oatdcc/runner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace oatdcc;

int main(int argc, char** argv) {
  CLI::App app{"Orbital-adaptive TDCCD / MCTDHF collision runner"};
  std::string config_path, method, output;
  double dt = 0.0, t_final = -1.0;
  std::uint64_t seed = 0;
  bool relax = false, prepare = false;
  std::vector<std::string> cmp;

  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--method", method, "mctdhf | oatdccd | tdhf | tdccd-fixed");
  app.add_option("--dt", dt, "time step");
  app.add_option("--t-final", t_final, "final time");
  app.add_flag("--relax", relax, "only relax the bound ground state");
  app.add_flag("--prepare", prepare, "prepare the initial states and stop");
  app.add_option("--compare", cmp, "compare the densities of two run directories (report files go to --output)")->expected(2);
  app.add_option("--output", output, "output directory");
  app.add_option("--seed", seed, "random seed for the initial orbitals");
  CLI11_PARSE(app, argc, argv);

  try {
    if (!cmp.empty()) {
      const CompareReport r = compare(cmp[0], cmp[1]);
      if (!output.empty()) {
        std::filesystem::create_directories(output);
        write_compare_report(r, output + "/compare.csv", output + "/compare.json");
      }
      std::cout << "snapshots " << r.t.size() << ", max |n_A - n_B| = " << r.overall_max << "\n";
      return 0;
    }
    if (relax && prepare) throw std::invalid_argument("--relax and --prepare are mutually exclusive");

    RunConfig c;
    if (!config_path.empty()) c = load_config(config_path);
    if (!method.empty()) c.method = method;
    if (app.count("--dt")) c.dt = dt;
    if (app.count("--t-final")) c.t_final = t_final;
    if (app.count("--seed")) c.seed = seed;
    if (!output.empty()) c.output = output;
    const Workflow w = relax ? Workflow::relax : prepare ? Workflow::prepare : Workflow::propagate;
    return run(c, w, std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
