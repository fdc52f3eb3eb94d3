#include "ddtd/config.hpp"
#include "ddtd/driver.hpp"
#include "ddtd/field.hpp"
#include "ddtd/initgen.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

int cmd_init(const std::string& problem_name, int count,
             const std::string& out_dir, double vmin, double vmax,
             const std::string& dims_str, double element_length) {
  std::array<int, 3> dims{0, 0, 0};
  if (!dims_str.empty()) {
    std::istringstream in(dims_str);
    for (int a = 0; a < 3 && (in >> dims[a]); ++a) {
    }
  }
  const ddtd::ProblemSpec problem =
      ddtd::make_problem(problem_name, dims, element_length);
  ddtd::SweepConfig sweep;
  sweep.volume_min = vmin;
  sweep.volume_max = vmax;
  const std::vector<ddtd::DensityField> fields =
      ddtd::generate_initial_set(problem, count, sweep);

  fs::create_directories(out_dir);
  std::ofstream index(fs::path(out_dir) / "index.csv");
  index << "index,file,volume\n";
  for (size_t i = 0; i < fields.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "field_%04zu.ddtd", i);
    ddtd::write_field_binary((fs::path(out_dir) / name).string(), fields[i]);
    char vol[32];
    std::snprintf(vol, sizeof(vol), "%.17g",
                  ddtd::volume(fields[i], problem.mesh));
    index << i << ',' << name << ',' << vol << '\n';
  }
  std::cout << "wrote " << fields.size() << " fields to " << out_dir << '\n';
  return 0;
}

int cmd_run(const std::string& config_path, bool verbose) {
  const ddtd::RunConfig config = ddtd::load_config_file(config_path);
  ddtd::StepObserver observer;
  if (verbose) {
    observer = [](const std::string& step) {
      std::cerr << "  step: " << step << '\n';
    };
  }
  const std::vector<ddtd::Sample> elites = ddtd::run(config, observer);
  std::cout << "finished with " << elites.size() << " elites in "
            << config.out_dir << '\n';
  return 0;
}

int cmd_resume(const std::string& checkpoint_path) {
  const std::vector<ddtd::Sample> elites = ddtd::resume_run(checkpoint_path);
  std::cout << "finished with " << elites.size() << " elites\n";
  return 0;
}

int cmd_export(const std::string& run_dir, const std::string& format) {
  const fs::path dir(run_dir);
  const fs::path out = dir / "export";
  fs::create_directories(out);
  if (format == "csv") {
    fs::copy_file(dir / "pareto.csv", out / "pareto.csv",
                  fs::copy_options::overwrite_existing);
    std::cout << (out / "pareto.csv").string() << '\n';
    return 0;
  }
  if (format == "vtk") {
    int n = 0;
    for (const auto& entry : fs::directory_iterator(dir / "elites")) {
      if (entry.path().extension() != ".ddtd") continue;
      const ddtd::DensityField field = ddtd::read_field(entry.path().string());
      fs::path target = out / entry.path().filename();
      target.replace_extension(".vtk");
      ddtd::write_field_vtk(target.string(), field);
      ++n;
    }
    std::cout << "wrote " << n << " VTK files to " << out.string() << '\n';
    return 0;
  }
  std::cerr << "unknown export format: " << format << '\n';
  return 1;
}

int cmd_hv(const std::string& run_dir) {
  std::ifstream in(fs::path(run_dir) / "hv_trace.csv");
  if (!in) {
    std::cerr << "no hv_trace.csv in " << run_dir << '\n';
    return 1;
  }
  std::cout << in.rdbuf();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PCA-based data-driven topology design"};
  app.require_subcommand(1);

  auto* init = app.add_subcommand("init", "generate an initial field set");
  std::string init_problem = "mech2d", init_out = "init_set", init_dims;
  int init_count = 24;
  double init_vmin = 0.1, init_vmax = 0.5, init_elen = 0.01;
  init->add_option("--problem", init_problem, "built-in problem name");
  init->add_option("--count", init_count, "number of fields");
  init->add_option("--out", init_out, "output directory")->required();
  init->add_option("--vmin", init_vmin, "smallest volume fraction");
  init->add_option("--vmax", init_vmax, "largest volume fraction");
  init->add_option("--dims", init_dims, "mesh extents, e.g. \"40 20\"");
  init->add_option("--element-length", init_elen, "element edge length");

  auto* run = app.add_subcommand("run", "run the optimization loop");
  std::string run_config;
  bool run_verbose = false;
  run->add_option("--config", run_config, "run configuration file")
      ->required();
  run->add_flag("--verbose", run_verbose, "log every pipeline step");

  auto* resume = app.add_subcommand("resume", "continue from a checkpoint");
  std::string resume_ckpt;
  resume->add_option("--checkpoint", resume_ckpt, "checkpoint file")
      ->required();

  auto* exp = app.add_subcommand("export", "export run artifacts");
  std::string export_run, export_format = "csv";
  exp->add_option("--run", export_run, "run output directory")->required();
  exp->add_option("--format", export_format, "csv or vtk");

  auto* hv = app.add_subcommand("hv", "print the hypervolume trace");
  std::string hv_run;
  hv->add_option("--run", hv_run, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (init->parsed()) {
      return cmd_init(init_problem, init_count, init_out, init_vmin,
                      init_vmax, init_dims, init_elen);
    }
    if (run->parsed()) return cmd_run(run_config, run_verbose);
    if (resume->parsed()) return cmd_resume(resume_ckpt);
    if (exp->parsed()) return cmd_export(export_run, export_format);
    if (hv->parsed()) return cmd_hv(hv_run);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
