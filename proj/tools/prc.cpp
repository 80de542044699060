// Command-line front end: run experiment grids, generate the synthetic
// dataset, re-render result tables and inspect exported particle paths.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "prc/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfigError = 2;

int cmd_run(const std::string& config_path) {
  const auto text = prc::read_file(config_path);
  const auto cfg = prc::parse_config(text, fs::path(config_path).parent_path());
  const auto summary = prc::run(cfg);
  for (const auto& cell : summary.cells) {
    if (cell.ok)
      std::cout << cell.dataset << "  " << cell.method << "  mse=" << prc::detail::fixed2(cell.report.mse)
                << " mae=" << prc::detail::fixed2(cell.report.mae)
                << " 0/1=" << prc::detail::fixed2(cell.report.zero_one) << '\n';
    else
      std::cerr << cell.dataset << "  " << cell.method << "  FAILED: " << cell.error << '\n';
  }
  std::cout << "results written to " << cfg.output_dir << '\n';
  return summary.exit_code == 0 ? kOk : kPartial;
}

int cmd_synth(std::size_t n, double noise, std::uint64_t seed, const std::string& out) {
  const auto data = prc::generate_synth(n, noise, seed);
  const auto csv = prc::to_csv(data);
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << csv;
  }
  return kOk;
}

int cmd_table(const std::string& dir, const std::string& metric, const std::string& format) {
  const auto grid = prc::read_results(dir);
  if (format != "text" && format != "csv") throw prc::ConfigError("format must be 'text' or 'csv'");
  std::cout << prc::render_table(grid, prc::parse_metric(metric),
                                 format == "csv" ? prc::TableFormat::csv : prc::TableFormat::text);
  return kOk;
}

int cmd_paths(const std::string& dir, std::size_t instance, const std::string& method, const std::string& dataset) {
  const fs::path root = fs::path(dir) / "paths";
  if (!fs::is_directory(root)) throw prc::ConfigError("no path exports under " + dir + " (enable export_paths)");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(root))
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::size_t printed = 0;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    bool keep = false;  // method and dataset live on the instance record; particle records follow it
    while (std::getline(in, line)) {
      const auto rec = nlohmann::json::parse(line);
      if (rec.value("instance_id", std::size_t(-1)) != instance) continue;
      if (rec.value("record", "") == "instance")
        keep = (method.empty() || rec.value("method", "") == method) &&
               (dataset.empty() || rec.value("dataset", "") == dataset);
      if (!keep) continue;
      std::cout << line << '\n';
      ++printed;
    }
  }
  if (printed == 0) {
    std::cerr << "no exported records for instance " << instance << '\n';
    return kPartial;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic regressor chains: experiments, synthetic data and particle-path export"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the dataset x method grid described by a config file");
  run->add_option("config", config_path, "Experiment config")->required();

  std::size_t n = 1000;
  double noise = 0.03;
  std::uint64_t seed = 0;
  std::string out;
  auto* synth = app.add_subcommand("synth", "Write the bimodal synthetic dataset as CSV (last 2 columns are targets)");
  synth->add_option("--n", n, "Instance count")->capture_default_str();
  synth->add_option("--noise", noise, "Noise standard deviation")->capture_default_str();
  synth->add_option("--seed", seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", out, "Output file (default stdout)");

  std::string dir;
  std::string metric = "mse";
  std::string format = "text";
  auto* table = app.add_subcommand("table", "Render a metric table from a results directory");
  table->add_option("results-dir", dir, "Directory written by 'run'")->required();
  table->add_option("--metric", metric, "mse, mae or zero_one")->capture_default_str();
  table->add_option("--format", format, "text or csv")->capture_default_str();

  std::size_t instance = 0;
  std::string method, dataset;
  auto* paths = app.add_subcommand("paths", "Print exported particle paths for one test instance");
  paths->add_option("results-dir", dir, "Directory written by 'run'")->required();
  paths->add_option("--instance", instance, "Instance id (row index in the dataset)")->required();
  paths->add_option("--method", method, "Restrict to one method key");
  paths->add_option("--dataset", dataset, "Restrict to one dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*synth) return cmd_synth(n, noise, seed, out);
    if (*table) return cmd_table(dir, metric, format);
    if (*paths) return cmd_paths(dir, instance, method, dataset);
  } catch (const prc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const prc::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPartial;
  }
  return kOk;
}
