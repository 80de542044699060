#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "prc/experiment.hpp"

using namespace prc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("prc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

const char* kSmallConfig = R"(# small grid
seed = 7
folds = 3
M = 30
trees = 15

[dataset Synth]
synth = 150, 0.03, 4

[method IR.B]
[method RC.B]
[method PF.R/B]
eta = 0.3
)";

}  // namespace

TEST(Config, ParsesDefaultsAndOverrides) {
  const auto cfg = parse_config(kSmallConfig);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.folds, 3u);
  ASSERT_EQ(cfg.datasets.size(), 1u);
  ASSERT_TRUE(cfg.datasets[0].synth.has_value());
  EXPECT_EQ(cfg.datasets[0].synth->n, 150u);
  EXPECT_EQ(cfg.datasets[0].synth->seed, 4u);
  ASSERT_EQ(cfg.methods.size(), 3u);
  EXPECT_EQ(cfg.methods[0].config.inference.particles, 30u);
  EXPECT_EQ(cfg.methods[2].config.inference.eta, 0.3);
  EXPECT_EQ(cfg.methods[0].config.inference.eta, 0.1);
  EXPECT_EQ(cfg.methods[2].config.learner.forest.trees, 15u);
}

TEST(Config, PaperDefaults) {
  const auto cfg = parse_config("[dataset s]\nsynth = 20, 0.1\n[method PF.R/B]\n");
  EXPECT_EQ(cfg.folds, 10u);
  EXPECT_EQ(cfg.c, 0.1);
  const auto& m = cfg.methods[0].config;
  EXPECT_EQ(m.inference.particles, 100u);
  EXPECT_EQ(m.inference.eta, 0.1);
  EXPECT_EQ(m.learner.bins, 30u);
  EXPECT_EQ(m.learner.krr_ridges, (std::vector<double>{1, 0.1, 0.01, 0.001}));
  EXPECT_EQ(m.learner.krr_widths, (std::vector<double>{0.01, 0.1, 1, 10, 100}));
  EXPECT_EQ(m.learner.krr_inner_folds, 3u);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("folds = 1\n[dataset a]\nsynth = 10, 0.1\n[method IR.B]\n"), ConfigError);
  EXPECT_THROW(parse_config("[dataset a]\nsynth = 10, 0.1\n[method ZZ.B]\n"), ConfigError);
  EXPECT_THROW(parse_config("[dataset a]\nsynth = 10, 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config("bogus = 3\n[dataset a]\nsynth = 10, 0.1\n[method IR.B]\n"), ConfigError);
  EXPECT_THROW(parse_config("[dataset a]\n[method IR.B]\n"), ConfigError);
  EXPECT_THROW(parse_config("[dataset a]\nsynth = 10, 0.1\n[method IR.B]\ness = median\n"), ConfigError);
  try {
    parse_config("[dataset a]\nsynth = 10, 0.1\n[method IR.B]\nM = many\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
  auto cfg = parse_config("[dataset a]\npath = /nonexistent/file.arff\n[method IR.B]\n");
  EXPECT_THROW(run(cfg), ConfigError);
}

TEST(Table, TwoDecimalsAndMissingCells) {
  ResultGrid g;
  g.datasets = {"A"};
  g.n_targets = {2};
  g.methods = {"IR.B"};
  g.resize();
  g.values[Metric::mse][0][0] = 0.123;
  const auto csv = render_table(g, Metric::mse, TableFormat::csv);
  EXPECT_NE(csv.find("A,2,0.12\n"), std::string::npos);
  EXPECT_NE(csv.find("Avg Rank,,1.00\n"), std::string::npos);

  ResultGrid h;
  h.datasets = {"A", "B"};
  h.n_targets = {2, 3};
  h.methods = {"m1", "m2", "m3"};
  h.resize();
  h.values[Metric::mae] = {{0.5, 0.2, 0.9}, {0.3, std::numeric_limits<double>::quiet_NaN(), 0.1}};
  const auto text = render_table(h, Metric::mae, TableFormat::text);
  EXPECT_NE(text.find("missing"), std::string::npos);
  const auto ranks = avg_rank_partial(h.values[Metric::mae], true);
  const auto hcsv = render_table(h, Metric::mae, TableFormat::csv);
  EXPECT_NE(hcsv.find("Avg Rank,," + detail::fixed2(ranks[0]) + "," + detail::fixed2(ranks[1]) + "," +
                      detail::fixed2(ranks[2])),
            std::string::npos);
  // csv and text carry the same numbers
  for (const char* token : {"0.50", "0.20", "0.90", "0.30", "0.10", "missing"}) {
    EXPECT_NE(hcsv.find(token), std::string::npos) << token;
    EXPECT_NE(text.find(token), std::string::npos) << token;
  }
}

TEST(Run, WritesTablesDeterministically) {
  const auto dir = fresh_dir("run");
  auto cfg = parse_config(kSmallConfig);
  cfg.output_dir = (dir / "a").string();
  const auto s1 = run(cfg);
  EXPECT_EQ(s1.exit_code, 0);
  cfg.output_dir = (dir / "b").string();
  run(cfg);
  for (const char* f : {"mse.csv", "mse.txt", "mae.csv", "mae.txt", "zero_one.csv", "zero_one.txt", "results.csv",
                        "folds.csv", "manifest.json"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;

  const auto csv = slurp(dir / "a" / "mse.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "Dataset,L,IR.B,RC.B,PF.R/B");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);

  const auto grid = read_results(dir / "a");
  EXPECT_EQ(render_table(grid, Metric::zero_one, TableFormat::csv), slurp(dir / "a" / "zero_one.csv"));

  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["methods"][2]["eta"], 0.3);
  EXPECT_EQ(manifest["methods"][2]["M"], 30);
  EXPECT_EQ(manifest["cells"].size(), 3u);
}

TEST(Run, FailingCellIsRecordedAndGridContinues) {
  const auto dir = fresh_dir("fail");
  auto cfg = parse_config("[dataset tiny]\nsynth = 2, 0.1\n[dataset ok]\nsynth = 40, 0.1\n[method IR.B]\n");
  cfg.folds = 2;
  cfg.output_dir = dir.string();
  const auto s = run(cfg);
  EXPECT_EQ(s.exit_code, 1);
  EXPECT_FALSE(s.cells[0].ok);
  EXPECT_TRUE(s.cells[1].ok);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["cells"][0]["status"], "failed");
  EXPECT_FALSE(manifest["cells"][0]["error"].get<std::string>().empty());
  EXPECT_NE(slurp(dir / "mse.csv").find("tiny,2,missing"), std::string::npos);
}

TEST(Export, RecordsPerParticle) {
  ParticleCloud c;
  c.order = {0, 1, 2};
  c.paths = Matrix::Random(3, 3);
  c.stage_log_weights = Matrix::Random(3, 3);
  c.stage_log_density = Matrix::Random(3, 3);
  c.resample_corrections = {-std::log(3.0), -std::log(3.0), -std::log(3.0)};
  for (Eigen::Index m = 0; m < 3; ++m) {
    c.log_weights.push_back(c.stage_log_weights.row(m).sum() + c.resample_corrections[std::size_t(m)]);
    c.log_density.push_back(c.stage_log_density.row(m).sum());
  }
  c.ess_trace = {3, 2, 2};
  std::ostringstream out;
  EXPECT_EQ(export_paths(c, 17, out), 3u);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(nlohmann::json::parse(line)["record"], "instance");
  int particles = 0;
  while (std::getline(in, line)) {
    const auto rec = nlohmann::json::parse(line);
    const auto m = rec["particle_id"].get<std::size_t>();
    EXPECT_EQ(rec["instance_id"], 17);
    EXPECT_EQ(rec["path"].size(), 3u);
    for (int j = 0; j < 3; ++j) EXPECT_EQ(rec["path"][j].get<double>(), c.paths(Eigen::Index(m), j));
    double sum = rec["resample_correction"].get<double>();
    for (const auto& w : rec["stage_log_weights"]) sum += w.get<double>();
    EXPECT_NEAR(sum, rec["log_weight"].get<double>(), 1e-10);
    ++particles;
  }
  EXPECT_EQ(particles, 3);
}

TEST(Export, SynthRunMassAndGeometry) {
  // Protocol-sized run: N = 1000, 10 folds, M = 100, 100 trees.
  const auto dir = fresh_dir("export");
  auto cfg = parse_config(
      "seed = 3\nexport_paths = true\n"
      "[dataset Synth]\nsynth = 1000, 0.03, 5\n[method PF.R/B]\n");
  cfg.output_dir = dir.string();
  ASSERT_EQ(run(cfg).exit_code, 0);
  std::ifstream in(dir / "paths" / "Synth__PF_R_B.jsonl");
  ASSERT_TRUE(in.good());

  // Mode locations on each fold's standardized scale.
  const auto raw = generate_synth(1000, 0.03, 5);
  const auto plan = kfold(1000, 10, 3);
  std::vector<Matrix> modes;
  std::vector<double> radius;
  for (std::size_t f = 0; f < 10; ++f) {
    const auto scaler = fit_scaler(raw.subset(plan.train_indices(f)));
    Matrix m(2, 2);
    m << 1, 1, -1, -1;
    modes.push_back(scaler.targets.apply(m));
    radius.push_back(3.0 * std::sqrt(2.0) * 0.03 / scaler.targets.stds.minCoeff());
  }

  std::string line;
  double log_z = 0.0;
  std::size_t fold = 0;
  std::vector<double> weights;
  std::size_t instances = 0, total = 0, near_mode = 0;
  auto close_instance = [&] {
    if (weights.empty()) return;
    EXPECT_NEAR(smc::log_sum_exp(weights), log_z, 1e-9);
    weights.clear();
  };
  while (std::getline(in, line)) {
    const auto rec = nlohmann::json::parse(line);
    if (rec["record"] == "instance") {
      close_instance();
      log_z = detail::from_num(rec["log_z"]);
      fold = rec["fold"].get<std::size_t>();
      ++instances;
      continue;
    }
    weights.push_back(detail::from_num(rec["log_weight"]));
    Vector p(2);
    p << rec["path"][0].get<double>(), rec["path"][1].get<double>();
    const double d = std::min((p - modes[fold].row(0).transpose()).norm(), (p - modes[fold].row(1).transpose()).norm());
    near_mode += d < radius[fold];
    ++total;
  }
  close_instance();
  EXPECT_EQ(instances, 1000u);
  EXPECT_GE(double(near_mode) / double(total), 0.95);
}
