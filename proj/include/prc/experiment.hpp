#pragma once

// Experiment runner: config parsing, the dataset x method x fold grid,
// result tables, run manifest and particle-path export.
//
// Config grammar (line oriented, '#' starts a comment):
//
//   key = value              global setting or method-parameter default
//   [dataset <name>]         then: path = <file>  |  synth = <n>,<noise>[,<seed>]
//                                  n_targets = <L>
//   [method <key>]           then: any method parameter, overriding defaults
//
// Global settings: seed, folds, c, output_dir, export_paths.
// Method parameters: M, eta, ess (sum|max), mh_steps, mh_sigma, estimator
// (map|mmse), bins, bin_sampling (jitter|center), trees, prior_precision,
// kde_bandwidth, krr_alpha (list), krr_gamma (list), krr_inner_folds,
// softmax_iterations, order (list), sampler_uses_x.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prc/eval.hpp"

namespace prc {

inline constexpr const char* kVersion = "0.1.0";

struct SynthSpec {
  std::size_t n = 1000;
  double noise_std = 0.03;
  std::uint64_t seed = 0;
};

struct DatasetSpec {
  std::string name;
  std::optional<std::string> path;
  std::optional<SynthSpec> synth;
  std::optional<std::size_t> n_targets;
};

struct MethodSpec {
  std::string key;
  MethodConfig config;
  std::map<std::string, std::string> params;  ///< effective parameters, echoed in the manifest
};

struct ExperimentConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<MethodSpec> methods;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  double c = 0.1;
  std::string output_dir = "results";
  bool export_paths = false;
};

namespace detail {

inline double parse_real(const std::string& key, const std::string& v, std::size_t line) {
  const auto d = to_double(v);
  if (!d) throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects a number, got '" + v + "'");
  return *d;
}

inline std::size_t parse_count(const std::string& key, const std::string& v, std::size_t line) {
  const double d = parse_real(key, v, line);
  if (d < 0 || d != std::floor(d))
    throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects a non-negative integer");
  return static_cast<std::size_t>(d);
}

inline bool parse_flag(const std::string& key, const std::string& v, std::size_t line) {
  const auto l = lower(v);
  if (l == "true" || l == "1" || l == "yes") return true;
  if (l == "false" || l == "0" || l == "no") return false;
  throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects true or false");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v, std::size_t line) {
  std::vector<double> out;
  for (auto cell : split(v, ',')) out.push_back(parse_real(key, std::string(cell), line));
  if (out.empty()) throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects a list");
  return out;
}

/// Applies one method parameter; returns false when the key is not a method parameter.
inline bool apply_method_param(MethodConfig& m, const std::string& key, const std::string& v, std::size_t line) {
  if (key == "M") m.inference.particles = parse_count(key, v, line);
  else if (key == "eta") m.inference.eta = parse_real(key, v, line);
  else if (key == "ess") {
    if (v == "sum") m.inference.ess = smc::EssKind::inverse_sum;
    else if (v == "max") m.inference.ess = smc::EssKind::inverse_max;
    else throw ConfigError("line " + std::to_string(line) + ": ess must be 'sum' or 'max'");
  } else if (key == "mh_steps") m.inference.mh_steps = parse_count(key, v, line);
  else if (key == "mh_sigma") m.inference.mh_sigma = parse_real(key, v, line);
  else if (key == "estimator") {
    if (v == "map") m.inference.estimator = Estimator::map;
    else if (v == "mmse") m.inference.estimator = Estimator::mmse;
    else throw ConfigError("line " + std::to_string(line) + ": estimator must be 'map' or 'mmse'");
  } else if (key == "bins") m.learner.bins = parse_count(key, v, line);
  else if (key == "bin_sampling") {
    if (v == "jitter") m.learner.bin_sampling = BinSampling::jitter;
    else if (v == "center") m.learner.bin_sampling = BinSampling::center;
    else throw ConfigError("line " + std::to_string(line) + ": bin_sampling must be 'jitter' or 'center'");
  } else if (key == "trees") m.learner.forest.trees = parse_count(key, v, line);
  else if (key == "prior_precision") m.learner.prior_precision = parse_real(key, v, line);
  else if (key == "kde_bandwidth") m.learner.kde_bandwidth = parse_real(key, v, line);
  else if (key == "krr_alpha") m.learner.krr_ridges = parse_list(key, v, line);
  else if (key == "krr_gamma") m.learner.krr_widths = parse_list(key, v, line);
  else if (key == "krr_inner_folds") m.learner.krr_inner_folds = parse_count(key, v, line);
  else if (key == "softmax_iterations") m.learner.softmax.iterations = parse_count(key, v, line);
  else if (key == "order") {
    m.order.clear();
    for (double d : parse_list(key, v, line)) m.order.push_back(static_cast<std::size_t>(d));
  } else if (key == "sampler_uses_x") m.sampler_uses_x = parse_flag(key, v, line);
  else return false;
  return true;
}

}  // namespace detail

/// Relative dataset paths resolve against `base_dir`.
inline ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig cfg;
  std::map<std::string, std::pair<std::string, std::size_t>> defaults;
  struct RawMethod {
    std::string key;
    std::vector<std::tuple<std::string, std::string, std::size_t>> params;
  };
  std::vector<RawMethod> raw_methods;
  enum class Section { global, dataset, method } section = Section::global;

  const auto all = detail::lines(text);
  for (std::size_t ln = 0; ln < all.size(); ++ln) {
    const std::size_t line_no = ln + 1;
    auto line = all[ln];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      const auto inner = detail::trim(line.substr(1, line.size() - 2));
      const auto sp = inner.find_first_of(" \t");
      const auto kind = std::string(inner.substr(0, sp));
      const auto name = sp == std::string_view::npos ? std::string{} : std::string(detail::trim(inner.substr(sp)));
      if (name.empty()) throw ConfigError("line " + std::to_string(line_no) + ": section needs a name");
      if (kind == "dataset") {
        section = Section::dataset;
        cfg.datasets.push_back({name, {}, {}, {}});
      } else if (kind == "method") {
        section = Section::method;
        try {
          parse_method_key(name);
        } catch (const ConfigError& e) {
          throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
        raw_methods.push_back({name, {}});
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section '" + kind + "'");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const auto key = std::string(detail::trim(line.substr(0, eq)));
    const auto value = std::string(detail::trim(line.substr(eq + 1)));
    if (key.empty() || value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");

    switch (section) {
      case Section::global:
        if (key == "seed") cfg.seed = detail::parse_count(key, value, line_no);
        else if (key == "folds") cfg.folds = detail::parse_count(key, value, line_no);
        else if (key == "c") cfg.c = detail::parse_real(key, value, line_no);
        else if (key == "output_dir") cfg.output_dir = (base_dir / value).lexically_normal().string();
        else if (key == "export_paths") cfg.export_paths = detail::parse_flag(key, value, line_no);
        else {
          MethodConfig probe;
          if (!detail::apply_method_param(probe, key, value, line_no))
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
          defaults[key] = {value, line_no};
        }
        break;
      case Section::dataset: {
        auto& ds = cfg.datasets.back();
        if (key == "path") ds.path = (base_dir / value).lexically_normal().string();
        else if (key == "n_targets") ds.n_targets = detail::parse_count(key, value, line_no);
        else if (key == "synth") {
          const auto parts = detail::parse_list(key, value, line_no);
          if (parts.size() < 2 || parts.size() > 3)
            throw ConfigError("line " + std::to_string(line_no) + ": synth = <n>,<noise>[,<seed>]");
          ds.synth = SynthSpec{static_cast<std::size_t>(parts[0]), parts[1],
                               parts.size() == 3 ? static_cast<std::uint64_t>(parts[2]) : 0};
        } else {
          throw ConfigError("line " + std::to_string(line_no) + ": unknown dataset key '" + key + "'");
        }
        break;
      }
      case Section::method: {
        MethodConfig probe;
        if (!detail::apply_method_param(probe, key, value, line_no))
          throw ConfigError("line " + std::to_string(line_no) + ": unknown method key '" + key + "'");
        raw_methods.back().params.emplace_back(key, value, line_no);
        break;
      }
    }
  }

  if (cfg.folds < 2) throw ConfigError("folds must be at least 2");
  if (!(cfg.c > 0.0)) throw ConfigError("c must be positive");
  if (cfg.datasets.empty()) throw ConfigError("config declares no datasets");
  if (raw_methods.empty()) throw ConfigError("config declares no methods");
  for (const auto& ds : cfg.datasets) {
    if (ds.path.has_value() == ds.synth.has_value())
      throw ConfigError("dataset '" + ds.name + "' needs exactly one of path or synth");
    if (ds.synth && (ds.synth->n < 2 || !(ds.synth->noise_std > 0.0)))
      throw ConfigError("dataset '" + ds.name + "': synth needs n >= 2 and noise > 0");
  }
  for (const auto& rm : raw_methods) {
    MethodSpec spec{rm.key, {}, {}};
    for (const auto& [k, vl] : defaults) {
      detail::apply_method_param(spec.config, k, vl.first, vl.second);
      spec.params[k] = vl.first;
    }
    for (const auto& [k, v, l] : rm.params) {
      detail::apply_method_param(spec.config, k, v, l);
      spec.params[k] = v;
    }
    cfg.methods.push_back(std::move(spec));
  }
  return cfg;
}

inline Dataset load(const DatasetSpec& spec) {
  if (spec.synth) return generate_synth(spec.synth->n, spec.synth->noise_std, spec.synth->seed);
  return load_dataset(*spec.path, spec.n_targets);
}

// ---------------------------------------------------------------------------
// Result tables

enum class Metric { mse, mae, zero_one };

inline std::string metric_name(Metric m) {
  switch (m) {
    case Metric::mse: return "mse";
    case Metric::mae: return "mae";
    case Metric::zero_one: return "zero_one";
  }
  return "?";
}

inline Metric parse_metric(const std::string& s) {
  if (s == "mse") return Metric::mse;
  if (s == "mae") return Metric::mae;
  if (s == "zero_one" || s == "01" || s == "0/1") return Metric::zero_one;
  throw ConfigError("unknown metric '" + s + "' (use mse, mae or zero_one)");
}

/// Datasets x methods; NaN marks a missing cell.
struct ResultGrid {
  std::vector<std::string> datasets;
  std::vector<std::size_t> n_targets;
  std::vector<std::string> methods;
  std::map<Metric, std::vector<std::vector<double>>> values;

  void resize() {
    for (Metric m : {Metric::mse, Metric::mae, Metric::zero_one})
      values[m].assign(datasets.size(), std::vector<double>(methods.size(), std::numeric_limits<double>::quiet_NaN()));
  }
};

enum class TableFormat { csv, text };

namespace detail {
inline std::string fixed2(double v) {
  if (std::isnan(v)) return "missing";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace detail

/// Datasets as rows (with L), methods as columns, two decimals, and an
/// "Avg Rank" footer where missing cells are excluded from ranking.
inline std::string render_table(const ResultGrid& grid, Metric metric, TableFormat format) {
  const auto& vals = grid.values.at(metric);
  const auto ranks = avg_rank_partial(vals, true);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Dataset", "L"};
  header.insert(header.end(), grid.methods.begin(), grid.methods.end());
  rows.push_back(header);
  for (std::size_t d = 0; d < grid.datasets.size(); ++d) {
    std::vector<std::string> r{grid.datasets[d], std::to_string(grid.n_targets[d])};
    for (double v : vals[d]) r.push_back(detail::fixed2(v));
    rows.push_back(r);
  }
  std::vector<std::string> footer{"Avg Rank", ""};
  for (double v : ranks) footer.push_back(detail::fixed2(v));
  rows.push_back(footer);

  std::ostringstream out;
  if (format == TableFormat::csv) {
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    }
    return out.str();
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  const std::string rule(total, '-');
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto pad = std::string(width[i] - r[i].size(), ' ');
      out << (i == 0 ? r[i] + pad : pad + r[i]) << (i + 1 < r.size() ? "  " : "");
    }
    out << '\n';
  };
  out << metric_name(metric) << ":\n" << rule << '\n';
  emit(rows.front());
  out << rule << '\n';
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) emit(rows[i]);
  out << rule << '\n';
  emit(rows.back());
  out << rule << '\n';
  return out.str();
}

/// Reads the summary written by run() back into a grid.
inline ResultGrid read_results(const std::filesystem::path& dir) {
  const auto text = read_file((dir / "results.csv").string());
  ResultGrid grid;
  std::vector<std::tuple<std::string, std::string, double, double, double>> cells;
  const auto all = detail::lines(text);
  for (std::size_t ln = 1; ln < all.size(); ++ln) {
    const auto line = detail::trim(all[ln]);
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 7) throw ParseError("results.csv: expected 7 fields", ln + 1);
    const std::string ds(f[0]), method(f[2]);
    if (std::find(grid.datasets.begin(), grid.datasets.end(), ds) == grid.datasets.end()) {
      grid.datasets.push_back(ds);
      grid.n_targets.push_back(static_cast<std::size_t>(detail::to_double(f[1]).value_or(0)));
    }
    if (std::find(grid.methods.begin(), grid.methods.end(), method) == grid.methods.end()) grid.methods.push_back(method);
    const auto num = [](std::string_view s) {
      return detail::to_double(s).value_or(std::numeric_limits<double>::quiet_NaN());
    };
    if (f[3] == "ok") cells.emplace_back(ds, method, num(f[4]), num(f[5]), num(f[6]));
  }
  grid.resize();
  for (const auto& [ds, method, a, b, c] : cells) {
    const auto d = static_cast<std::size_t>(std::find(grid.datasets.begin(), grid.datasets.end(), ds) - grid.datasets.begin());
    const auto m = static_cast<std::size_t>(std::find(grid.methods.begin(), grid.methods.end(), method) - grid.methods.begin());
    grid.values[Metric::mse][d][m] = a;
    grid.values[Metric::mae][d][m] = b;
    grid.values[Metric::zero_one][d][m] = c;
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Path export (JSON lines)

namespace detail {
inline nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;  // -inf log-weights
}
inline double from_num(const nlohmann::json& j) { return j.is_null() ? kNegInf : j.get<double>(); }
inline nlohmann::json vec(const Vector& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}
}  // namespace detail

/// One summary record for the instance followed by one record per particle.
/// Non-finite log values are written as null. Returns the particle count.
inline std::size_t export_paths(const ParticleCloud& cloud, std::size_t instance_id, std::ostream& sink,
                                const nlohmann::ordered_json& extra = nlohmann::ordered_json::object()) {
  nlohmann::ordered_json head;
  head["record"] = "instance";
  head["instance_id"] = instance_id;
  for (const auto& [k, v] : extra.items()) head[k] = v;
  head["particles"] = cloud.particles();
  head["log_z"] = detail::num(cloud.log_z());
  head["ess_trace"] = cloud.ess_trace;
  head["resampled_at"] = cloud.resampled_stages();
  sink << head.dump() << '\n';
  const auto resampled = cloud.resampled_stages();
  for (std::size_t m = 0; m < cloud.particles(); ++m) {
    const auto r = static_cast<Eigen::Index>(m);
    nlohmann::ordered_json rec;
    rec["record"] = "particle";
    rec["instance_id"] = instance_id;
    rec["particle_id"] = m;
    rec["path"] = detail::vec(cloud.path(m));
    rec["log_weight"] = detail::num(cloud.log_weights[m]);
    rec["stage_log_weights"] = detail::vec(cloud.stage_log_weights.row(r).transpose());
    rec["resample_correction"] = detail::num(cloud.resample_corrections[m]);
    rec["log_density"] = detail::num(cloud.log_density[m]);
    rec["stage_log_density"] = detail::vec(cloud.stage_log_density.row(r).transpose());
    rec["resampled_at"] = resampled;
    sink << rec.dump() << '\n';
  }
  if (!sink) throw std::runtime_error("path export: write failed");
  return cloud.particles();
}

// ---------------------------------------------------------------------------
// Running a grid

struct CellOutcome {
  std::string dataset;
  std::string method;
  std::size_t n_targets = 0;
  bool ok = false;
  std::string error;
  MetricReport report;
};

struct RunSummary {
  std::vector<CellOutcome> cells;
  ResultGrid grid;
  int exit_code = 0;
};

inline std::string sanitize(std::string s) {
  for (auto& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  return s;
}

inline void write_text(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

/// Runs every dataset x method cell and writes tables, the manifest and
/// (optionally) path exports under cfg.output_dir. A failing cell is recorded
/// and the grid continues; exit_code is 1 if any cell failed.
inline RunSummary run(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  for (const auto& ds : cfg.datasets)
    if (ds.path && !fs::exists(*ds.path)) throw ConfigError("dataset file not found: " + *ds.path);
  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);

  RunSummary summary;
  auto& grid = summary.grid;
  for (const auto& m : cfg.methods) grid.methods.push_back(m.key);
  for (const auto& ds : cfg.datasets) grid.datasets.push_back(ds.name);
  grid.n_targets.assign(cfg.datasets.size(), 0);
  grid.resize();

  std::ostringstream folds_csv;
  folds_csv << std::setprecision(17) << "dataset,method,fold,mse,mae,zero_one\n";

  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    const auto& dspec = cfg.datasets[d];
    std::optional<Dataset> data;
    std::string load_error;
    try {
      data = load(dspec);
      grid.n_targets[d] = static_cast<std::size_t>(data->n_targets());
    } catch (const std::exception& e) {
      load_error = e.what();
    }
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      const auto& mspec = cfg.methods[mi];
      CellOutcome cell{dspec.name, mspec.key, grid.n_targets[d], false, load_error, {}};
      if (data) {
        try {
          const auto key = parse_method_key(mspec.key);
          const bool exporting =
              cfg.export_paths && (key.regime == Regime::monte_carlo || key.regime == Regime::particle_filter);
          std::ofstream sink;
          if (exporting) {
            fs::create_directories(out_dir / "paths");
            const auto p = out_dir / "paths" / (sanitize(dspec.name) + "__" + sanitize(mspec.key) + ".jsonl");
            sink.open(p, std::ios::binary);
            if (!sink) throw std::runtime_error("cannot write " + p.string());
          }
          PredictionSink on_prediction;
          if (exporting)
            on_prediction = [&](std::size_t fold, std::size_t instance, const Vector& truth, const Prediction& pred) {
              if (!pred.cloud) return;
              nlohmann::ordered_json extra;
              extra["dataset"] = dspec.name;
              extra["method"] = mspec.key;
              extra["fold"] = fold;
              extra["truth"] = detail::vec(truth);
              extra["prediction"] = detail::vec(pred.y_hat);
              export_paths(*pred.cloud, instance, sink, extra);
            };
          cell.report = cross_validate(*data, mspec.key, cfg.folds, cfg.seed, mspec.config, cfg.c, on_prediction);
          cell.ok = true;
          grid.values[Metric::mse][d][mi] = cell.report.mse;
          grid.values[Metric::mae][d][mi] = cell.report.mae;
          grid.values[Metric::zero_one][d][mi] = cell.report.zero_one;
          for (std::size_t f = 0; f < cell.report.per_fold.size(); ++f) {
            const auto& fm = cell.report.per_fold[f];
            folds_csv << dspec.name << ',' << mspec.key << ',' << f << ',' << fm.mse << ',' << fm.mae << ','
                      << fm.zero_one << '\n';
          }
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
      }
      if (!cell.ok) summary.exit_code = 1;
      summary.cells.push_back(std::move(cell));
    }
  }

  std::ostringstream results;
  results << std::setprecision(17) << "dataset,n_targets,method,status,mse,mae,zero_one\n";
  for (const auto& cell : summary.cells) {
    results << cell.dataset << ',' << cell.n_targets << ',' << cell.method << ',' << (cell.ok ? "ok" : "failed");
    if (cell.ok)
      results << ',' << cell.report.mse << ',' << cell.report.mae << ',' << cell.report.zero_one << '\n';
    else
      results << ",,,\n";
  }
  write_text(out_dir / "results.csv", results.str());
  write_text(out_dir / "folds.csv", folds_csv.str());
  for (Metric m : {Metric::mse, Metric::mae, Metric::zero_one}) {
    write_text(out_dir / (metric_name(m) + ".csv"), render_table(grid, m, TableFormat::csv));
    write_text(out_dir / (metric_name(m) + ".txt"), render_table(grid, m, TableFormat::text));
  }

  nlohmann::ordered_json manifest;
  manifest["tool"] = "prc";
  manifest["version"] = kVersion;
  manifest["seed"] = cfg.seed;
  manifest["folds"] = cfg.folds;
  manifest["c"] = cfg.c;
  manifest["export_paths"] = cfg.export_paths;
  manifest["datasets"] = nlohmann::json::array();
  for (const auto& ds : cfg.datasets) {
    nlohmann::ordered_json j;
    j["name"] = ds.name;
    if (ds.path) j["path"] = *ds.path;
    if (ds.synth) j["synth"] = {{"n", ds.synth->n}, {"noise_std", ds.synth->noise_std}, {"seed", ds.synth->seed}};
    if (ds.n_targets) j["n_targets"] = *ds.n_targets;
    manifest["datasets"].push_back(j);
  }
  manifest["methods"] = nlohmann::json::array();
  for (const auto& m : cfg.methods) {
    nlohmann::ordered_json j;
    j["key"] = m.key;
    const auto& mc = m.config;
    j["M"] = mc.inference.particles;
    j["eta"] = mc.inference.eta;
    j["ess"] = mc.inference.ess == smc::EssKind::inverse_sum ? "sum" : "max";
    j["mh_steps"] = mc.inference.mh_steps;
    j["mh_sigma"] = mc.inference.mh_sigma ? nlohmann::json(*mc.inference.mh_sigma) : nlohmann::json("auto");
    j["estimator"] = mc.inference.estimator == Estimator::mmse ? "mmse" : "map";
    j["bins"] = mc.learner.bins;
    j["bin_sampling"] = mc.learner.bin_sampling == BinSampling::jitter ? "jitter" : "center";
    j["trees"] = mc.learner.forest.trees;
    j["prior_precision"] = mc.learner.prior_precision;
    j["kde_bandwidth"] = mc.learner.kde_bandwidth ? nlohmann::json(*mc.learner.kde_bandwidth) : nlohmann::json("silverman");
    j["krr_alpha"] = mc.learner.krr_ridges;
    j["krr_gamma"] = mc.learner.krr_widths;
    j["krr_inner_folds"] = mc.learner.krr_inner_folds;
    j["softmax_iterations"] = mc.learner.softmax.iterations;
    j["order"] = mc.order;
    j["sampler_uses_x"] = mc.sampler_uses_x;
    j["overrides"] = m.params;
    manifest["methods"].push_back(j);
  }
  manifest["cells"] = nlohmann::json::array();
  for (const auto& cell : summary.cells) {
    nlohmann::ordered_json j;
    j["dataset"] = cell.dataset;
    j["method"] = cell.method;
    j["status"] = cell.ok ? "ok" : "failed";
    if (!cell.ok) j["error"] = cell.error;
    manifest["cells"].push_back(j);
  }
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

}  // namespace prc
