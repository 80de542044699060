#pragma once

// Dataset ingestion (ARFF numeric subset, CSV), the synthetic bimodal
// generator, column standardization and k-fold planning.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prc/core.hpp"

namespace prc {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// N instances with D real features and L real targets.
struct Dataset {
  Matrix X;
  Matrix Y;
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index n_features() const { return X.cols(); }
  Eigen::Index n_targets() const { return Y.cols(); }

  void validate() const {
    if (X.rows() < 1) throw DatasetError("dataset has no instances");
    if (X.cols() < 1) throw DatasetError("dataset has no feature columns");
    if (Y.cols() < 1) throw DatasetError("dataset has no target columns");
    if (X.rows() != Y.rows()) throw DatasetError("feature and target row counts differ");
    if (static_cast<Eigen::Index>(feature_names.size()) != X.cols() ||
        static_cast<Eigen::Index>(target_names.size()) != Y.cols())
      throw DatasetError("column names do not match column counts");
    if (!X.allFinite() || !Y.allFinite()) throw DatasetError("dataset contains non-finite values");
  }

  /// Rows selected by index, in the given order.
  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out{Matrix(rows.size(), X.cols()), Matrix(rows.size(), Y.cols()), feature_names,
                target_names};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto i = static_cast<Eigen::Index>(rows[r]);
      out.X.row(static_cast<Eigen::Index>(r)) = X.row(i);
      out.Y.row(static_cast<Eigen::Index>(r)) = Y.row(i);
    }
    return out;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string unquote(std::string_view s) {
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front())
    return std::string(s.substr(1, s.size() - 2));
  return std::string(s);
}

inline Dataset assemble(const std::vector<std::vector<double>>& rows,
                        std::vector<std::string> names, std::size_t n_targets) {
  const std::size_t width = names.size();
  const std::size_t d = width - n_targets;
  Dataset ds{Matrix(rows.size(), d), Matrix(rows.size(), n_targets),
             {names.begin(), names.begin() + static_cast<std::ptrdiff_t>(d)},
             {names.begin() + static_cast<std::ptrdiff_t>(d), names.end()}};
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < width; ++c) {
      const auto r = static_cast<Eigen::Index>(i);
      if (c < d)
        ds.X(r, static_cast<Eigen::Index>(c)) = rows[i][c];
      else
        ds.Y(r, static_cast<Eigen::Index>(c - d)) = rows[i][c];
    }
  return ds;
}

}  // namespace detail

struct ArffResult {
  Dataset data;
  std::size_t dropped_rows = 0;
  /// Target count read from a MEKA-style "-C <n>" relation name, if present.
  std::optional<std::size_t> annotated_targets;
};

/// Parses the numeric subset of ARFF. Targets are the trailing attributes;
/// when `n_targets` is empty the relation's "-C <n>" annotation is used.
inline ArffResult parse_arff(std::string_view text, std::optional<std::size_t> n_targets = {}) {
  std::vector<std::string> names;
  std::optional<std::size_t> annotated;
  bool seen_relation = false;
  bool in_data = false;
  std::vector<std::vector<double>> rows;
  std::size_t dropped = 0;
  const auto all = detail::lines(text);
  for (std::size_t ln = 0; ln < all.size(); ++ln) {
    const std::size_t line_no = ln + 1;
    const auto line = detail::trim(all[ln]);
    if (line.empty() || line.front() == '%') continue;
    if (!in_data) {
      if (line.front() != '@') throw ParseError("expected a header declaration", line_no);
      const auto sp = line.find_first_of(" \t");
      const auto keyword = detail::lower(line.substr(0, sp));
      const auto rest = sp == std::string_view::npos ? std::string_view{} : detail::trim(line.substr(sp));
      if (keyword == "@relation") {
        if (rest.empty()) throw ParseError("@relation without a name", line_no);
        seen_relation = true;
        const auto rel = detail::unquote(rest);
        if (const auto c = rel.find("-C "); c != std::string::npos) {
          std::istringstream in(rel.substr(c + 3));
          long v = 0;
          if (in >> v && v != 0) annotated = static_cast<std::size_t>(std::labs(v));
        }
      } else if (keyword == "@attribute") {
        if (!seen_relation) throw ParseError("@attribute before @relation", line_no);
        std::string name;
        std::string_view type;
        if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
          const auto close = rest.find(rest.front(), 1);
          if (close == std::string_view::npos) throw ParseError("unterminated attribute name", line_no);
          name = std::string(rest.substr(1, close - 1));
          type = detail::trim(rest.substr(close + 1));
        } else {
          const auto ts = rest.find_first_of(" \t");
          if (ts == std::string_view::npos) throw ParseError("@attribute without a type", line_no);
          name = std::string(rest.substr(0, ts));
          type = detail::trim(rest.substr(ts));
        }
        if (type.empty()) throw ParseError("@attribute without a type", line_no);
        const auto t = detail::lower(type);
        if (t != "numeric" && t != "real" && t != "integer")
          throw UnsupportedAttributeError("unsupported attribute type '" + std::string(type) + "' for " + name,
                           line_no);
        names.push_back(std::move(name));
      } else if (keyword == "@data") {
        if (names.empty()) throw ParseError("@data before any @attribute", line_no);
        in_data = true;
      } else {
        throw ParseError("unknown declaration " + std::string(line.substr(0, sp)), line_no);
      }
      continue;
    }
    if (line.front() == '{') throw ParseError("sparse ARFF rows are not supported", line_no);
    const auto cells = detail::split(line, ',');
    if (cells.size() != names.size())
      throw ParseError("expected " + std::to_string(names.size()) + " values, got " +
                           std::to_string(cells.size()),
                       line_no);
    std::vector<double> row;
    row.reserve(cells.size());
    bool missing = false;
    for (const auto& c : cells) {
      if (c == "?") {
        missing = true;
        break;
      }
      const auto v = detail::to_double(c);
      if (!v) throw ParseError("non-numeric value '" + std::string(c) + "'", line_no);
      row.push_back(*v);
    }
    if (missing)
      ++dropped;
    else
      rows.push_back(std::move(row));
  }
  if (!in_data) throw ParseError("missing @data section", all.size());
  const auto L = n_targets ? n_targets : annotated;
  if (!L || *L == 0) throw ArgumentError("target count not supplied and not annotated in @relation");
  if (*L >= names.size()) throw DatasetError("no feature columns remain after taking targets");
  if (rows.empty()) throw DatasetError("ARFF file has no complete data rows");
  ArffResult out{detail::assemble(rows, std::move(names), *L), dropped, annotated};
  out.data.validate();
  return out;
}

/// Numeric CSV; the last `n_targets` columns are targets.
inline Dataset parse_csv(std::string_view text, std::size_t n_targets, bool has_header) {
  if (n_targets == 0) throw ArgumentError("n_targets must be at least 1");
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::size_t row_index = 0;
  bool header_pending = has_header;
  const auto all = detail::lines(text);
  for (std::size_t ln = 0; ln < all.size(); ++ln) {
    const auto line = detail::trim(all[ln]);
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (header_pending) {
      for (const auto& c : cells) names.push_back(detail::unquote(c));
      width = cells.size();
      header_pending = false;
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw ParseError("row " + std::to_string(row_index) + " has " + std::to_string(cells.size()) +
                           " cells, expected " + std::to_string(width),
                       ln + 1);
    std::vector<double> row;
    row.reserve(width);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = detail::to_double(cells[c]);
      if (!v)
        throw ParseError("non-numeric cell at row " + std::to_string(row_index) + ", column " +
                             std::to_string(c) + ": '" + std::string(cells[c]) + "'",
                         ln + 1);
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
    ++row_index;
  }
  if (rows.empty()) throw DatasetError("CSV has no data rows");
  if (n_targets >= width) throw DatasetError("zero feature columns: every column is a target");
  if (names.empty()) {
    for (std::size_t c = 0; c < width - n_targets; ++c) names.push_back("x" + std::to_string(c + 1));
    for (std::size_t c = 0; c < n_targets; ++c) names.push_back("y" + std::to_string(c + 1));
  }
  auto ds = detail::assemble(rows, std::move(names), n_targets);
  ds.validate();
  return ds;
}

/// Header plus rows, 17 significant digits so values round-trip exactly.
inline std::string to_csv(const Dataset& ds) {
  std::ostringstream out;
  out << std::setprecision(17);
  bool first = true;
  for (const auto& n : ds.feature_names) out << (std::exchange(first, false) ? "" : ",") << n;
  for (const auto& n : ds.target_names) out << (std::exchange(first, false) ? "" : ",") << n;
  out << '\n';
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    first = true;
    for (Eigen::Index c = 0; c < ds.X.cols(); ++c) out << (std::exchange(first, false) ? "" : ",") << ds.X(i, c);
    for (Eigen::Index c = 0; c < ds.Y.cols(); ++c) out << (std::exchange(first, false) ? "" : ",") << ds.Y(i, c);
    out << '\n';
  }
  return out.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Loads by extension: .arff goes through parse_arff, anything else is CSV with a header.
inline Dataset load_dataset(const std::string& path, std::optional<std::size_t> n_targets) {
  const auto text = read_file(path);
  const auto ext = path.size() >= 5 ? detail::lower(path.substr(path.size() - 5)) : std::string{};
  if (ext == ".arff") return parse_arff(text, n_targets).data;
  if (!n_targets) throw ArgumentError("CSV datasets need an explicit target count");
  return parse_csv(text, *n_targets, true);
}

/// Two equiprobable modes at (-1,-1) and (+1,+1) with isotropic Gaussian noise;
/// the single feature is standard normal and independent of both targets.
inline Dataset generate_synth(std::size_t n, double noise_std, std::uint64_t seed) {
  if (n < 2) throw ArgumentError("synth needs n >= 2");
  if (!(noise_std > 0.0)) throw ArgumentError("synth needs noise_std > 0");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Dataset ds{Matrix(n, 1), Matrix(n, 2), {"x1"}, {"y1", "y2"}};
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    ds.X(r, 0) = normal(rng);
    const double mode = coin(rng) ? 1.0 : -1.0;
    ds.Y(r, 0) = mode + noise_std * normal(rng);
    ds.Y(r, 1) = mode + noise_std * normal(rng);
  }
  return ds;
}

/// Per-column standardization.
struct Scaler {
  static constexpr double kStdFloor = 1e-8;
  Vector means;
  Vector stds;

  Matrix apply(const Matrix& m) const {
    check(m);
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.col(c) = (m.col(c).array() - means[c]) / stds[c];
    return out;
  }

  Matrix invert(const Matrix& m) const {
    check(m);
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.col(c) = m.col(c).array() * stds[c] + means[c];
    return out;
  }

 private:
  void check(const Matrix& m) const {
    if (m.cols() != means.size()) throw ArgumentError("scaler column count mismatch");
  }
};

inline Scaler fit_scaler(const Matrix& m) {
  if (m.rows() < 1) throw ArgumentError("cannot fit a scaler on zero rows");
  Scaler s{m.colwise().mean().transpose(), Vector(m.cols())};
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double var = (m.col(c).array() - s.means[c]).square().mean();
    s.stds[c] = std::max(std::sqrt(var), Scaler::kStdFloor);
  }
  return s;
}

struct DatasetScaler {
  Scaler features;
  Scaler targets;

  Dataset apply(const Dataset& ds) const {
    return {features.apply(ds.X), targets.apply(ds.Y), ds.feature_names, ds.target_names};
  }
};

inline DatasetScaler fit_scaler(const Dataset& ds) { return {fit_scaler(ds.X), fit_scaler(ds.Y)}; }

/// Seeded shuffled assignment of instances to k folds.
struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(i);
    return out;
  }
};

inline FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("k-fold needs k >= 2");
  if (k > n) throw ArgumentError("k-fold needs k <= n");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan{k, std::vector<std::size_t>(n), seed};
  for (std::size_t pos = 0; pos < n; ++pos) plan.assignments[order[pos]] = pos % k;
  return plan;
}

}  // namespace prc
