#pragma once

#include <cmath>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "optray/error.hpp"

namespace optray {

/// Labeled examples: one row of `features` per example, labels in {-1,+1}.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index d() const { return features.cols(); }
};

/// The matrix A with rows A_i = -y_i x_i. Every solver in the library consumes
/// this object. Constructing one enforces max_i |A_i| <= 1.
class MarginMatrix {
 public:
  static constexpr double kNormSlack = 1e-12;

  MarginMatrix() = default;

  explicit MarginMatrix(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
    if (rows_.rows() < 1 || rows_.cols() < 1)
      fail(ErrorKind::validation, "margin matrix needs n >= 1 and d >= 1");
    if (!rows_.allFinite()) fail(ErrorKind::validation, "margin matrix has non-finite entries");
    const double m = rows_.rowwise().norm().maxCoeff();
    if (m > 1.0 + kNormSlack)
      fail(ErrorKind::validation,
           "margin matrix rows must have norm <= 1 (normalize the dataset first); max is " +
               std::to_string(m));
  }

  const Eigen::MatrixXd& rows() const { return rows_; }
  Eigen::Index n() const { return rows_.rows(); }
  Eigen::Index d() const { return rows_.cols(); }

  MarginMatrix select(const std::vector<int>& idx) const {
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(idx.size()), rows_.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = rows_.row(idx[k]);
    MarginMatrix out;
    out.rows_ = std::move(sub);
    return out;
  }

 private:
  Eigen::MatrixXd rows_;
};

inline void check_labels(const Dataset& ds) {
  if (ds.n() < 1 || ds.d() < 1) fail(ErrorKind::validation, "dataset needs n >= 1 and d >= 1");
  if (ds.labels.size() != ds.n()) fail(ErrorKind::validation, "label count does not match rows");
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    if (ds.labels[i] != 1.0 && ds.labels[i] != -1.0)
      fail(ErrorKind::validation, "row " + std::to_string(i + 1) + ": label must be -1 or 1");
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const std::string buf(s);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size() && std::isfinite(out);
}

}  // namespace detail

/// Parses "f1,...,fd,label" CSV. Row numbers in messages are 1-based file lines.
inline Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty())
    fail(ErrorKind::parse, "line 1: missing header");
  const auto header = detail::split_commas(detail::trim(line));
  if (header.size() < 2 || detail::trim(header.back()) != "label")
    fail(ErrorKind::parse, "line 1: header must be f1,...,fd,label");
  const auto d = static_cast<Eigen::Index>(header.size() - 1);

  std::vector<double> values;
  std::vector<double> labels;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto cells = detail::split_commas(t);
    if (static_cast<Eigen::Index>(cells.size()) != d + 1)
      fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": expected " +
                                 std::to_string(d + 1) + " fields, got " + std::to_string(cells.size()));
    for (Eigen::Index j = 0; j <= d; ++j) {
      double v = 0;
      if (!detail::parse_double(cells[static_cast<std::size_t>(j)], v))
        fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": field " + std::to_string(j + 1) +
                                   " is not a finite number");
      if (j < d) values.push_back(v);
      else if (v != 1.0 && v != -1.0)
        fail(ErrorKind::validation, "line " + std::to_string(lineno) + ": label must be -1 or 1");
      else labels.push_back(v);
    }
  }
  if (labels.empty()) fail(ErrorKind::parse, "no data rows");

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(labels.size());
  ds.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, d);
  ds.labels = Eigen::Map<const Eigen::VectorXd>(labels.data(), n);
  return ds;
}

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse, "cannot open '" + path + "'");
  return read_csv(in);
}

inline void write_csv(const Dataset& ds, std::ostream& out) {
  for (Eigen::Index j = 0; j < ds.d(); ++j) out << 'f' << (j + 1) << ',';
  out << "label\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.d(); ++j) out << ds.features(i, j) << ',';
    out << static_cast<int>(ds.labels[i]) << '\n';
  }
}

inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::usage, "cannot write '" + path + "'");
  write_csv(ds, out);
}

/// Scales all features by one global factor so that max_i |x_i| <= 1.
/// Datasets already inside the unit ball are returned unchanged.
inline Dataset normalize(const Dataset& ds) {
  check_labels(ds);
  const double m = ds.features.rowwise().norm().maxCoeff();
  if (!(m > 0.0)) fail(ErrorKind::degenerate, "all feature vectors are zero");
  Dataset out = ds;
  if (m > 1.0) out.features /= m;
  return out;
}

inline MarginMatrix to_margin_matrix(const Dataset& ds) {
  check_labels(ds);
  Eigen::MatrixXd rows = -(ds.labels.asDiagonal() * ds.features);
  return MarginMatrix(std::move(rows));
}

enum class SynthKind { separable, overlap, touching, mixed };

inline SynthKind parse_synth_kind(std::string_view s) {
  if (s == "separable") return SynthKind::separable;
  if (s == "overlap") return SynthKind::overlap;
  if (s == "touching") return SynthKind::touching;
  if (s == "mixed") return SynthKind::mixed;
  fail(ErrorKind::usage, "unknown synthetic dataset kind '" + std::string(s) +
                             "' (expected separable|overlap|touching|mixed)");
}

inline std::string_view to_string(SynthKind k) {
  switch (k) {
    case SynthKind::separable: return "separable";
    case SynthKind::overlap: return "overlap";
    case SynthKind::touching: return "touching";
    case SynthKind::mixed: return "mixed";
  }
  return "?";
}

/// Two unit discs of labeled points in the plane: positives centred at (-c,0),
/// negatives at (+c,0), so the max-margin direction of the disc points is -e1.
///   separable: c = 1.5        overlap: c = 0.5
///   touching:  c = 1, plus one positive example at the origin
///   mixed:     c = 1, plus (0,0.5)+, (0,0.5)+, (0,0.9)- on the e2 axis
/// The result is normalized.
inline Dataset synth(SynthKind kind, int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) fail(ErrorKind::usage, "n_per_class must be >= 1");
  std::mt19937_64 rng(seed);
  // Top 53 bits of the engine output; the engine sequence is fixed by the
  // standard, so datasets are reproducible across standard libraries.
  auto unif = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  double c = 1.0;
  if (kind == SynthKind::separable) c = 1.5;
  if (kind == SynthKind::overlap) c = 0.5;

  std::vector<std::array<double, 3>> pts;
  for (int k = 0; k < n_per_class; ++k) {
    for (double y : {1.0, -1.0}) {
      const double r = std::sqrt(unif());
      const double th = 2.0 * std::numbers::pi * unif();
      pts.push_back({-y * c + r * std::cos(th), r * std::sin(th), y});
    }
  }
  if (kind == SynthKind::touching) pts.push_back({0.0, 0.0, 1.0});
  if (kind == SynthKind::mixed) {
    pts.push_back({0.0, 0.5, 1.0});
    pts.push_back({0.0, 0.5, 1.0});
    pts.push_back({0.0, 0.9, -1.0});
  }

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(pts.size());
  ds.features.resize(n, 2);
  ds.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.features(i, 0) = pts[static_cast<std::size_t>(i)][0];
    ds.features(i, 1) = pts[static_cast<std::size_t>(i)][1];
    ds.labels[i] = pts[static_cast<std::size_t>(i)][2];
  }
  return normalize(ds);
}

/// FNV-1a over the raw bytes of features and labels; identifies a dataset in reports.
inline std::string digest(const Eigen::MatrixXd& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  const Eigen::Index dims[2] = {m.rows(), m.cols()};
  mix(dims, sizeof dims);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      mix(&v, sizeof v);
    }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace optray
