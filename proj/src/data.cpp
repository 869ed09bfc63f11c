#include "gsr/data.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <ostream>
#include <random>
#include <sstream>

#include "gsr/errors.hpp"
#include "gsr/random.hpp"

namespace gsr::data {

std::vector<int> Dataset::label_column(const std::string& name) const {
  for (std::size_t c = 0; c < label_names.size(); ++c) {
    if (label_names[c] == name) {
      const Eigen::VectorXi col = labels.col(static_cast<Eigen::Index>(c));
      return {col.data(), col.data() + col.size()};
    }
  }
  throw DimensionMismatch("dataset has no label column '" + name + "'");
}

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) throw DimensionMismatch("slice exceeds dataset size");
  Dataset out;
  const auto f = static_cast<Eigen::Index>(first);
  const auto c = static_cast<Eigen::Index>(count);
  out.inputs = inputs.middleRows(f, c);
  out.targets = targets.middleRows(f, c);
  out.label_names = label_names;
  out.labels = labels.middleRows(f, c);
  return out;
}

Dataset Dataset::select(const std::vector<std::size_t>& rows) const {
  Dataset out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.inputs.resize(n, inputs.cols());
  out.targets.resize(n, targets.cols());
  out.labels.resize(n, labels.cols());
  out.label_names = label_names;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
    if (src >= inputs.rows()) throw DimensionMismatch("row index out of range");
    out.inputs.row(r) = inputs.row(src);
    out.targets.row(r) = targets.row(src);
    out.labels.row(r) = labels.row(src);
  }
  return out;
}

void Dataset::validate() const {
  if (inputs.rows() < 1) throw DimensionMismatch("dataset is empty");
  if (targets.rows() != inputs.rows() || labels.rows() != inputs.rows()) {
    throw DimensionMismatch("inputs, targets and labels disagree on the row count");
  }
  if (static_cast<std::size_t>(labels.cols()) != label_names.size()) {
    throw DimensionMismatch("label names do not match label columns");
  }
  if (!inputs.allFinite() || !targets.allFinite()) throw DimensionMismatch("dataset contains non-finite values");
}

Dataset gen_binary_clusters(std::size_t n, std::size_t repeats, std::size_t samples, double noise_sd,
                            std::uint64_t seed) {
  if (n < 1 || n > 16) throw InvalidConfig("binary cluster count must lie in [1, 16]");
  if (repeats < 1 || samples < 1) throw InvalidConfig("repeats and samples must be positive");
  if (!(noise_sd >= 0.0)) throw InvalidConfig("noise_sd must be non-negative");
  const std::size_t codes = std::size_t{1} << n;
  if (samples < codes) {
    std::cerr << "warning: " << samples << " samples cannot cover all " << codes << " binary codes\n";
  }

  Rng rng(derive_seed(seed, streams::kData));
  std::normal_distribution<double> noise(0.0, noise_sd > 0.0 ? noise_sd : 1.0);
  const auto rows = static_cast<Eigen::Index>(samples);
  const auto dim = static_cast<Eigen::Index>(n * repeats);
  Dataset ds;
  ds.inputs.resize(rows, dim);
  ds.label_names = {"code"};
  ds.labels.resize(rows, 1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t code = uniform_index(rng, codes);
    ds.labels(r, 0) = static_cast<int>(code);
    for (std::size_t bit = 0; bit < n; ++bit) {
      // Most significant bit first.
      const double v = static_cast<double>((code >> (n - 1 - bit)) & 1U);
      for (std::size_t k = 0; k < repeats; ++k) {
        ds.inputs(r, static_cast<Eigen::Index>(bit * repeats + k)) = v;
      }
    }
    if (noise_sd > 0.0) {
      for (Eigen::Index c = 0; c < dim; ++c) ds.inputs(r, c) += noise(rng);
    }
  }
  ds.targets = ds.inputs;
  return ds;
}

Dataset gen_hierarchical_clusters(const HierarchicalParams& p, std::uint64_t seed) {
  if (p.superclusters < 1 || p.subclusters_per < 1 || p.samples < 1) {
    throw InvalidConfig("hierarchical dataset sizes must be positive");
  }
  if (p.dim < p.superclusters) throw InvalidConfig("dimension must be at least the supercluster count");
  const std::size_t groups = p.superclusters * p.subclusters_per;
  if (p.samples % groups != 0) {
    std::cerr << "warning: " << p.samples << " samples not divisible by " << groups
              << " subclusters; assigning round-robin\n";
  }

  Rng rng(derive_seed(seed, streams::kData));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto dim = static_cast<Eigen::Index>(p.dim);

  // Scaled basis vectors: every pair is exactly center_distance apart.
  std::vector<Eigen::VectorXd> sub_centers;
  for (std::size_t s = 0; s < p.superclusters; ++s) {
    Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
    center(static_cast<Eigen::Index>(s)) = p.center_distance / std::sqrt(2.0);
    for (std::size_t k = 0; k < p.subclusters_per; ++k) {
      Eigen::VectorXd dir(dim);
      for (Eigen::Index d = 0; d < dim; ++d) dir(d) = gauss(rng);
      dir.normalize();
      sub_centers.push_back(p.subclusters_per == 1 ? center : Eigen::VectorXd(center + p.sub_offset * dir));
    }
  }

  Dataset ds;
  const auto rows = static_cast<Eigen::Index>(p.samples);
  ds.inputs.resize(rows, dim);
  ds.label_names = {"super", "sub"};
  ds.labels.resize(rows, 2);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t group = static_cast<std::size_t>(r) % groups;
    ds.labels(r, 0) = static_cast<int>(group / p.subclusters_per);
    ds.labels(r, 1) = static_cast<int>(group % p.subclusters_per);
    for (Eigen::Index d = 0; d < dim; ++d) ds.inputs(r, d) = sub_centers[group](d) + p.noise_sd * gauss(rng);
  }
  ds.targets = ds.inputs;
  return ds;
}

Matrix one_hot(const std::vector<int>& labels, std::size_t classes) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(classes));
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= classes) {
      throw DimensionMismatch("label " + std::to_string(labels[r]) + " outside [0, " + std::to_string(classes) + ")");
    }
    out(static_cast<Eigen::Index>(r), labels[r]) = 1.0;
  }
  return out;
}

void write_csv(std::ostream& out, const Dataset& ds) {
  for (Eigen::Index c = 0; c < ds.inputs.cols(); ++c) out << (c ? "," : "") << 'x' << c;
  for (const auto& name : ds.label_names) out << ',' << name;
  out << '\n';
  char buf[64];
  for (Eigen::Index r = 0; r < ds.inputs.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.inputs.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", ds.inputs(r, c));
      out << (c ? "," : "") << buf;
    }
    for (Eigen::Index c = 0; c < ds.labels.cols(); ++c) out << ',' << ds.labels(r, c);
    out << '\n';
  }
}

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw TruncatedFile("empty CSV");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::size_t dim = 0;
  while (dim < header.size() && header[dim] == "x" + std::to_string(dim)) ++dim;
  if (dim == 0) throw DimensionMismatch("CSV header must start with x0");
  Dataset ds;
  ds.label_names.assign(header.begin() + static_cast<std::ptrdiff_t>(dim), header.end());
  std::vector<std::vector<double>> xs;
  std::vector<std::vector<int>> ls;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw DimensionMismatch("CSV line " + std::to_string(number) + " has " + std::to_string(cells.size()) +
                              " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> x(dim);
    std::vector<int> l(header.size() - dim);
    try {
      for (std::size_t c = 0; c < dim; ++c) x[c] = std::stod(cells[c]);
      for (std::size_t c = dim; c < cells.size(); ++c) l[c - dim] = std::stoi(cells[c]);
    } catch (const std::logic_error&) {
      throw DimensionMismatch("CSV line " + std::to_string(number) + " has a malformed field");
    }
    xs.push_back(std::move(x));
    ls.push_back(std::move(l));
  }
  const auto rows = static_cast<Eigen::Index>(xs.size());
  ds.inputs.resize(rows, static_cast<Eigen::Index>(dim));
  ds.labels.resize(rows, static_cast<Eigen::Index>(ds.label_names.size()));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < ds.inputs.cols(); ++c) ds.inputs(r, c) = xs[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    for (Eigen::Index c = 0; c < ds.labels.cols(); ++c) ds.labels(r, c) = ls[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  ds.targets = ds.inputs;
  ds.validate();
  return ds;
}

}  // namespace gsr::data
