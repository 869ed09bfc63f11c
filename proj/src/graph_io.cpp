#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "gsr/errors.hpp"
#include "gsr/graph.hpp"

namespace gsr::graph {

void write_tsv(std::ostream& out, const Graph& g) {
  const std::size_t n = g.size();
  out << "#nodes=" << n << '\n';
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = g.weight(i, j);
      if (w <= 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.9g", w);
      out << i << '\t' << j << '\t' << buf << '\n';
    }
  }
}

void write_tsv(const std::string& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_tsv(out, g);
}

Graph read_tsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("#nodes=", 0) != 0) {
    throw InvalidGraph("edge list must start with a '#nodes=<n>' header");
  }
  std::size_t n = 0;
  try {
    n = std::stoul(line.substr(7));
  } catch (const std::exception&) {
    throw InvalidGraph("bad node count in header: " + line);
  }
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(ni, ni);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    long long src = -1;
    long long dst = -1;
    double weight = 0.0;
    if (!(fields >> src >> dst >> weight)) {
      throw InvalidGraph("malformed edge on line " + std::to_string(line_no));
    }
    if (src < 0 || dst < 0 || src >= ni || dst >= ni || src == dst) {
      throw InvalidGraph("edge endpoint out of range on line " + std::to_string(line_no));
    }
    w(src, dst) = w(dst, src) = weight;
  }
  return Graph(std::move(w));
}

Graph read_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file '" + path + "'");
  return read_tsv(in);
}

}  // namespace gsr::graph
