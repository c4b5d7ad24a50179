#include "superdrift/field_io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace superdrift {

namespace {

constexpr char kSeriesMagic[8] = {'S', 'D', 'S', 'E', 'R', 'I', 'E', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated series file");
  return value;
}

std::ostream& with_precision(std::ostream& out) { return out << std::setprecision(17); }

}  // namespace

std::vector<double> NormSeries::column(double exponent) const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (exponent == 1.0) {
      out.push_back(r.L1);
    } else if (exponent == 2.0) {
      out.push_back(r.L2);
    } else if (exponent == m) {
      out.push_back(r.Lm);
    } else {
      throw std::invalid_argument("norm series does not track the requested exponent");
    }
  }
  return out;
}

std::vector<double> NormSeries::times() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.t);
  return out;
}

NormRecord measure(const Field& u, double t, double m) {
  NormRecord r;
  r.t = t;
  r.L1 = lp_norm(u, 1.0);
  r.L2 = lp_norm(u, 2.0);
  r.Lm = lp_norm(u, m);
  r.Linf = linf_norm(u);
  const Grid& grid = u.grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_boundary_cell(i)) r.boundary_linf = std::max(r.boundary_linf, std::abs(u[i]));
  }
  return r;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string field_to_csv(const Field& field) {
  std::ostringstream out;
  with_precision(out) << "cell,value\n";
  for (std::size_t i = 0; i < field.size(); ++i) out << i << ',' << field[i] << '\n';
  return out.str();
}

void write_field_csv(const std::string& path, const Field& field) { write_file_atomic(path, field_to_csv(field)); }

Eigen::MatrixXd read_table_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw std::runtime_error("non-numeric row in " + path + ": " + line);
    }
    first = false;
    if (row.size() < 2) throw std::runtime_error("table row needs an index and at least one value: " + line);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty table " + path);
  const std::size_t width = rows.front().size() - 1;
  Eigen::MatrixXd table(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (const auto& row : rows) {
    if (row.size() - 1 != width) throw std::runtime_error("ragged table " + path);
    const auto idx = static_cast<Eigen::Index>(row[0]);
    if (idx < 0 || idx >= table.rows()) throw std::runtime_error("cell index out of range in " + path);
    for (std::size_t c = 0; c < width; ++c) table(idx, static_cast<Eigen::Index>(c)) = row[c + 1];
  }
  return table;
}

std::string norms_to_csv(const NormSeries& norms, bool solver_columns) {
  std::ostringstream out;
  with_precision(out);
  out << (solver_columns ? "t,dt,L1,L2,Lm,Linf,lin_iters\n" : "t,L1,L2,Lm,Linf\n");
  for (const auto& r : norms.records) {
    out << r.t << ',';
    if (solver_columns) out << r.dt << ',';
    out << r.L1 << ',' << r.L2 << ',' << r.Lm << ',' << r.Linf;
    if (solver_columns) out << ',' << r.lin_iters;
    out << '\n';
  }
  return out.str();
}

void write_series_binary(const std::string& path, const SpaceTimeSeries& series) {
  if (series.empty()) throw std::invalid_argument("cannot write an empty series");
  std::ostringstream out(std::ios::binary);
  out.write(kSeriesMagic, sizeof(kSeriesMagic));
  const Grid& grid = series.grid();
  put<std::int32_t>(out, grid.dim());
  for (int a = 0; a < grid.dim(); ++a) {
    put<std::int32_t>(out, grid.cells(a));
    put<double>(out, grid.extent(a));
  }
  put<std::uint64_t>(out, series.size());
  for (std::size_t j = 0; j < series.size(); ++j) {
    put<double>(out, series.times()[j]);
    put<std::uint8_t>(out, series[j].blown_up() ? 1 : 0);
    const auto& v = series[j].values();
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  write_file_atomic(path, out.str());
}

SpaceTimeSeries read_series_binary(const std::string& path) {
  std::istringstream in(read_file(path), std::ios::binary);
  char magic[sizeof(kSeriesMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kSeriesMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(path + " is not a series file");
  }
  const int dim = get<std::int32_t>(in);
  if (dim < 1 || dim > Grid::kMaxDim) throw std::runtime_error("bad dimension in " + path);
  std::vector<int> cells(dim);
  std::vector<double> extents(dim);
  for (int a = 0; a < dim; ++a) {
    cells[a] = get<std::int32_t>(in);
    extents[a] = get<double>(in);
  }
  const Grid grid(dim, extents, cells);
  const auto count = get<std::uint64_t>(in);
  SpaceTimeSeries series;
  for (std::uint64_t j = 0; j < count; ++j) {
    const double t = get<double>(in);
    const bool blown = get<std::uint8_t>(in) != 0;
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size()));
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated series file " + path);
    Field f(grid, std::move(v));
    if (blown) f.mark_blown_up();
    series.push_back(t, std::move(f));
  }
  return series;
}

std::string series_to_csv(const SpaceTimeSeries& series) {
  std::ostringstream out;
  with_precision(out) << "t,cell,value\n";
  for (std::size_t j = 0; j < series.size(); ++j) {
    for (std::size_t i = 0; i < series[j].size(); ++i) out << series.times()[j] << ',' << i << ',' << series[j][i] << '\n';
  }
  return out.str();
}

}  // namespace superdrift
