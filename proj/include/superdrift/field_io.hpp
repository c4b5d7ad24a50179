#ifndef SUPERDRIFT_FIELD_IO_HPP
#define SUPERDRIFT_FIELD_IO_HPP

#include "superdrift/field.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace superdrift {

/// One row of the per-step diagnostics a run records.
struct NormRecord {
  double t = 0.0;
  double dt = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  double Lm = 0.0;
  double Linf = 0.0;
  double boundary_linf = 0.0;  ///< sup over cells touching the boundary
  int lin_iters = 0;
};

struct NormSeries {
  double m = 2.0;  ///< exponent of the Lm column
  std::vector<NormRecord> records;

  std::size_t size() const { return records.size(); }
  std::vector<double> column(double exponent) const;  ///< L1, L2 or Lm by exponent
  std::vector<double> times() const;
};

NormRecord measure(const Field& u, double t, double m);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// `cell,value` rows.
std::string field_to_csv(const Field& field);
void write_field_csv(const std::string& path, const Field& field);

/// Reads rows `cell,v0[,v1,...]`; a non-numeric first line is a header.
Eigen::MatrixXd read_table_csv(const std::string& path);

/// `t,L1,L2,Lm,Linf` (brief) or `t,dt,L1,L2,Lm,Linf,lin_iters` (solver).
std::string norms_to_csv(const NormSeries& norms, bool solver_columns);

/// Little-endian binary snapshot file: magic, grid, then (t, values) blocks.
void write_series_binary(const std::string& path, const SpaceTimeSeries& series);
SpaceTimeSeries read_series_binary(const std::string& path);

std::string series_to_csv(const SpaceTimeSeries& series);

}  // namespace superdrift

#endif  // SUPERDRIFT_FIELD_IO_HPP
