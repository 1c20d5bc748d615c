#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfpc/geometry.hpp"
#include "sfpc/panel.hpp"

namespace sfpc {

struct RowIssue {
  int line = 0;
  std::string reason;
};

/// Long-format observations grouped by time. Time labels are integers or
/// YYYY-MM months; panel index 0 holds `first_time`, and every label between
/// the first and last is present (possibly empty).
struct LoadedPanel {
  RawPanel raw;
  long first_time = 1;  // integer label, or months since year 0 for YYYY-MM
  bool monthly = false;
  std::vector<RowIssue> rejected;  // rows outside the triangulated domain

  /// Label of 0-based panel index t ("17" or "1999-04").
  std::string label(long t) const;
  /// Calendar month 1..12 of index t for monthly panels, 0 otherwise.
  int month(long t) const;
};

/// Reads `t,x,y,value[,station]`. Throws ParseError (with the line number)
/// for malformed rows and non-finite fields.
LoadedPanel read_panel_csv(std::istream& in, const Triangulation& mesh, const std::string& origin = "<csv>");
LoadedPanel load_panel(const std::string& path, const Triangulation& mesh);

void write_panel_csv(std::ostream& out, const LoadedPanel& panel);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Reads `x,y` rows (header required).
std::vector<Point2> read_points_csv(const std::string& path);

/// Writes `x,y,<names...>` with one column per matrix column.
void write_grid_csv(const std::string& path, const std::vector<Point2>& points, const Eigen::MatrixXd& values,
                    const std::vector<std::string>& names);

/// Writes the rejected-row report as `line,reason`.
void write_row_report(std::ostream& out, const std::vector<RowIssue>& rows);

}  // namespace sfpc
