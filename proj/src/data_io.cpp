#include "sfpc/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sfpc/error.hpp"

namespace sfpc {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  return out;
}

bool parse_double(const std::string& s, double& v) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
}

bool parse_long(const std::string& s, long& v) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Integer label or YYYY-MM (months since year 0).
bool parse_time(const std::string& s, long& v, bool& monthly) {
  const auto dash = s.find('-', 1);
  if (dash != std::string::npos) {
    long y = 0, m = 0;
    if (!parse_long(s.substr(0, dash), y) || !parse_long(s.substr(dash + 1), m) || m < 1 || m > 12) return false;
    v = y * 12 + (m - 1);
    monthly = true;
    return true;
  }
  monthly = false;
  return parse_long(s, v);
}

}  // namespace

std::string LoadedPanel::label(long t) const {
  const long v = first_time + t;
  if (!monthly) return std::to_string(v);
  const long y = v / 12, m = v % 12 + 1;
  std::string out = std::to_string(y) + "-";
  if (m < 10) out += "0";
  return out + std::to_string(m);
}

int LoadedPanel::month(long t) const { return monthly ? static_cast<int>((first_time + t) % 12 + 1) : 0; }

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

LoadedPanel read_panel_csv(std::istream& in, const Triangulation& mesh, const std::string& origin) {
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) throw ParseError(origin + ": empty file");
  const auto header = split_csv(line);
  const bool has_station = header.size() == 5;
  if (header.size() < 4 || header.size() > 5 || header[0] != "t" || header[1] != "x" || header[2] != "y" ||
      header[3] != "value" || (has_station && header[4] != "station"))
    throw ParseError(origin + ":1: expected header t,x,y,value[,station]");

  struct Row {
    long t;
    Point2 p;
    double v;
  };
  std::vector<Row> rows;
  LoadedPanel out;
  int mode = -1;  // unknown / integer / monthly
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields");
    Row r{};
    bool monthly = false;
    if (!parse_time(f[0], r.t, monthly))
      throw ParseError(origin + ":" + std::to_string(lineno) + ": invalid time label '" + f[0] + "'");
    if (mode == -1) mode = monthly ? 1 : 0;
    if (mode != (monthly ? 1 : 0)) throw ParseError(origin + ":" + std::to_string(lineno) + ": mixed time label formats");
    if (!parse_double(f[1], r.p.x) || !parse_double(f[2], r.p.y) || !parse_double(f[3], r.v))
      throw ParseError(origin + ":" + std::to_string(lineno) + ": non-numeric or non-finite field");
    if (!mesh.contains(r.p)) {
      out.rejected.push_back({lineno, "location (" + format_double(r.p.x) + ", " + format_double(r.p.y) +
                                          ") outside the triangulated domain"});
      continue;
    }
    rows.push_back(r);
  }
  out.monthly = mode == 1;
  if (rows.empty()) return out;
  long lo = rows.front().t, hi = rows.front().t;
  for (const auto& r : rows) {
    lo = std::min(lo, r.t);
    hi = std::max(hi, r.t);
  }
  out.first_time = lo;
  const auto n = static_cast<std::size_t>(hi - lo + 1);
  std::vector<std::vector<double>> vals(n);
  out.raw.locations.assign(n, {});
  for (const auto& r : rows) {
    const auto k = static_cast<std::size_t>(r.t - lo);
    out.raw.locations[k].push_back(r.p);
    vals[k].push_back(r.v);
  }
  out.raw.values.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    out.raw.values[k] = Eigen::Map<const Eigen::VectorXd>(vals[k].data(), static_cast<Eigen::Index>(vals[k].size()));
  return out;
}

LoadedPanel load_panel(const std::string& path, const Triangulation& mesh) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open data file " + path);
  return read_panel_csv(in, mesh, path);
}

void write_panel_csv(std::ostream& out, const LoadedPanel& panel) {
  out << "t,x,y,value\n";
  for (int t = 0; t < panel.raw.n(); ++t) {
    const auto& locs = panel.raw.locations[static_cast<std::size_t>(t)];
    const auto& v = panel.raw.values[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < locs.size(); ++i)
      out << panel.label(t) << ',' << format_double(locs[i].x) << ',' << format_double(locs[i].y) << ','
          << format_double(v[static_cast<Eigen::Index>(i)]) << '\n';
  }
}

std::vector<Point2> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open points file " + path);
  std::string line;
  std::getline(in, line);
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "x" || header[1] != "y") throw ParseError(path + ":1: expected header x,y");
  std::vector<Point2> pts;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    Point2 p;
    if (f.size() < 2 || !parse_double(f[0], p.x) || !parse_double(f[1], p.y))
      throw ParseError(path + ":" + std::to_string(lineno) + ": invalid point row");
    pts.push_back(p);
  }
  return pts;
}

void write_grid_csv(const std::string& path, const std::vector<Point2>& points, const Eigen::MatrixXd& values,
                    const std::vector<std::string>& names) {
  if (values.rows() != static_cast<Eigen::Index>(points.size()) || values.cols() != static_cast<Eigen::Index>(names.size()))
    throw ArgumentError("grid values do not match points or column names");
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write " + path);
  out << "x,y";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << format_double(points[i].x) << ',' << format_double(points[i].y);
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << format_double(values(static_cast<Eigen::Index>(i), c));
    out << '\n';
  }
}

void write_row_report(std::ostream& out, const std::vector<RowIssue>& rows) {
  out << "line,reason\n";
  for (const auto& r : rows) out << r.line << ",\"" << r.reason << "\"\n";
}

}  // namespace sfpc
