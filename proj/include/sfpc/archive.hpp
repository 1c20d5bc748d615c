#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sfpc/em_fitter.hpp"

namespace sfpc {

using NamedMatrix = std::pair<std::string, Eigen::MatrixXd>;

/// Binary matrix records, one after another:
///   u32 name length, name bytes (UTF-8),
///   u64 rows, u64 cols,
///   rows * cols IEEE-754 doubles, row-major.
/// All integers and doubles are little-endian.
void write_matrices(std::ostream& out, const std::vector<NamedMatrix>& mats);
std::vector<NamedMatrix> read_matrices(std::istream& in);

constexpr int kArchiveVersion = 1;

/// Saves a fitted model into directory `dir` (created if missing):
/// manifest.txt (key = value) and matrices.bin. The mesh and basis settings
/// are stored so that load_model rebuilds identical bases. The block trace is
/// not archived.
void save_model(const FittedModel& model, const std::string& dir);

/// Throws ParseError for a missing or malformed archive.
FittedModel load_model(const std::string& dir);

}  // namespace sfpc
