#pragma once

// Plain-text matrix container used for models, designs, QPs and solutions.
//
//   # free-form comment lines
//   matrix <name> <rows> <cols>
//   <row 0 values, space separated>
//   ...
//
// Values are written with 17 significant digits so a round trip is lossless.

#include "rwmpc/linalg.hpp"
#include "rwmpc/lti.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace rwmpc::io {

class MatrixSet {
 public:
  void put(const std::string& name, Matrix m);
  void put_scalar(const std::string& name, double v);

  bool contains(const std::string& name) const;
  /// Throws std::invalid_argument when `name` is missing.
  const Matrix& get(const std::string& name) const;
  double get_scalar(const std::string& name) const;

  const std::vector<std::pair<std::string, Matrix>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, Matrix>> entries_;
};

void write(std::ostream& os, const MatrixSet& set, const std::string& comment = {});
/// Throws std::invalid_argument with the offending line number on malformed input.
MatrixSet read(std::istream& is);

void save(const std::string& path, const MatrixSet& set, const std::string& comment = {});
MatrixSet load(const std::string& path);

MatrixSet to_set(const lti::ContinuousModel& m);
MatrixSet to_set(const lti::DiscreteModel& m);
lti::ContinuousModel continuous_from_set(const MatrixSet& s);
lti::DiscreteModel discrete_from_set(const MatrixSet& s);

}  // namespace rwmpc::io
