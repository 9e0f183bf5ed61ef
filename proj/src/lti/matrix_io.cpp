#include "rwmpc/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rwmpc::io {

void MatrixSet::put(const std::string& name, Matrix m) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
    throw std::invalid_argument("matrix name must be a non-empty token");
  for (auto& [n, v] : entries_) {
    if (n == name) {
      v = std::move(m);
      return;
    }
  }
  entries_.emplace_back(name, std::move(m));
}

void MatrixSet::put_scalar(const std::string& name, double v) { put(name, Matrix::Constant(1, 1, v)); }

bool MatrixSet::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return true;
  return false;
}

const Matrix& MatrixSet::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return e.second;
  throw std::invalid_argument("matrix '" + name + "' not found");
}

double MatrixSet::get_scalar(const std::string& name) const {
  const Matrix& m = get(name);
  if (m.size() != 1) throw std::invalid_argument("matrix '" + name + "' is not a scalar");
  return m(0, 0);
}

void write(std::ostream& os, const MatrixSet& set, const std::string& comment) {
  if (!comment.empty()) {
    std::istringstream lines(comment);
    std::string line;
    while (std::getline(lines, line)) os << "# " << line << '\n';
  }
  char buf[32];
  for (const auto& [name, m] : set.entries()) {
    os << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        if (j) os << ' ';
        os << buf;
      }
      os << '\n';
    }
  }
}

MatrixSet read(std::istream& is) {
  MatrixSet set;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument("line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream hs(line);
    std::string tag, name;
    long rows = -1, cols = -1;
    if (!(hs >> tag >> name >> rows >> cols) || tag != "matrix") fail("expected 'matrix <name> <rows> <cols>'");
    if (rows < 0 || cols < 0) fail("negative dimension");
    Matrix m(rows, cols);
    for (long i = 0; i < rows; ++i) {
      if (!std::getline(is, line)) fail("unexpected end of file in matrix '" + name + "'");
      ++lineno;
      std::istringstream rs(line);
      for (long j = 0; j < cols; ++j) {
        std::string tok;
        if (!(rs >> tok)) fail("too few values in row");
        try {
          std::size_t used = 0;
          m(i, j) = std::stod(tok, &used);
          if (used != tok.size()) fail("bad number '" + tok + "'");
        } catch (const std::out_of_range&) {
          fail("number out of range '" + tok + "'");
        } catch (const std::invalid_argument&) {
          fail("bad number '" + tok + "'");
        }
      }
      std::string extra;
      if (rs >> extra) fail("too many values in row");
    }
    if (set.contains(name)) fail("duplicate matrix '" + name + "'");
    set.put(name, std::move(m));
  }
  return set;
}

void save(const std::string& path, const MatrixSet& set, const std::string& comment) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write(os, set, comment);
  if (!os) throw std::runtime_error("write failed for " + path);
}

MatrixSet load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read(is);
}

MatrixSet to_set(const lti::ContinuousModel& m) {
  MatrixSet s;
  s.put("A", m.A);
  s.put("B", m.B);
  s.put("C", m.C);
  s.put("D", m.D);
  s.put("C_aux", m.C_aux);
  return s;
}

MatrixSet to_set(const lti::DiscreteModel& m) {
  MatrixSet s;
  s.put("A", m.A);
  s.put("B", m.B);
  s.put("C", m.C);
  s.put("D", m.D);
  s.put("C_aux", m.C_aux);
  s.put_scalar("Ts", m.Ts);
  return s;
}

lti::ContinuousModel continuous_from_set(const MatrixSet& s) {
  const Matrix& A = s.get("A");
  lti::ContinuousModel m(A, s.get("B"), s.get("C"),
                         s.contains("D") ? s.get("D") : Matrix::Zero(s.get("C").rows(), s.get("B").cols()),
                         s.contains("C_aux") ? s.get("C_aux") : Matrix::Zero(0, A.cols()));
  m.validate();
  return m;
}

lti::DiscreteModel discrete_from_set(const MatrixSet& s) {
  lti::DiscreteModel m;
  m.A = s.get("A");
  m.B = s.get("B");
  m.C = s.get("C");
  m.D = s.contains("D") ? s.get("D") : Matrix::Zero(m.C.rows(), m.B.cols());
  m.C_aux = s.contains("C_aux") ? s.get("C_aux") : Matrix::Zero(0, m.A.cols());
  m.Ts = s.get_scalar("Ts");
  m.validate();
  return m;
}

}  // namespace rwmpc::io
