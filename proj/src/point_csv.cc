#include "srp/point_csv.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>
#include <vector>

namespace srp {
namespace {

std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void Fail(int line_no, const std::string& what) {
  throw DataError("point csv line " + std::to_string(line_no) + ": " + what);
}

double ParseDouble(std::string_view s, int line_no) {
  s = Trim(s);
  if (s.size() > 1 && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    Fail(line_no, "not a number: '" + std::string(s) + "'");
  }
  if (!std::isfinite(v)) Fail(line_no, "non-finite coordinate");
  return v;
}

long ParseIndex(std::string_view s, int line_no, const char* field) {
  s = Trim(s);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || v < 0) {
    Fail(line_no, std::string("bad ") + field + ": '" + std::string(s) + "'");
  }
  return v;
}

Matrix Assemble(const std::map<long, Vector>& rows, int dim, const char* kind) {
  Matrix m(dim, static_cast<Eigen::Index>(rows.size()));
  long expected = 0;
  for (const auto& [index, v] : rows) {
    if (index != expected) {
      throw DataError(std::string("point csv: kind ") + kind + " is missing index " +
                      std::to_string(expected));
    }
    m.col(index) = v;
    ++expected;
  }
  return m;
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

PointSetFile ReadPointCsv(std::istream& in) {
  std::string line;
  int line_no = 0;
  int dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!Trim(line).empty()) break;
  }
  if (Trim(line).empty()) throw DataError("point csv: empty input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = SplitCommas(line);
  if (header.size() < 4 || Trim(header[0]) != "kind" || Trim(header[1]) != "dim" ||
      Trim(header[2]) != "index") {
    Fail(line_no, "header must be kind,dim,index,c0,...");
  }
  for (size_t k = 3; k < header.size(); ++k) {
    if (Trim(header[k]) != "c" + std::to_string(k - 3)) {
      Fail(line_no, "expected column c" + std::to_string(k - 3));
    }
  }
  dim = static_cast<int>(header.size()) - 3;

  std::map<std::string, std::map<long, Vector>> by_kind;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto fields = SplitCommas(line);
    if (static_cast<int>(fields.size()) != dim + 3) {
      Fail(line_no, "expected " + std::to_string(dim + 3) + " fields, got " +
                        std::to_string(fields.size()));
    }
    const std::string kind(Trim(fields[0]));
    if (kind != "p" && kind != "q" && kind != "ptilde" && kind != "qtilde") {
      Fail(line_no, "unknown kind '" + kind + "'");
    }
    if (ParseIndex(fields[1], line_no, "dim") != dim) {
      Fail(line_no, "dim disagrees with the header's coordinate count " + std::to_string(dim));
    }
    const long index = ParseIndex(fields[2], line_no, "index");
    Vector v(dim);
    for (int k = 0; k < dim; ++k) v(k) = ParseDouble(fields[3 + k], line_no);
    if (!by_kind[kind].emplace(index, std::move(v)).second) {
      Fail(line_no, "duplicate index " + std::to_string(index) + " for kind " + kind);
    }
  }

  PointSetFile out;
  out.dim = dim;
  out.p = Assemble(by_kind["p"], dim, "p");
  out.q = Assemble(by_kind["q"], dim, "q");
  out.ptilde = Assemble(by_kind["ptilde"], dim, "ptilde");
  out.qtilde = Assemble(by_kind["qtilde"], dim, "qtilde");
  if (out.p.cols() != out.q.cols()) {
    throw DataError("point csv: " + std::to_string(out.p.cols()) + " p rows but " +
                    std::to_string(out.q.cols()) + " q rows");
  }
  if ((out.ptilde.cols() > 0) != (out.qtilde.cols() > 0)) {
    throw DataError("point csv: ptilde and qtilde must both be present or both absent");
  }
  return out;
}

PointSetFile ReadPointCsvFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return ReadPointCsv(in);
}

void WritePointCsv(std::ostream& out, const PointSetFile& file) {
  out << "kind,dim,index";
  for (int k = 0; k < file.dim; ++k) out << ",c" << k;
  out << '\n';
  const std::pair<const char*, const Matrix*> parts[] = {
      {"p", &file.p}, {"q", &file.q}, {"ptilde", &file.ptilde}, {"qtilde", &file.qtilde}};
  for (const auto& [kind, m] : parts) {
    if (m->cols() > 0 && m->rows() != file.dim) throw DimensionError("point csv: row count != dim");
    for (Eigen::Index i = 0; i < m->cols(); ++i) {
      out << kind << ',' << file.dim << ',' << i;
      for (int k = 0; k < file.dim; ++k) out << ',' << FormatDouble((*m)(k, i));
      out << '\n';
    }
  }
}

void WritePointCsvFile(const std::string& path, const PointSetFile& file) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  WritePointCsv(out, file);
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace srp
