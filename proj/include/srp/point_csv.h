// Point-set CSV files.
//
//   kind,dim,index,c0,c1,...,c{dim-1}
//   p,3,0,0.1,0.2,0.3
//   q,3,0,...
//
// kind is one of p, q (paired sets, equal counts) and ptilde, qtilde
// (unpaired pools). index is the 0-based column within its kind; every
// index 0..m-1 must appear exactly once, in any row order.
#pragma once

#include <iosfwd>
#include <string>

#include "srp/numerics.h"

namespace srp {

struct PointSetFile {
  int dim = 0;
  Matrix p;       // dim x n
  Matrix q;       // dim x n
  Matrix ptilde;  // dim x n_tilde_p, possibly empty
  Matrix qtilde;  // dim x n_tilde_q, possibly empty

  bool has_pools() const { return ptilde.cols() > 0 && qtilde.cols() > 0; }
};

// Throws DataError with the offending line number on malformed input.
PointSetFile ReadPointCsv(std::istream& in);
PointSetFile ReadPointCsvFile(const std::string& path);

// Shortest round-trip decimal representation, '.' separator.
void WritePointCsv(std::ostream& out, const PointSetFile& file);
void WritePointCsvFile(const std::string& path, const PointSetFile& file);

std::string FormatDouble(double v);

}  // namespace srp
