#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cli/cli.hpp"
#include "spatialqq/csv.hpp"
#include "spatialqq/error.hpp"

namespace sqq::cli {

DataMatrix parse_matrix(std::string_view text, std::optional<bool> has_header) {
  const auto records = csv::parse(text);
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no records");
  bool header = false;
  if (has_header) {
    header = *has_header;
  } else {
    double v = 0.0;
    for (const auto& f : records.front().fields) header = header || !csv::parse_number(f, v);
  }
  const std::size_t first = header ? 1 : 0;
  if (records.size() <= first) throw Error(ErrorKind::EmptyInput, "no data rows");
  const std::size_t d = records[first].fields.size();
  if (header && records.front().fields.size() != d) {
    throw Error(ErrorKind::RaggedRows, "header has " + std::to_string(records.front().fields.size()) +
                                           " columns but line " + std::to_string(records[first].line) +
                                           " has " + std::to_string(d));
  }
  RowMatrix values(static_cast<Index>(records.size() - first), static_cast<Index>(d));
  std::string bad;
  std::size_t bad_count = 0;
  for (std::size_t r = first; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != d) {
      throw Error(ErrorKind::RaggedRows, "line " + std::to_string(rec.line) + " has " +
                                             std::to_string(rec.fields.size()) + " fields, expected " +
                                             std::to_string(d));
    }
    for (std::size_t c = 0; c < d; ++c) {
      double v = 0.0;
      if (csv::parse_number(rec.fields[c], v)) {
        values(static_cast<Index>(r - first), static_cast<Index>(c)) = v;
      } else if (++bad_count <= 20) {
        bad += (bad.empty() ? "" : "; ") + std::string("row ") + std::to_string(rec.line) + ", column " +
               std::to_string(c + 1) + (rec.fields[c].empty() ? " is empty" : " = '" + rec.fields[c] + "'");
      }
    }
  }
  if (bad_count > 0) {
    if (bad_count > 20) bad += "; and " + std::to_string(bad_count - 20) + " more";
    throw Error(ErrorKind::ParseError, "non-numeric cells: " + bad);
  }
  std::vector<std::string> names;
  if (header) names = records.front().fields;
  return DataMatrix(std::move(values), std::move(names));
}

DataMatrix ingest_csv(const std::string& path, std::optional<bool> has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_matrix(buf.str(), has_header);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void write_matrix(const DataMatrix& x, std::ostream& out, const std::vector<std::string>& comments) {
  csv::Writer w(out);
  for (const auto& c : comments) w.comment(c);
  w.row(x.names());
  std::vector<std::string> row(static_cast<std::size_t>(x.cols()));
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = csv::format_number(x(i, j));
    w.row(row);
  }
}

LineFit fit_reference_line(const QQPointSet& set) {
  const auto& p = set.points;
  const double n = static_cast<double>(p.size());
  double mx = 0.0, my = 0.0;
  for (const auto& q : p) {
    mx += q.abscissa;
    my += q.ordinate;
  }
  if (p.size() < 2) throw Error(ErrorKind::DegenerateAbscissae, "need at least two points");
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& q : p) {
    sxx += (q.abscissa - mx) * (q.abscissa - mx);
    sxy += (q.abscissa - mx) * (q.ordinate - my);
    syy += (q.ordinate - my) * (q.ordinate - my);
  }
  if (!(sxx > 1e-300)) throw Error(ErrorKind::DegenerateAbscissae, "all abscissae coincide");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ss_res = std::max(syy - f.slope * sxy, 0.0);
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

}  // namespace sqq::cli
