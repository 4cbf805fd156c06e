#include "semdrop/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "semdrop/errors.hpp"

namespace semdrop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos ? "" : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back("");
  return fields;
}

double parse_cell(const std::string& cell, long row, long col, bool* missing) {
  if (cell == "NA") {
    *missing = true;
    return kNaN;
  }
  *missing = false;
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto result = std::from_chars(first, last, value);
  if (result.ec != std::errc{} || result.ptr != last) {
    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                         ": cannot parse '" + cell + "' as a number (missing cells must be NA)",
                     row, col);
  }
  return value;
}

}  // namespace

LongitudinalDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + path.string(), 1, 0);
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "id") {
    throw ParseError("header must start with 'id' (got '" +
                         (header.empty() ? std::string() : header[0]) + "')",
                     1, 1);
  }
  int k = 0;
  std::size_t pos = 1;
  while (pos < header.size() && header[pos] == "x_" + std::to_string(k + 1)) {
    ++k;
    ++pos;
  }
  int t = 0;
  while (pos < header.size() && header[pos] == "y_" + std::to_string(t + 1)) {
    ++t;
    ++pos;
  }
  if (pos != header.size() || t < 1) {
    throw ParseError("header must be id,x_1..x_k,y_1..y_t; unexpected column '" +
                         (pos < header.size() ? header[pos] : std::string("<none>")) + "'",
                     1, static_cast<long>(pos + 1));
  }

  std::vector<std::string> ids;
  std::vector<std::vector<double>> xv, yv;
  std::vector<std::vector<bool>> xm, ym;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       row, 0);
    }
    ids.push_back(fields[0]);
    std::vector<double> xr(static_cast<std::size_t>(k)), yr(static_cast<std::size_t>(t));
    std::vector<bool> xmr(static_cast<std::size_t>(k)), ymr(static_cast<std::size_t>(t));
    for (int c = 0; c < k; ++c) {
      bool missing = false;
      xr[static_cast<std::size_t>(c)] = parse_cell(fields[1 + c], row, 2 + c, &missing);
      xmr[static_cast<std::size_t>(c)] = !missing;
    }
    for (int j = 0; j < t; ++j) {
      bool missing = false;
      yr[static_cast<std::size_t>(j)] = parse_cell(fields[1 + k + j], row, 2 + k + j, &missing);
      ymr[static_cast<std::size_t>(j)] = !missing;
    }
    xv.push_back(std::move(xr));
    yv.push_back(std::move(yr));
    xm.push_back(std::move(xmr));
    ym.push_back(std::move(ymr));
  }
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (n == 0) throw ParseError("no data rows in " + path.string(), 1, 0);

  Eigen::MatrixXd y(n, t), x(n, k);
  BoolArray y_mask(n, t), x_mask(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) {
      x(i, c) = xv[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      x_mask(i, c) = xm[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    }
    for (int j = 0; j < t; ++j) {
      y(i, j) = yv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      y_mask(i, j) = ym[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return LongitudinalDataset(std::move(y), std::move(x), std::move(y_mask),
                             std::move(x_mask), std::move(ids));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_dataset_csv(const std::filesystem::path& path, const LongitudinalDataset& ds) {
  std::ostringstream out;
  out << "id";
  for (int c = 1; c <= ds.k(); ++c) out << ",x_" << c;
  for (int j = 1; j <= ds.t(); ++j) out << ",y_" << j;
  out << '\n';
  for (int i = 0; i < ds.n(); ++i) {
    out << ds.ids()[static_cast<std::size_t>(i)];
    for (int c = 0; c < ds.k(); ++c) {
      out << ',' << (ds.x_mask()(i, c) ? format_double(ds.x()(i, c)) : "NA");
    }
    for (int j = 0; j < ds.t(); ++j) {
      out << ',' << (ds.y_mask()(i, j) ? format_double(ds.y()(i, j)) : "NA");
    }
    out << '\n';
  }
  atomic_write_text(path, out.str());
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("failed to move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace semdrop
