#include "catekrr/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>

namespace catekrr {

namespace {

// One CSV record; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string trimmed(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
  return s.substr(a, b - a);
}

double parse_number(const std::string& raw, std::size_t line_no, const std::string& column) {
  const std::string s = trimmed(raw);
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end || s.empty())
    throw std::invalid_argument("csv: line " + std::to_string(line_no) + ", column '" + column +
                                "': cannot parse '" + raw + "' as a number");
  return v;
}

}  // namespace

IngestedData ingest_csv(const std::string& path, const std::vector<std::string>& covariates,
                        const std::string& treatment, const std::string& outcome) {
  if (covariates.empty()) throw std::invalid_argument("csv: no covariate columns requested");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);

  auto column_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trimmed(header[i]) == name) return i;
    throw std::invalid_argument("csv: column '" + name + "' not found in header");
  };
  std::vector<std::size_t> cov_idx;
  cov_idx.reserve(covariates.size());
  for (const std::string& c : covariates) cov_idx.push_back(column_index(c));
  const std::size_t a_idx = column_index(treatment);
  const std::size_t y_idx = column_index(outcome);

  std::vector<std::vector<double>> xs;
  std::vector<int> as;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::invalid_argument("csv: line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
    std::vector<double> row(covariates.size());
    for (std::size_t j = 0; j < cov_idx.size(); ++j)
      row[j] = parse_number(fields[cov_idx[j]], line_no, covariates[j]);
    const double a = parse_number(fields[a_idx], line_no, treatment);
    if (a != 0.0 && a != 1.0)
      throw std::invalid_argument("csv: line " + std::to_string(line_no) +
                                  ": treatment must be 0 or 1, got '" + fields[a_idx] + "'");
    ys.push_back(parse_number(fields[y_idx], line_no, outcome));
    as.push_back(static_cast<int>(a));
    xs.push_back(std::move(row));
  }
  const std::size_t n = xs.size();
  if (n < 10) throw std::invalid_argument("csv: need at least 10 data rows, got " +
                                          std::to_string(n));

  IngestedData out;
  out.covariate_cols = covariates;
  out.treatment_col = treatment;
  out.outcome_col = outcome;
  out.covariate_scales.resize(covariates.size());
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    double lo = xs[0][j], hi = xs[0][j];
    for (const std::vector<double>& row : xs) {
      lo = std::min(lo, row[j]);
      hi = std::max(hi, row[j]);
    }
    if (!(hi > lo))
      throw std::invalid_argument("csv: column '" + covariates[j] + "' is constant");
    out.covariate_scales[j] = {lo, hi};
  }
  {
    double lo = ys[0], hi = ys[0];
    for (double v : ys) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw std::invalid_argument("csv: column '" + outcome + "' is constant");
    out.outcome_scale = {lo, hi};
  }

  out.data.X.resize(static_cast<Index>(n), static_cast<Index>(covariates.size()));
  out.data.A.resize(static_cast<Index>(n));
  out.data.Y.resize(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < covariates.size(); ++j)
      out.data.X(static_cast<Index>(i), static_cast<Index>(j)) =
          out.covariate_scales[j].forward(xs[i][j]);
    out.data.A[static_cast<Index>(i)] = as[i];
    out.data.Y[static_cast<Index>(i)] = out.outcome_scale.forward(ys[i]);
  }
  validate(out.data);
  return out;
}

}  // namespace catekrr
