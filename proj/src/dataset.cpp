#include "sobolrf/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sobolrf/errors.hpp"

namespace sobolrf {

namespace {

void check_finite(double v, const char* what, std::size_t i, std::size_t j) {
  if (!std::isfinite(v)) {
    throw DataError(std::string("non-finite ") + what + " at row " + std::to_string(i) +
                    ", column " + std::to_string(j));
  }
}

// Splits one CSV record; handles quoted fields with doubled quotes.
std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw DataError("unterminated quote on line " + std::to_string(line_no));
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// `row` is the 1-based data row, `line` the 1-based line of the file.
double parse_cell(const std::string& raw, std::size_t row, std::size_t line,
                  const std::string& column) {
  std::string s = trim(raw);
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataError("cannot parse '" + s + "' as a finite number at row " +
                    std::to_string(row) + " (line " + std::to_string(line) + "), column '" +
                    column + "'");
  }
  return v;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

Dataset::Dataset(std::vector<std::vector<double>> columns, std::vector<double> y,
                 std::vector<std::string> feature_names)
    : p_(columns.size()), y_(std::move(y)), names_(std::move(feature_names)) {
  const std::size_t n = y_.size();
  if (n < 2) throw DataError("dataset needs at least 2 observations");
  if (p_ < 1) throw DataError("dataset needs at least 1 covariate");
  x_.reserve(n * p_);
  for (std::size_t j = 0; j < p_; ++j) {
    if (columns[j].size() != n) {
      throw DataError("covariate column " + std::to_string(j) + " has " +
                      std::to_string(columns[j].size()) + " rows, response has " +
                      std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) check_finite(columns[j][i], "covariate", i, j);
    x_.insert(x_.end(), columns[j].begin(), columns[j].end());
  }
  for (std::size_t i = 0; i < n; ++i) check_finite(y_[i], "response", i, p_);
  if (names_.empty()) {
    for (std::size_t j = 0; j < p_; ++j) names_.push_back("X" + std::to_string(j + 1));
  } else if (names_.size() != p_) {
    throw DataError("feature_names has wrong length");
  }
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& rows,
                           std::vector<double> y, std::vector<std::string> feature_names) {
  if (rows.size() != y.size()) throw DataError("x and y have different row counts");
  std::size_t p = rows.empty() ? 0 : rows.front().size();
  std::vector<std::vector<double>> cols(p, std::vector<double>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p) throw DataError("ragged row " + std::to_string(i));
    for (std::size_t j = 0; j < p; ++j) cols[j][i] = rows[i][j];
  }
  return Dataset(std::move(cols), std::move(y), std::move(feature_names));
}

std::vector<double> Dataset::row(std::size_t i) const {
  std::vector<double> r(p_);
  for (std::size_t j = 0; j < p_; ++j) r[j] = x(i, j);
  return r;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> cols(p_, std::vector<double>(rows.size()));
  std::vector<double> y(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    y[k] = y_[rows[k]];
    for (std::size_t j = 0; j < p_; ++j) cols[j][k] = x(rows[k], j);
  }
  return Dataset(std::move(cols), std::move(y), names_);
}

Dataset Dataset::select_columns(std::span<const std::size_t> columns) const {
  std::vector<std::vector<double>> cols;
  std::vector<std::string> names;
  for (std::size_t j : columns) {
    auto c = column(j);
    cols.emplace_back(c.begin(), c.end());
    names.push_back(names_[j]);
  }
  return Dataset(std::move(cols), y_, std::move(names));
}

Dataset Dataset::drop_column(std::size_t j) const {
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < p_; ++k)
    if (k != j) keep.push_back(k);
  return select_columns(keep);
}

double Dataset::response_variance() const { return sample_variance(y_); }

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n - 1);
}

Dataset parse_csv(const std::string& text, const ColumnRef& target) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_record(line, line_no);
      break;
    }
  }
  if (header.empty()) throw DataError("CSV has no header row");
  for (auto& h : header) h = trim(h);

  std::size_t target_col = 0;
  if (const auto* name = std::get_if<std::string>(&target)) {
    auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw DataError("target column '" + *name + "' not found");
    target_col = static_cast<std::size_t>(it - header.begin());
  } else {
    target_col = std::get<std::size_t>(target);
    if (target_col >= header.size()) {
      throw DataError("target column index " + std::to_string(target_col) + " out of range");
    }
  }
  if (header.size() < 2) throw DataError("CSV needs a target and at least one covariate");

  const std::size_t width = header.size();
  std::vector<std::vector<double>> cols(width - 1);
  std::vector<double> y;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_record(line, line_no);
    if (fields.size() != width) {
      throw DataError("row " + std::to_string(row + 1) + " (line " + std::to_string(line_no) + ") has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(width));
    }
    std::size_t out = 0;
    for (std::size_t c = 0; c < width; ++c) {
      double v = parse_cell(fields[c], row + 1, line_no, header[c]);
      if (c == target_col) {
        y.push_back(v);
      } else {
        cols[out++].push_back(v);
      }
    }
    ++row;
  }
  if (y.size() < 2) throw DataError("CSV needs at least 2 data rows");
  std::vector<std::string> names;
  for (std::size_t c = 0; c < width; ++c)
    if (c != target_col) names.push_back(header[c]);
  return Dataset(std::move(cols), std::move(y), std::move(names));
}

Dataset load_csv(const std::filesystem::path& path, const ColumnRef& target) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), target);
}

std::string to_csv(const Dataset& data, const std::string& target_name) {
  std::string out;
  for (std::size_t j = 0; j < data.p(); ++j) {
    out += data.feature_names()[j];
    out += ',';
  }
  out += target_name;
  out += '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.p(); ++j) {
      out += format_double(data.x(i, j));
      out += ',';
    }
    out += format_double(data.y(i));
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& target_name) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_csv(data, target_name);
}

}  // namespace sobolrf
