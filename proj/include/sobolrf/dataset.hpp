#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace sobolrf {

// Covariate matrix plus response vector. Covariates are stored column-major
// so that one covariate can be read (or permuted) as a contiguous span.
//
// Inputs are used as given: no rescaling to the unit cube is performed. CART
// splits are scale-equivariant, so the unit-cube support assumed by the
// consistency theory is a modelling assumption, not a runtime requirement.
class Dataset {
 public:
  Dataset() = default;
  // `columns[j][i]` is covariate j of observation i.
  Dataset(std::vector<std::vector<double>> columns, std::vector<double> y,
          std::vector<std::string> feature_names = {});

  static Dataset from_rows(const std::vector<std::vector<double>>& rows,
                           std::vector<double> y,
                           std::vector<std::string> feature_names = {});

  std::size_t n() const { return y_.size(); }
  std::size_t p() const { return p_; }

  double x(std::size_t i, std::size_t j) const { return x_[j * n() + i]; }
  std::span<const double> column(std::size_t j) const {
    return {x_.data() + j * n(), n()};
  }
  std::span<const double> y() const { return y_; }
  double y(std::size_t i) const { return y_[i]; }
  std::vector<double> row(std::size_t i) const;
  const std::vector<std::string>& feature_names() const { return names_; }

  // New datasets built from a subset of rows / columns (in the given order).
  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset select_columns(std::span<const std::size_t> columns) const;
  Dataset drop_column(std::size_t j) const;

  // Unbiased (n - 1 denominator) variance of the response.
  double response_variance() const;

 private:
  std::size_t p_ = 0;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<std::string> names_;
};

// Target column given either by header name or by zero-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

Dataset load_csv(const std::filesystem::path& path, const ColumnRef& target);
Dataset parse_csv(const std::string& text, const ColumnRef& target);

// Writes the covariates followed by the response column `target_name`.
void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& target_name = "y");
std::string to_csv(const Dataset& data, const std::string& target_name = "y");

double sample_variance(std::span<const double> values);

}  // namespace sobolrf
