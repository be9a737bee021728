#pragma once

// Long-format choice CSV:
//
//   obs_id,alt_id,chosen,<attr1>,...,price[,construct:<name>...]
//
// One row per alternative, rows ordered by (obs_id, alt_id). alt_id 0 is
// the outside option (its attribute and construct cells are written as 0
// and ignored on read); inside alternatives use alt_id 1..J. Every obs_id
// has exactly one row with chosen = 1.

#include <iosfwd>
#include <string>
#include <string_view>

#include "choiceforge/choice_core.hpp"
#include "choiceforge/errors.hpp"

namespace choiceforge::io {

/// Malformed CSV input; carries the 1-based row and column when known.
class CsvError : public InputError {
 public:
  CsvError(std::size_t row, std::string column, const std::string& what);

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

inline constexpr std::string_view kConstructPrefix = "construct:";

void write_dataset_csv(std::ostream& out, const ChoiceDataset& data);
void write_dataset_csv(const std::string& path, const ChoiceDataset& data);

ChoiceDataset read_dataset_csv(std::istream& in, const std::string& price_column = "price");
ChoiceDataset read_dataset_csv_file(const std::string& path, const std::string& price_column = "price");

/// Shortest decimal string that parses back to exactly `v`.
std::string format_exact(double v);

/// `v` with `digits` significant digits (printf %.*g).
std::string format_significant(double v, int digits);

double parse_double(std::string_view text);

}  // namespace choiceforge::io
