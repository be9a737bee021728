#include "choiceforge/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace choiceforge::io {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

long long parse_integer(std::string_view text, std::size_t row, const std::string& column) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw CsvError(row, column, "expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

CsvError::CsvError(std::size_t row, std::string column, const std::string& what)
    : InputError("malformed CSV at row " + std::to_string(row) + (column.empty() ? "" : ", column '" + column + "'") +
                 ": " + what),
      row_(row),
      column_(std::move(column)) {}

std::string format_exact(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InputError("cannot format number");
  return std::string(buf, ptr);
}

std::string format_significant(double v, int digits) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw InputError("expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

void write_dataset_csv(std::ostream& out, const ChoiceDataset& data) {
  data.validate();
  out << "obs_id,alt_id,chosen";
  for (const auto& name : data.schema.names) out << ',' << name;
  for (const auto& name : data.construct_names) out << ',' << kConstructPrefix << name;
  out << '\n';

  const std::size_t k_count = data.schema.size();
  const std::size_t c_count = data.construct_names.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& obs = data.observations[i];
    const auto& alts = obs.scenario.alternatives;
    if (obs.scenario.includes_outside_option) {
      out << (i + 1) << ",0," << (obs.chosen_index == obs.scenario.outside_index() ? 1 : 0);
      for (std::size_t k = 0; k < k_count + c_count; ++k) out << ",0";
      out << '\n';
    }
    for (std::size_t j = 0; j < alts.size(); ++j) {
      out << (i + 1) << ',' << (j + 1) << ',' << (obs.chosen_index == j ? 1 : 0);
      for (double v : alts[j].values) out << ',' << format_exact(v);
      for (double v : alts[j].constructs) out << ',' << format_exact(v);
      out << '\n';
    }
  }
}

void write_dataset_csv(const std::string& path, const ChoiceDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  write_dataset_csv(out, data);
  if (!out) throw InputError("failed writing '" + path + "'");
}

ChoiceDataset read_dataset_csv(std::istream& in, const std::string& price_column) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError(1, "", "missing header");
  const auto header = split(line);
  if (header.size() < 4 || trim(header[0]) != "obs_id" || trim(header[1]) != "alt_id" || trim(header[2]) != "chosen") {
    throw CsvError(1, "", "header must start with obs_id,alt_id,chosen followed by attribute columns");
  }

  ChoiceDataset data;
  std::vector<std::string> columns;
  std::vector<std::string> attributes;
  bool in_constructs = false;
  for (std::size_t c = 3; c < header.size(); ++c) {
    const std::string name(trim(header[c]));
    columns.push_back(name);
    if (name.starts_with(kConstructPrefix)) {
      in_constructs = true;
      const std::string construct = name.substr(kConstructPrefix.size());
      if (construct.empty()) throw CsvError(1, name, "construct column needs a name");
      data.construct_names.push_back(construct);
    } else {
      if (in_constructs) throw CsvError(1, name, "attribute columns must precede construct columns");
      if (name.empty()) throw CsvError(1, "", "empty column name");
      attributes.push_back(name);
    }
  }
  if (attributes.empty()) throw CsvError(1, "", "no attribute columns");
  try {
    data.schema = AttributeSchema::with_price(attributes, price_column);
  } catch (const SchemaError& e) {
    throw CsvError(1, price_column, e.what());
  }

  const std::size_t k_count = attributes.size();
  const std::size_t c_count = data.construct_names.size();
  const std::size_t width = 3 + k_count + c_count;

  long long current_obs = -1;
  long long last_alt = -1;
  int chosen_count = 0;
  ChoiceObservation pending;
  std::size_t pending_chosen = 0;
  bool pending_outside_chosen = false;
  std::size_t pending_first_row = 0;

  const auto flush = [&](std::size_t row) {
    if (current_obs < 0) return;
    if (chosen_count != 1) {
      throw CsvError(pending_first_row, "chosen",
                     "obs_id " + std::to_string(current_obs) + " must have exactly one chosen=1 row");
    }
    pending.chosen_index = pending_outside_chosen ? pending.scenario.outside_index() : pending_chosen;
    if (pending.scenario.alternatives.empty()) {
      throw CsvError(row, "alt_id", "obs_id " + std::to_string(current_obs) + " has no inside alternatives");
    }
    if (pending.scenario.effective_size() < 2) {
      throw CsvError(pending_first_row, "alt_id", "obs_id " + std::to_string(current_obs) + " needs two alternatives");
    }
    data.observations.push_back(std::move(pending));
    pending = ChoiceObservation{};
  };

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != width) {
      throw CsvError(row, "", "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    const long long obs_id = parse_integer(trim(fields[0]), row, "obs_id");
    const long long alt_id = parse_integer(trim(fields[1]), row, "alt_id");
    const long long chosen = parse_integer(trim(fields[2]), row, "chosen");
    if (chosen != 0 && chosen != 1) throw CsvError(row, "chosen", "chosen must be 0 or 1");
    if (alt_id < 0) throw CsvError(row, "alt_id", "alt_id must be non-negative");

    if (obs_id != current_obs) {
      if (obs_id < current_obs) throw CsvError(row, "obs_id", "rows must be ordered by ascending obs_id");
      flush(row);
      current_obs = obs_id;
      last_alt = -1;
      chosen_count = 0;
      pending_outside_chosen = false;
      pending_first_row = row;
    }
    if (alt_id <= last_alt) throw CsvError(row, "alt_id", "rows must be ordered by ascending alt_id within obs_id");
    chosen_count += static_cast<int>(chosen);

    std::vector<double> values(k_count + c_count);
    for (std::size_t c = 0; c < k_count + c_count; ++c) {
      try {
        values[c] = parse_double(fields[3 + c]);
      } catch (const InputError&) {
        throw CsvError(row, columns[c], "expected a number, got '" + std::string(trim(fields[3 + c])) + "'");
      }
      if (!std::isfinite(values[c])) throw CsvError(row, columns[c], "value is not finite");
    }

    if (alt_id == 0) {
      pending.scenario.includes_outside_option = true;
      if (chosen == 1) pending_outside_chosen = true;
    } else {
      if (static_cast<std::size_t>(alt_id) != pending.scenario.alternatives.size() + 1) {
        throw CsvError(row, "alt_id", "inside alternatives must be numbered 1..J without gaps");
      }
      if (values[data.schema.price_index] < 0.0) throw CsvError(row, price_column, "price must be non-negative");
      if (chosen == 1) pending_chosen = pending.scenario.alternatives.size();
      AttributeVector alt;
      alt.values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k_count));
      alt.constructs.assign(values.begin() + static_cast<std::ptrdiff_t>(k_count), values.end());
      pending.scenario.alternatives.push_back(std::move(alt));
    }
    last_alt = alt_id;
  }
  flush(row + 1);
  if (data.observations.empty()) throw CsvError(row, "", "dataset has no observations");
  return data;
}

ChoiceDataset read_dataset_csv_file(const std::string& path, const std::string& price_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_dataset_csv(in, price_column);
}

}  // namespace choiceforge::io
