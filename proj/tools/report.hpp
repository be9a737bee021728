#pragma once

// JSON records exchanged between CLI commands.

#include <string>
#include <vector>

#include "json.hpp"

#include "choiceforge/choice_core.hpp"

namespace choiceforge::cli {

using Json = nlohmann::ordered_json;

struct ClassSummary {
  double share = 0.0;
  ParameterVector params;
};

/// What analyze and optimize need from an estimation report. Only `betas`
/// is mandatory in the file; the schema defaults to the beta names with
/// "price" as the price attribute.
struct ModelReport {
  std::string model;
  AttributeSchema schema;
  ParameterVector params;
  std::vector<double> standard_errors;  // per beta; NaN when not reported
  std::vector<double> reference_offer;  // schema order; empty when absent
  std::vector<ClassSummary> classes;
};

ModelReport parse_model_report(const Json& j);
ModelReport read_model_report(const std::string& path);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// {name: value} in schema order.
Json named_values(const std::vector<std::string>& names, const std::vector<double>& values);

/// Shortest round-trip decimal that always shows a decimal point or an
/// exponent, so 2 prints as "2.0".
std::string format_number(double v);

}  // namespace choiceforge::cli
