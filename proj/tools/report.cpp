#include "report.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "choiceforge/errors.hpp"
#include "choiceforge/io.hpp"

namespace choiceforge::cli {

namespace {

double number_or_nan(const Json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw InputError("expected a number in report, got " + v.dump());
  return v.get<double>();
}

std::vector<double> by_name(const Json& obj, const AttributeSchema& schema, const char* field) {
  if (!obj.is_object()) throw InputError(std::string("report field '") + field + "' must be an object");
  std::vector<double> out(schema.size());
  for (std::size_t k = 0; k < schema.size(); ++k) {
    const auto it = obj.find(schema.names[k]);
    if (it == obj.end()) throw InputError(std::string("report field '") + field + "' lacks '" + schema.names[k] + "'");
    out[k] = number_or_nan(*it);
  }
  if (obj.size() != schema.size()) throw InputError(std::string("report field '") + field + "' has unknown names");
  return out;
}

std::vector<double> constants_of(const Json& j) {
  std::vector<double> out;
  if (const auto it = j.find("constants"); it != j.end()) {
    for (const auto& v : *it) out.push_back(number_or_nan(v));
  }
  return out;
}

}  // namespace

ModelReport parse_model_report(const Json& j) {
  if (!j.is_object()) throw InputError("report must be a JSON object");
  const auto betas = j.find("betas");
  if (betas == j.end() || !betas->is_object() || betas->empty()) throw InputError("report has no 'betas' object");

  ModelReport r;
  r.model = j.value("model", std::string("mnl"));
  std::vector<std::string> names;
  std::string price = "price";
  if (const auto s = j.find("schema"); s != j.end()) {
    names = s->at("attributes").get<std::vector<std::string>>();
    price = s->value("price", price);
  } else {
    for (const auto& [name, _] : betas->items()) names.push_back(name);
  }
  try {
    r.schema = AttributeSchema::with_price(names, price);
  } catch (const SchemaError& e) {
    throw InputError(std::string("report schema: ") + e.what());
  }
  r.params.betas = by_name(*betas, r.schema, "betas");
  r.params.alternative_constants = constants_of(j);
  for (double b : r.params.betas) {
    if (!std::isfinite(b)) throw InputError("report betas must be finite");
  }
  r.params.validate(r.schema);

  if (const auto se = j.find("standard_errors"); se != j.end()) {
    r.standard_errors = by_name(*se, r.schema, "standard_errors");
  } else {
    r.standard_errors.assign(r.schema.size(), std::numeric_limits<double>::quiet_NaN());
  }
  if (const auto ref = j.find("reference_offer"); ref != j.end()) r.reference_offer = by_name(*ref, r.schema, "reference_offer");
  if (const auto cls = j.find("classes"); cls != j.end()) {
    for (const auto& c : *cls) {
      ClassSummary s;
      s.share = c.at("share").get<double>();
      s.params.betas = by_name(c.at("betas"), r.schema, "classes.betas");
      s.params.alternative_constants = constants_of(c);
      r.classes.push_back(std::move(s));
    }
  }
  return r;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

ModelReport read_model_report(const std::string& path) {
  try {
    return parse_model_report(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path + "' is not a usable estimation report: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

Json named_values(const std::vector<std::string>& names, const std::vector<double>& values) {
  Json obj = Json::object();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const double v = k < values.size() ? values[k] : std::numeric_limits<double>::quiet_NaN();
    obj[names[k]] = std::isfinite(v) ? Json(v) : Json(nullptr);
  }
  return obj;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::string s = io::format_exact(v);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace choiceforge::cli
