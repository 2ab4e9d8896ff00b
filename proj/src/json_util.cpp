#include "invym/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "invym/error.hpp"

namespace invym {

Mat mat_from_json(const json& j) {
  if (j.is_number()) return Mat::scalar(j.get<double>());
  if (!j.is_array()) {
    throw InvalidArgument("matrix must be a number or a row-major array");
  }
  std::vector<double> values;
  values.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) throw InvalidArgument("matrix entries must be numbers");
    values.push_back(e.get<double>());
  }
  return Mat::from_row_major(values);
}

json mat_to_json(const Mat& a) {
  json out = json::array();
  for (double v : a.entries()) out.push_back(number_to_json(v));
  return out;
}

json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "infinite" : "-infinite";
}

void require_known_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                        std::string_view context) {
  if (obj.is_null()) return;
  if (!obj.is_object()) {
    throw InvalidArgument(std::string(context) + ": expected a JSON object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InvalidArgument(std::string(context) + ": unknown key '" + key + "'");
    }
  }
}

double get_number(const json& obj, std::string_view key, double fallback) {
  if (obj.is_null() || !obj.contains(key)) return fallback;
  return get_number(obj, key);
}

double get_number(const json& obj, std::string_view key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InvalidArgument("missing required key '" + std::string(key) + "'");
  }
  const json& v = obj.at(std::string(key));
  if (!v.is_number()) {
    throw InvalidArgument("key '" + std::string(key) + "' must be a number");
  }
  return v.get<double>();
}

int get_int(const json& obj, std::string_view key, int fallback) {
  if (obj.is_null() || !obj.contains(key)) return fallback;
  const json& v = obj.at(std::string(key));
  if (!v.is_number_integer()) {
    throw InvalidArgument("key '" + std::string(key) + "' must be an integer");
  }
  return v.get<int>();
}

bool get_bool(const json& obj, std::string_view key, bool fallback) {
  if (obj.is_null() || !obj.contains(key)) return fallback;
  const json& v = obj.at(std::string(key));
  if (!v.is_boolean()) {
    throw InvalidArgument("key '" + std::string(key) + "' must be a boolean");
  }
  return v.get<bool>();
}

}  // namespace invym
