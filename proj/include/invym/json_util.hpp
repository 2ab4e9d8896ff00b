#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "invym/matcore.hpp"

namespace invym {

using nlohmann::json;

// Row-major array of 1, 4 or 9 numbers; a bare number is read as a 1x1 matrix.
Mat mat_from_json(const json& j);
json mat_to_json(const Mat& a);

// Finite numbers as-is, non-finite as the string "infinite" (or "nan").
json number_to_json(double v);

// Throws InvalidArgument naming the first key of `obj` not in `allowed`.
void require_known_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                        std::string_view context);

double get_number(const json& obj, std::string_view key, double fallback);
double get_number(const json& obj, std::string_view key);
int get_int(const json& obj, std::string_view key, int fallback);
bool get_bool(const json& obj, std::string_view key, bool fallback);

}  // namespace invym
