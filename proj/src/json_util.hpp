#pragma once

#include "mmskit/error.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace mmskit::detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw ParseError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(path.empty() ? key : path + "." + key, "missing required field");
    return *it;
}

inline std::string child(const std::string& path, const char* key) {
    return path.empty() ? std::string(key) : path + "." + key;
}

inline std::string element(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

inline std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ParseError(path, "expected a string");
    return v.get<std::string>();
}

inline double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ParseError(path, "expected a number");
    return v.get<double>();
}

inline int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ParseError(path, "expected an integer");
    return v.get<int>();
}

inline bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ParseError(path, "expected a boolean");
    return v.get<bool>();
}

inline const json& as_array(const json& v, const std::string& path) {
    if (!v.is_array()) throw ParseError(path, "expected an array");
    return v;
}

inline const json& as_object(const json& v, const std::string& path) {
    if (!v.is_object()) throw ParseError(path, "expected an object");
    return v;
}

inline std::vector<std::string> as_string_list(const json& v, const std::string& path) {
    std::vector<std::string> out;
    const auto& arr = as_array(v, path);
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_string(arr[i], element(path, i)));
    return out;
}

inline std::string optional_string(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    return it == obj.end() ? std::string{} : as_string(*it, child(path, key));
}

} // namespace mmskit::detail
