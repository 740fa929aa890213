#ifndef AMRC_SRC_JSON_FIELDS_HPP
#define AMRC_SRC_JSON_FIELDS_HPP

#include "amrc/common.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <string>

namespace amrc::detail {

// Reads named fields from a JSON object and rejects keys nobody asked for.
class FieldReader {
public:
    FieldReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_ + ": expected an object");
    }

    std::string path(const std::string& key) const { return path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const nlohmann::json& raw(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ValidationError(path(key) + ": required field missing");
        return j_.at(key);
    }

    template <typename T>
    void optional(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        out = convert<T>(key, j_.at(key));
    }

    template <typename T>
    T required(const std::string& key) {
        return convert<T>(key, raw(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ValidationError(path(it.key()) + ": unknown field");
        }
    }

private:
    template <typename T>
    T convert(const std::string& key, const nlohmann::json& v) const {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ValidationError(path(key) + ": expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ValidationError(path(key) + ": expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
                    throw ValidationError(path(key) + ": expected a non-negative integer");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ValidationError(path(key) + ": expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ValidationError(path(key) + ": expected a string");
        }
        try {
            return v.get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path(key) + ": " + e.what());
        }
    }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace amrc::detail

#endif  // AMRC_SRC_JSON_FIELDS_HPP
