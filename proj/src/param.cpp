#include "openfed/param.hpp"

#include <cmath>

namespace openfed {

namespace {

void check_entries(const param_vector::map_type& entries) {
    for (const auto& [name, values] : entries) {
        if (values.empty()) {
            throw non_finite_value("parameter '" + name + "' has no elements");
        }
        for (double v : values) {
            if (!std::isfinite(v)) {
                throw non_finite_value("parameter '" + name + "' contains a non-finite value");
            }
        }
    }
}

}  // namespace

param_vector::param_vector(map_type entries) : entries_(std::move(entries)) {
    check_entries(entries_);
}

std::size_t param_vector::element_count() const {
    std::size_t total = 0;
    for (const auto& [name, values] : entries_) total += values.size();
    return total;
}

const std::vector<double>& param_vector::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw shape_mismatch("no parameter named '" + name + "'");
    }
    return it->second;
}

bool param_vector::same_shape(const param_vector& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    for (; a != entries_.end(); ++a, ++b) {
        if (a->first != b->first || a->second.size() != b->second.size()) return false;
    }
    return true;
}

void require_same_shape(const param_vector& x, const param_vector& y) {
    if (x.tensor_count() != y.tensor_count()) {
        throw shape_mismatch("parameter maps have different tensor counts (" +
                             std::to_string(x.tensor_count()) + " vs " +
                             std::to_string(y.tensor_count()) + ")");
    }
    auto a = x.entries().begin();
    auto b = y.entries().begin();
    for (; a != x.entries().end(); ++a, ++b) {
        if (a->first != b->first) {
            throw shape_mismatch("parameter name mismatch: '" + a->first + "' vs '" + b->first + "'");
        }
        if (a->second.size() != b->second.size()) {
            throw shape_mismatch("parameter '" + a->first + "' length mismatch (" +
                                 std::to_string(a->second.size()) + " vs " +
                                 std::to_string(b->second.size()) + ")");
        }
    }
}

param_vector zeros_like(const param_vector& p) {
    param_vector::map_type out;
    for (const auto& [name, values] : p.entries()) {
        out.emplace(name, std::vector<double>(values.size(), 0.0));
    }
    return param_vector(std::move(out));
}

param_vector axpy(double alpha, const param_vector& x, const param_vector& y) {
    require_same_shape(x, y);
    param_vector::map_type out;
    auto a = x.entries().begin();
    auto b = y.entries().begin();
    for (; a != x.entries().end(); ++a, ++b) {
        std::vector<double> values(a->second.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            values[i] = alpha * a->second[i] + b->second[i];
        }
        out.emplace(a->first, std::move(values));
    }
    return param_vector(std::move(out));
}

param_vector scale(double alpha, const param_vector& x) {
    param_vector::map_type out;
    for (const auto& [name, values] : x.entries()) {
        std::vector<double> scaled(values.size());
        for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = alpha * values[i];
        out.emplace(name, std::move(scaled));
    }
    return param_vector(std::move(out));
}

double l2_distance(const param_vector& x, const param_vector& y) {
    require_same_shape(x, y);
    double sum = 0.0;
    auto a = x.entries().begin();
    auto b = y.entries().begin();
    for (; a != x.entries().end(); ++a, ++b) {
        for (std::size_t i = 0; i < a->second.size(); ++i) {
            double d = a->second[i] - b->second[i];
            sum += d * d;
        }
    }
    return std::sqrt(sum);
}

}  // namespace openfed
