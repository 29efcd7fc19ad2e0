#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "openfed/errors.hpp"

namespace openfed {

// Named dense float64 tensors; the unit of model exchange and of all
// aggregation arithmetic. Iteration order is lexicographic by name, so
// serialization and sums are reproducible. Instances are immutable after
// construction: every operation returns a new value, which makes them safe
// to share across threads.
//
// Construction enforces the container invariants: no empty tensors and no
// NaN/Inf values (non_finite_value otherwise). Arithmetic that overflows to
// Inf therefore throws instead of propagating poison values.
class param_vector {
public:
    using map_type = std::map<std::string, std::vector<double>>;

    param_vector() = default;
    explicit param_vector(map_type entries);

    const map_type& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t tensor_count() const { return entries_.size(); }
    std::size_t element_count() const;

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    // throws shape_mismatch when the name is absent
    const std::vector<double>& at(const std::string& name) const;

    // identical names and per-name lengths
    bool same_shape(const param_vector& other) const;

    friend bool operator==(const param_vector&, const param_vector&) = default;

private:
    map_type entries_;
};

// throws shape_mismatch naming the first differing tensor
void require_same_shape(const param_vector& x, const param_vector& y);

param_vector zeros_like(const param_vector& p);

// result[n][i] = alpha * x[n][i] + y[n][i]
param_vector axpy(double alpha, const param_vector& x, const param_vector& y);

param_vector scale(double alpha, const param_vector& x);

// Euclidean norm of x - y over all entries, flattened
double l2_distance(const param_vector& x, const param_vector& y);

// A model update tagged with its aggregation weight (typically the local
// sample count) and the round it was produced in.
struct weighted_model {
    param_vector params;
    double weight = 1.0;
    std::uint64_t round = 0;
};

}  // namespace openfed
