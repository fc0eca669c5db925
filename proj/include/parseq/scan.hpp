#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "parseq/parallel.hpp"

namespace parseq {

// Shape of one work-efficient sweep over `length` elements.
struct ScanPlan {
    std::size_t length = 0;
    std::size_t padded_length = 0;  // next power of two
    int levels = 0;                 // sweep depth, ceil(log2 length)
    bool inclusive = true;
};

inline ScanPlan make_scan_plan(std::size_t length) {
    if (length == 0) throw std::invalid_argument("empty scan");
    ScanPlan plan;
    plan.length = length;
    plan.padded_length = 1;
    while (plan.padded_length < length) {
        plan.padded_length <<= 1;
        ++plan.levels;
    }
    return plan;
}

// Left-to-right reference scan: output[k] = combine(e[k], combine(e[k-1], ...)),
// output[0] = e[0]. combine(later, earlier) must be associative over the
// element set; for matrices this is plain left-multiplication.
template <class T, class Combine>
std::vector<T> sequential_scan(std::span<const T> elements, Combine&& combine) {
    if (elements.empty()) throw std::invalid_argument("empty scan");
    std::vector<T> out;
    out.reserve(elements.size());
    out.push_back(elements[0]);
    for (std::size_t k = 1; k < elements.size(); ++k) {
        out.push_back(combine(elements[k], out.back()));
    }
    return out;
}

// Work-efficient inclusive scan: an up-sweep builds subtree products in place
// and a down-sweep fills in the remaining prefixes. Inputs are padded with
// `identity` to a power of two; padded slots are dropped from the output.
//
// Combines within one sweep level read slots written by earlier levels only,
// so they may run concurrently and the combine order — hence the result, even
// for floating-point elements — does not depend on the worker count. Total
// combine calls are at most 1.5x the padded length.
template <class T, class Combine>
std::vector<T> inclusive_scan(std::span<const T> elements, Combine&& combine,
                              const T& identity) {
    if (elements.empty()) throw std::invalid_argument("empty scan");
    const std::size_t n = elements.size();
    const ScanPlan plan = make_scan_plan(n);
    const std::size_t p = plan.padded_length;

    std::vector<T> a(elements.begin(), elements.end());
    a.resize(p, identity);

    for (std::size_t stride = 1; stride < p; stride <<= 1) {
        const std::size_t step = 2 * stride;
        parallel_for(
            0, p / step,
            [&](std::size_t j) {
                const std::size_t i = step * j + step - 1;
                a[i] = combine(a[i], a[i - stride]);
            },
            /*grain=*/8);
    }
    for (std::size_t stride = p >> 2; stride >= 1; stride >>= 1) {
        const std::size_t step = 2 * stride;
        parallel_for(
            0, p / step - 1,
            [&](std::size_t j) {
                const std::size_t i = 3 * stride - 1 + step * j;
                a[i] = combine(a[i], a[i - stride]);
            },
            /*grain=*/8);
    }

    a.resize(n);
    return a;
}

}  // namespace parseq
