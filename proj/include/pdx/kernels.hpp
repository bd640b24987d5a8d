#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pdx/layout.hpp"

namespace pdx {

// L2 is squared Euclidean. IP is a similarity (larger is better); searches
// rank it by minimising the negated value.
enum class Metric { L2, L1, IP };

Metric parse_metric(std::string_view name);
std::string_view to_string(Metric metric);

struct DimRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t width() const noexcept { return end - begin; }
    friend bool operator==(const DimRange&, const DimRange&) = default;
};

// One running partial distance per slot of a block (m_padded wide).
struct DistanceAccumulator {
    std::vector<float> values;

    DistanceAccumulator() = default;
    explicit DistanceAccumulator(std::size_t slots) : values(slots, 0.0f) {}
    explicit DistanceAccumulator(const PdxBlock& block) : values(block.m_padded, 0.0f) {}

    void reset(std::size_t slots) { values.assign(slots, 0.0f); }
    float operator[](std::size_t i) const { return values[i]; }
};

/// Vertical kernel: for each dimension in `dims`, add that dimension's
/// contribution to every slot of the block.
///
/// Outer loop over dimensions, inner loop over all m_padded slots with no
/// data-dependent branches so the compiler can vectorise across vectors.
void vertical_accumulate(const PdxBlock& block, std::span<const float> query, DimRange dims, Metric metric,
                         DistanceAccumulator& acc);

/// Same as above for the selected slots only; other slots are untouched.
/// `positions` must be strictly increasing and < block.m.
void vertical_accumulate_selected(const PdxBlock& block, std::span<const float> query, DimRange dims,
                                  Metric metric, DistanceAccumulator& acc, std::span<const std::uint32_t> positions);

// Permuted-order variants used by query-aware dimension orderings. Step
// `i` reads block dimension order[i] against permuted_query[i]; no bounds
// checks beyond debug asserts (the search validates once per query).
void vertical_accumulate_ordered(const PdxBlock& block, std::span<const float> permuted_query,
                                 std::span<const std::uint32_t> order, DimRange steps, Metric metric,
                                 DistanceAccumulator& acc);
void vertical_accumulate_ordered_selected(const PdxBlock& block, std::span<const float> permuted_query,
                                          std::span<const std::uint32_t> order, DimRange steps, Metric metric,
                                          DistanceAccumulator& acc, std::span<const std::uint32_t> positions);

// N-ary reference distance with 64-bit accumulation.
double horizontal_distance(std::span<const float> vector, std::span<const float> query, Metric metric);

// N-ary scalar kernel in 32-bit: the baseline a row-major scan would use.
float horizontal_distance_f32(std::span<const float> vector, std::span<const float> query, Metric metric);

}  // namespace pdx
