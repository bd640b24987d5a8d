#include "pdx/kernels.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pdx {

Metric parse_metric(std::string_view name) {
    if (name == "l2" || name == "L2") return Metric::L2;
    if (name == "l1" || name == "L1") return Metric::L1;
    if (name == "ip" || name == "IP") return Metric::IP;
    throw std::invalid_argument("unknown metric '" + std::string(name) + "' (expected l2, l1 or ip)");
}

std::string_view to_string(Metric metric) {
    switch (metric) {
    case Metric::L2: return "l2";
    case Metric::L1: return "l1";
    case Metric::IP: return "ip";
    }
    return "?";
}

namespace {

template <Metric M>
inline float term(float q, float v) {
    if constexpr (M == Metric::L2) {
        const float diff = q - v;
        return diff * diff;
    } else if constexpr (M == Metric::L1) {
        return std::fabs(q - v);
    } else {
        return q * v;
    }
}

template <Metric M>
void accumulate_dim(const float* __restrict dim, float q, float* __restrict acc, std::size_t slots) {
    for (std::size_t i = 0; i < slots; ++i) acc[i] += term<M>(q, dim[i]);
}

template <Metric M>
void accumulate_dim_selected(const float* __restrict dim, float q, float* __restrict acc,
                             const std::uint32_t* __restrict positions, std::size_t count) {
    for (std::size_t p = 0; p < count; ++p) {
        const std::uint32_t slot = positions[p];
        acc[slot] += term<M>(q, dim[slot]);
    }
}

// Tight loop for the default block size: the accumulator lives in registers
// across the whole dimension range.
template <Metric M, std::size_t N>
void accumulate_range_fixed(const float* __restrict data, const float* __restrict query, std::size_t begin,
                            std::size_t end, float* __restrict out) {
    float acc[N];
    for (std::size_t i = 0; i < N; ++i) acc[i] = out[i];
    for (std::size_t j = begin; j < end; ++j) {
        const float q = query[j];
        const float* dim = data + j * N;
        for (std::size_t i = 0; i < N; ++i) acc[i] += term<M>(q, dim[i]);
    }
    for (std::size_t i = 0; i < N; ++i) out[i] = acc[i];
}

template <Metric M>
void accumulate_range(const PdxBlock& block, const float* query, DimRange dims, float* acc) {
    if (block.m_padded == kDefaultBlockSize) {
        accumulate_range_fixed<M, kDefaultBlockSize>(block.data.data(), query, dims.begin, dims.end, acc);
        return;
    }
    for (std::size_t j = dims.begin; j < dims.end; ++j)
        accumulate_dim<M>(block.data.data() + j * block.m_padded, query[j], acc, block.m_padded);
}

template <Metric M>
void accumulate_ordered(const PdxBlock& block, const float* pq, const std::uint32_t* order, DimRange steps,
                        float* acc) {
    for (std::size_t s = steps.begin; s < steps.end; ++s)
        accumulate_dim<M>(block.data.data() + std::size_t{order[s]} * block.m_padded, pq[s], acc, block.m_padded);
}

template <typename F>
void dispatch(Metric metric, F&& f) {
    switch (metric) {
    case Metric::L2: f.template operator()<Metric::L2>(); break;
    case Metric::L1: f.template operator()<Metric::L1>(); break;
    case Metric::IP: f.template operator()<Metric::IP>(); break;
    }
}

void check_common(const PdxBlock& block, std::span<const float> query, DimRange dims,
                  const DistanceAccumulator& acc, const char* who) {
    if (query.size() != block.d)
        throw std::invalid_argument(std::string(who) + ": query has " + std::to_string(query.size()) +
                                    " dims, block has " + std::to_string(block.d));
    if (dims.begin > dims.end || dims.end > block.d)
        throw std::invalid_argument(std::string(who) + ": dimension range [" + std::to_string(dims.begin) + "," +
                                    std::to_string(dims.end) + ") out of bounds for d=" + std::to_string(block.d));
    if (acc.values.size() < block.m_padded)
        throw std::invalid_argument(std::string(who) + ": accumulator smaller than block");
}

void check_positions(const PdxBlock& block, std::span<const std::uint32_t> positions, const char* who) {
    for (std::size_t p = 0; p < positions.size(); ++p) {
        if (positions[p] >= block.m)
            throw std::invalid_argument(std::string(who) + ": position " + std::to_string(positions[p]) +
                                        " >= m=" + std::to_string(block.m));
        if (p > 0 && positions[p] <= positions[p - 1])
            throw std::invalid_argument(std::string(who) + ": positions must be strictly increasing");
    }
}

}  // namespace

void vertical_accumulate(const PdxBlock& block, std::span<const float> query, DimRange dims, Metric metric,
                         DistanceAccumulator& acc) {
    check_common(block, query, dims, acc, "vertical_accumulate");
    dispatch(metric, [&]<Metric M>() { accumulate_range<M>(block, query.data(), dims, acc.values.data()); });
}

void vertical_accumulate_selected(const PdxBlock& block, std::span<const float> query, DimRange dims,
                                  Metric metric, DistanceAccumulator& acc, std::span<const std::uint32_t> positions) {
    check_common(block, query, dims, acc, "vertical_accumulate_selected");
    check_positions(block, positions, "vertical_accumulate_selected");
    dispatch(metric, [&]<Metric M>() {
        for (std::size_t j = dims.begin; j < dims.end; ++j)
            accumulate_dim_selected<M>(block.data.data() + j * block.m_padded, query[j], acc.values.data(),
                                       positions.data(), positions.size());
    });
}

void vertical_accumulate_ordered(const PdxBlock& block, std::span<const float> permuted_query,
                                 std::span<const std::uint32_t> order, DimRange steps, Metric metric,
                                 DistanceAccumulator& acc) {
    assert(steps.end <= order.size() && permuted_query.size() == order.size());
    assert(acc.values.size() >= block.m_padded);
    dispatch(metric, [&]<Metric M>() {
        accumulate_ordered<M>(block, permuted_query.data(), order.data(), steps, acc.values.data());
    });
}

void vertical_accumulate_ordered_selected(const PdxBlock& block, std::span<const float> permuted_query,
                                          std::span<const std::uint32_t> order, DimRange steps, Metric metric,
                                          DistanceAccumulator& acc, std::span<const std::uint32_t> positions) {
    assert(steps.end <= order.size() && permuted_query.size() == order.size());
    dispatch(metric, [&]<Metric M>() {
        for (std::size_t s = steps.begin; s < steps.end; ++s)
            accumulate_dim_selected<M>(block.data.data() + std::size_t{order[s]} * block.m_padded,
                                       permuted_query[s], acc.values.data(), positions.data(), positions.size());
    });
}

double horizontal_distance(std::span<const float> vector, std::span<const float> query, Metric metric) {
    if (vector.size() != query.size())
        throw std::invalid_argument("horizontal_distance: length mismatch (" + std::to_string(vector.size()) +
                                    " vs " + std::to_string(query.size()) + ")");
    double sum = 0.0;
    for (std::size_t j = 0; j < vector.size(); ++j) {
        const double v = vector[j];
        const double q = query[j];
        switch (metric) {
        case Metric::L2: sum += (v - q) * (v - q); break;
        case Metric::L1: sum += std::fabs(v - q); break;
        case Metric::IP: sum += v * q; break;
        }
    }
    return sum;
}

float horizontal_distance_f32(std::span<const float> vector, std::span<const float> query, Metric metric) {
    if (vector.size() != query.size()) throw std::invalid_argument("horizontal_distance_f32: length mismatch");
    float sum = 0.0f;
    dispatch(metric, [&]<Metric M>() {
        const float* v = vector.data();
        const float* q = query.data();
        for (std::size_t j = 0; j < vector.size(); ++j) sum += term<M>(q[j], v[j]);
    });
    return sum;
}

}  // namespace pdx
