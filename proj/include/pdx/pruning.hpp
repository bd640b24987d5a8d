#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pdx/layout.hpp"

namespace pdx {

inline constexpr float kDefaultEpsilon0 = 2.1f;

// Random rotation shared by a collection and its queries.
struct OrthogonalTransform {
    std::size_t d = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXf matrix;  // d x d, orthonormal

    static OrthogonalTransform identity(std::size_t d);
};

// Orthonormalises a seeded standard-normal matrix (Householder QR, with the
// sign of R's diagonal folded into Q so the result is Haar distributed).
OrthogonalTransform generate_orthogonal(std::size_t d, std::uint64_t seed);

std::vector<float> apply_transform(const OrthogonalTransform& t, std::span<const float> x);
VectorCollection apply_transform(const OrthogonalTransform& t, const VectorCollection& collection);

struct AdsPruner {
    float epsilon0 = kDefaultEpsilon0;
    std::size_t d = 0;

    AdsPruner(float epsilon0, std::size_t d);

    // Scaled threshold that a partial distance over `dims_seen` dimensions
    // must reach before the vector is discarded.
    float bound(float threshold_l2, std::size_t dims_seen) const;
};

// ADSampling hypothesis test on a partial squared-L2 distance measured in
// the rotated space. At dims_seen == d this is the exact comparison.
bool ads_should_prune(float partial_l2, std::size_t dims_seen, const AdsPruner& pruner, float threshold_l2);

// Partial L2/L1 sums only grow, so reaching the threshold is final.
inline bool bond_should_prune(float partial, float threshold) { return partial >= threshold; }

enum class DimensionOrder { Sequential, Decreasing, DistanceToMeans, DimensionZones };

DimensionOrder parse_dimension_order(std::string_view name);
std::string_view to_string(DimensionOrder order);

std::size_t default_zone_width(std::size_t d);

struct BondPruner {
    DimensionOrder criteria = DimensionOrder::DistanceToMeans;
    std::size_t zone_width = 0;  // 0 selects default_zone_width(d)
};

// Query-aware visiting order of dimensions. Ties go to the lower index.
std::vector<std::uint32_t> bond_dimension_order(std::span<const float> query, std::span<const float> means,
                                                DimensionOrder criteria, std::size_t zone_width = 0);

}  // namespace pdx
