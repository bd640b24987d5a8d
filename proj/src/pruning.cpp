#include "pdx/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace pdx {

OrthogonalTransform OrthogonalTransform::identity(std::size_t d) {
    if (d == 0) throw std::invalid_argument("OrthogonalTransform::identity: d must be >= 1");
    return {d, 0, Eigen::MatrixXf::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))};
}

OrthogonalTransform generate_orthogonal(std::size_t d, std::uint64_t seed) {
    if (d == 0) throw std::invalid_argument("generate_orthogonal: d must be >= 1");
    const auto n = static_cast<Eigen::Index>(d);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd gaussian(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) gaussian(i, j) = normal(rng);

    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);

    return {d, seed, q.cast<float>()};
}

std::vector<float> apply_transform(const OrthogonalTransform& t, std::span<const float> x) {
    if (x.size() != t.d)
        throw std::invalid_argument("apply_transform: vector has " + std::to_string(x.size()) +
                                    " dims, transform has " + std::to_string(t.d));
    std::vector<float> y(t.d);
    Eigen::Map<Eigen::VectorXf>(y.data(), static_cast<Eigen::Index>(t.d)) =
        t.matrix * Eigen::Map<const Eigen::VectorXf>(x.data(), static_cast<Eigen::Index>(t.d));
    return y;
}

VectorCollection apply_transform(const OrthogonalTransform& t, const VectorCollection& collection) {
    if (collection.dim() != t.d)
        throw std::invalid_argument("apply_transform: collection has " + std::to_string(collection.dim()) +
                                    " dims, transform has " + std::to_string(t.d));
    VectorCollection out(collection.dim(), std::vector<float>(collection.data().size()), collection.ids());
    if (!collection.empty()) out.matrix().noalias() = collection.matrix() * t.matrix.transpose();
    return out;
}

AdsPruner::AdsPruner(float epsilon0, std::size_t d) : epsilon0(epsilon0), d(d) {
    if (!(epsilon0 > 0.0f)) throw std::invalid_argument("AdsPruner: epsilon0 must be > 0");
    if (d == 0) throw std::invalid_argument("AdsPruner: d must be >= 1");
}

float AdsPruner::bound(float threshold_l2, std::size_t dims_seen) const {
    if (dims_seen >= d) return threshold_l2;
    const float seen = static_cast<float>(dims_seen);
    const float band = 1.0f + epsilon0 / std::sqrt(seen);
    return threshold_l2 * (seen / static_cast<float>(d)) * band * band;
}

bool ads_should_prune(float partial_l2, std::size_t dims_seen, const AdsPruner& pruner, float threshold_l2) {
    if (dims_seen == 0) throw std::invalid_argument("ads_should_prune: dims_seen must be >= 1");
    if (dims_seen > pruner.d)
        throw std::invalid_argument("ads_should_prune: dims_seen " + std::to_string(dims_seen) + " > d=" +
                                    std::to_string(pruner.d));
    return partial_l2 >= pruner.bound(threshold_l2, dims_seen);
}

DimensionOrder parse_dimension_order(std::string_view name) {
    if (name == "sequential") return DimensionOrder::Sequential;
    if (name == "decreasing") return DimensionOrder::Decreasing;
    if (name == "dmeans" || name == "distance_to_means") return DimensionOrder::DistanceToMeans;
    if (name == "zones" || name == "dimension_zones") return DimensionOrder::DimensionZones;
    throw std::invalid_argument("unknown dimension order '" + std::string(name) +
                                "' (expected sequential, decreasing, dmeans or zones)");
}

std::string_view to_string(DimensionOrder order) {
    switch (order) {
    case DimensionOrder::Sequential: return "sequential";
    case DimensionOrder::Decreasing: return "decreasing";
    case DimensionOrder::DistanceToMeans: return "dmeans";
    case DimensionOrder::DimensionZones: return "zones";
    }
    return "?";
}

std::size_t default_zone_width(std::size_t d) { return std::min(d, std::max<std::size_t>(8, d / 16)); }

namespace {

// Indices sorted by descending score; stable so equal scores keep index order.
std::vector<std::uint32_t> rank_descending(const std::vector<float>& score) {
    std::vector<std::uint32_t> idx(score.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return score[a] > score[b]; });
    return idx;
}

}  // namespace

std::vector<std::uint32_t> bond_dimension_order(std::span<const float> query, std::span<const float> means,
                                                DimensionOrder criteria, std::size_t zone_width) {
    const std::size_t d = query.size();
    if (criteria == DimensionOrder::Sequential || criteria == DimensionOrder::Decreasing) {
        if (criteria == DimensionOrder::Decreasing) return rank_descending({query.begin(), query.end()});
        std::vector<std::uint32_t> order(d);
        std::iota(order.begin(), order.end(), 0u);
        return order;
    }
    if (means.size() != d)
        throw std::invalid_argument("bond_dimension_order: query has " + std::to_string(d) + " dims, means has " +
                                    std::to_string(means.size()));
    std::vector<float> gap(d);
    for (std::size_t j = 0; j < d; ++j) gap[j] = std::fabs(query[j] - means[j]);
    if (criteria == DimensionOrder::DistanceToMeans) return rank_descending(gap);

    const std::size_t width = zone_width == 0 ? default_zone_width(d) : std::min(zone_width, d);
    const std::size_t zones = (d + width - 1) / width;
    std::vector<float> zone_score(zones, 0.0f);
    for (std::size_t j = 0; j < d; ++j) zone_score[j / width] += gap[j];
    std::vector<std::uint32_t> order;
    order.reserve(d);
    for (const std::uint32_t z : rank_descending(zone_score)) {
        const std::size_t end = std::min(d, (z + 1) * width);
        for (std::size_t j = z * width; j < end; ++j) order.push_back(static_cast<std::uint32_t>(j));
    }
    return order;
}

}  // namespace pdx
