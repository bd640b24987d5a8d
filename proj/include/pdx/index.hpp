#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pdx/layout.hpp"
#include "pdx/pdxearch.hpp"
#include "pdx/pruning.hpp"

namespace pdx {

inline constexpr std::size_t kDefaultMaxIters = 20;
inline constexpr std::size_t kDefaultPartitionSize = 10'000;

std::size_t default_nlist(std::size_t n);

struct IvfBuildOptions {
    std::size_t nlist = 0;  // 0 selects round(sqrt(n))
    std::uint64_t seed = 42;
    std::size_t max_iters = kDefaultMaxIters;
    std::size_t block_size = kDefaultBlockSize;
    // Rotate the collection before clustering (ADS search needs it).
    std::optional<OrthogonalTransform> transform;
};

struct KMeansResult {
    RowMatrixXf centroids;                // nlist x d
    std::vector<std::uint32_t> labels;   // one per input vector
    std::size_t iterations = 0;
};

// Lloyd's algorithm: seeded random-sample init, L2 assignment, empty
// clusters refilled from the largest cluster. Stops after max_iters or when
// the largest centroid shift falls below 1e-4 relative to the data scale.
KMeansResult kmeans(const VectorCollection& collection, std::size_t nlist, std::uint64_t seed,
                    std::size_t max_iters = kDefaultMaxIters);

struct IvfIndex {
    std::size_t d = 0;
    std::size_t nlist = 0;
    std::uint64_t training_seed = 0;
    std::size_t block_size = kDefaultBlockSize;
    std::vector<PdxBlock> centroids;          // nlist centroids, PDX-stored
    std::vector<std::vector<PdxBlock>> buckets;  // blocks share their bucket's means
    std::optional<OrthogonalTransform> transform;

    std::size_t size() const;
    std::vector<float> centroid(std::size_t bucket) const;
    std::span<const float> bucket_means(std::size_t bucket) const;
};

IvfIndex ivf_build(const VectorCollection& collection, const IvfBuildOptions& options);

// The `nprobe` nearest buckets by centroid distance under `metric`.
std::vector<std::uint32_t> ivf_select_buckets(const IvfIndex& index, std::span<const float> query,
                                              std::size_t nprobe, Metric metric = Metric::L2);

// Rotates the query when the index carries a transform, picks buckets and
// runs the pruned search over them nearest-first.
TopK ivf_search(const IvfIndex& index, std::span<const float> query, const SearchParams& params,
                std::size_t nprobe, const SearchObservers& observers = {});

struct FlatPartitioning {
    std::size_t d = 0;
    std::size_t partition_size = kDefaultPartitionSize;
    std::vector<PdxBlock> partitions;  // all share the global means
    std::shared_ptr<const BlockMetadata> global_means;
    std::optional<OrthogonalTransform> transform;

    std::size_t size() const { return total_vectors(partitions); }
};

FlatPartitioning flat_build(const VectorCollection& collection, std::size_t partition_size = kDefaultPartitionSize,
                            std::optional<OrthogonalTransform> transform = std::nullopt);

TopK exact_search(const FlatPartitioning& partitioning, std::span<const float> query, const SearchParams& params,
                  const SearchObservers& observers = {});

}  // namespace pdx
