#include "pdx/index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace pdx {

std::size_t default_nlist(std::size_t n) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n)))));
}

namespace {

constexpr double kConvergenceShift = 1e-4;
constexpr Eigen::Index kAssignChunk = 4096;

// Nearest centroid per row, via |x|^2 - 2 x.c + |c|^2 in chunks.
void assign(const VectorCollection& data, const RowMatrixXf& centroids, std::vector<std::uint32_t>& labels,
            std::vector<float>& best) {
    const auto points = data.matrix();
    const Eigen::VectorXf centroid_norms = centroids.rowwise().squaredNorm();
    const Eigen::Index n = points.rows();
    labels.resize(static_cast<std::size_t>(n));
    best.resize(static_cast<std::size_t>(n));
    Eigen::MatrixXf scores;
    for (Eigen::Index start = 0; start < n; start += kAssignChunk) {
        const Eigen::Index rows = std::min(kAssignChunk, n - start);
        scores.noalias() = points.middleRows(start, rows) * centroids.transpose();
        for (Eigen::Index i = 0; i < rows; ++i) {
            Eigen::Index arg = 0;
            float best_score = std::numeric_limits<float>::infinity();
            for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
                const float s = centroid_norms(c) - 2.0f * scores(i, c);
                if (s < best_score) {
                    best_score = s;
                    arg = c;
                }
            }
            labels[static_cast<std::size_t>(start + i)] = static_cast<std::uint32_t>(arg);
            best[static_cast<std::size_t>(start + i)] = best_score + points.row(start + i).squaredNorm();
        }
    }
}

void repair_empty(const VectorCollection& data, const RowMatrixXf& centroids, std::vector<std::uint32_t>& labels,
                  std::size_t nlist) {
    std::vector<std::size_t> counts(nlist, 0);
    for (const auto l : labels) ++counts[l];
    for (std::size_t empty = 0; empty < nlist; ++empty) {
        if (counts[empty] != 0) continue;
        const auto largest =
            static_cast<std::uint32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        if (counts[largest] < 2) break;
        std::size_t far = 0;
        float far_dist = -1.0f;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] != largest) continue;
            const float dist = (data.matrix().row(static_cast<Eigen::Index>(i)) - centroids.row(largest)).squaredNorm();
            if (dist > far_dist) {
                far_dist = dist;
                far = i;
            }
        }
        labels[far] = static_cast<std::uint32_t>(empty);
        --counts[largest];
        ++counts[empty];
    }
}

RowMatrixXf centroid_means(const VectorCollection& data, const std::vector<std::uint32_t>& labels,
                           const RowMatrixXf& previous) {
    const Eigen::Index nlist = previous.rows();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(nlist, previous.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(nlist);
    const auto points = data.matrix();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        sums.row(labels[i]) += points.row(static_cast<Eigen::Index>(i)).cast<double>();
        counts(labels[i]) += 1.0;
    }
    RowMatrixXf next = previous;
    for (Eigen::Index c = 0; c < nlist; ++c)
        if (counts(c) > 0) next.row(c) = (sums.row(c) / counts(c)).cast<float>();
    return next;
}

}  // namespace

KMeansResult kmeans(const VectorCollection& collection, std::size_t nlist, std::uint64_t seed,
                    std::size_t max_iters) {
    const std::size_t n = collection.size();
    if (nlist == 0) throw std::invalid_argument("kmeans: nlist must be >= 1");
    if (nlist > n)
        throw std::invalid_argument("kmeans: nlist=" + std::to_string(nlist) + " exceeds n=" + std::to_string(n));
    const auto points = collection.matrix();

    std::vector<std::size_t> pick(n);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < nlist; ++i) {
        std::uniform_int_distribution<std::size_t> dist(i, n - 1);
        std::swap(pick[i], pick[dist(rng)]);
    }
    KMeansResult result;
    result.centroids.resize(static_cast<Eigen::Index>(nlist), points.cols());
    for (std::size_t c = 0; c < nlist; ++c)
        result.centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick[c]));

    const Eigen::RowVectorXd mean = points.cast<double>().colwise().mean();
    const double spread = std::max((points.cast<double>().rowwise() - mean).rowwise().squaredNorm().mean(),
                                   std::numeric_limits<double>::min());

    std::vector<float> best;
    for (std::size_t iter = 0; iter < std::max<std::size_t>(1, max_iters); ++iter) {
        assign(collection, result.centroids, result.labels, best);
        repair_empty(collection, result.centroids, result.labels, nlist);
        RowMatrixXf next = centroid_means(collection, result.labels, result.centroids);
        const double shift = (next - result.centroids).cast<double>().rowwise().squaredNorm().mean();
        result.centroids = std::move(next);
        result.iterations = iter + 1;
        if (std::sqrt(shift / spread) < kConvergenceShift) break;
    }
    return result;
}

std::size_t IvfIndex::size() const {
    std::size_t n = 0;
    for (const auto& chain : buckets) n += total_vectors(chain);
    return n;
}

std::vector<float> IvfIndex::centroid(std::size_t bucket) const {
    std::vector<float> out(d);
    const PdxBlock& block = centroids.at(bucket / kDefaultBlockSize);
    for (std::size_t j = 0; j < d; ++j) out[j] = block.at(j, bucket % kDefaultBlockSize);
    return out;
}

std::span<const float> IvfIndex::bucket_means(std::size_t bucket) const {
    const auto& chain = buckets.at(bucket);
    return chain.empty() ? std::span<const float>() : chain.front().means();
}

IvfIndex ivf_build(const VectorCollection& collection, const IvfBuildOptions& options) {
    if (collection.empty()) throw std::invalid_argument("ivf_build: empty collection");
    const std::size_t n = collection.size();
    const std::size_t nlist = options.nlist == 0 ? default_nlist(n) : options.nlist;
    if (nlist > n)
        throw std::invalid_argument("ivf_build: nlist=" + std::to_string(nlist) + " exceeds n=" + std::to_string(n));

    IvfIndex index;
    index.d = collection.dim();
    index.nlist = nlist;
    index.training_seed = options.seed;
    index.block_size = options.block_size;
    index.transform = options.transform;

    std::optional<VectorCollection> rotated;
    if (options.transform) rotated = apply_transform(*options.transform, collection);
    const VectorCollection& data = rotated ? *rotated : collection;

    const KMeansResult km = kmeans(data, nlist, options.seed, options.max_iters);

    VectorCollection centroids(index.d);
    for (std::size_t c = 0; c < nlist; ++c) {
        const auto row = km.centroids.row(static_cast<Eigen::Index>(c));
        centroids.push_back(std::span<const float>(row.data(), index.d), c);
    }
    index.centroids = to_pdx(centroids, kDefaultBlockSize);

    std::vector<std::vector<std::size_t>> members(nlist);
    for (std::size_t i = 0; i < n; ++i) members[km.labels[i]].push_back(i);
    index.buckets.resize(nlist);
    for (std::size_t c = 0; c < nlist; ++c) {
        if (members[c].empty()) continue;
        VectorCollection bucket(index.d);
        for (const std::size_t i : members[c]) bucket.push_back(data.row(i), data.ids()[i]);
        index.buckets[c] = to_pdx(bucket, options.block_size);
        share_metadata(index.buckets[c], std::make_shared<const BlockMetadata>(compute_means(bucket)));
    }
    return index;
}

std::vector<std::uint32_t> ivf_select_buckets(const IvfIndex& index, std::span<const float> query,
                                              std::size_t nprobe, Metric metric) {
    if (nprobe == 0 || nprobe > index.nlist)
        throw std::invalid_argument("ivf_select_buckets: nprobe=" + std::to_string(nprobe) + " outside [1, " +
                                    std::to_string(index.nlist) + "]");
    if (query.size() != index.d)
        throw std::invalid_argument("ivf_select_buckets: query has " + std::to_string(query.size()) +
                                    " dims, index has " + std::to_string(index.d));
    std::vector<Neighbor> ranked;
    ranked.reserve(index.nlist);
    DistanceAccumulator acc;
    for (const auto& block : index.centroids) {
        acc.reset(block.m_padded);
        vertical_accumulate(block, query, {0, block.d}, metric, acc);
        for (std::size_t i = 0; i < block.m; ++i)
            ranked.push_back({metric == Metric::IP ? -acc[i] : acc[i], block.ids[i]});
    }
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(nprobe), ranked.end());
    std::vector<std::uint32_t> out(nprobe);
    for (std::size_t i = 0; i < nprobe; ++i) out[i] = static_cast<std::uint32_t>(ranked[i].id);
    return out;
}

TopK ivf_search(const IvfIndex& index, std::span<const float> query, const SearchParams& params,
                std::size_t nprobe, const SearchObservers& observers) {
    using Clock = std::chrono::steady_clock;
    auto t0 = Clock::now();
    std::vector<float> rotated;
    if (index.transform) {
        rotated = apply_transform(*index.transform, query);
        query = rotated;
    }
    auto t1 = Clock::now();
    const auto selected = ivf_select_buckets(index, query, nprobe, params.metric);
    auto t2 = Clock::now();
    if (observers.times) {
        observers.times->preprocessing += t1 - t0;
        observers.times->find_buckets += t2 - t1;
    }
    std::vector<std::span<const PdxBlock>> chains;
    chains.reserve(selected.size());
    for (const auto b : selected) chains.emplace_back(index.buckets[b]);
    return search_chains(chains, query, params, observers);
}

FlatPartitioning flat_build(const VectorCollection& collection, std::size_t partition_size,
                            std::optional<OrthogonalTransform> transform) {
    if (partition_size == 0) throw std::invalid_argument("flat_build: partition_size must be >= 1");
    FlatPartitioning flat;
    flat.d = collection.dim();
    flat.partition_size = partition_size;
    flat.transform = std::move(transform);
    std::optional<VectorCollection> rotated;
    if (flat.transform) rotated = apply_transform(*flat.transform, collection);
    const VectorCollection& data = rotated ? *rotated : collection;
    flat.partitions = to_pdx(data, partition_size, false);
    if (!data.empty()) {
        flat.global_means = std::make_shared<const BlockMetadata>(compute_means(data));
        share_metadata(flat.partitions, flat.global_means);
    }
    return flat;
}

TopK exact_search(const FlatPartitioning& partitioning, std::span<const float> query, const SearchParams& params,
                  const SearchObservers& observers) {
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    std::vector<float> rotated;
    if (partitioning.transform) {
        rotated = apply_transform(*partitioning.transform, query);
        query = rotated;
    }
    if (observers.times) observers.times->preprocessing += Clock::now() - t0;
    return search(partitioning.partitions, query, params, observers);
}

}  // namespace pdx
