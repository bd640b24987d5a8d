#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdx/kernels.hpp"
#include "pdx/layout.hpp"
#include "pdx/pdxearch.hpp"

namespace pdx {

enum class Distribution { Normal, Skewed, Clustered };

Distribution parse_distribution(std::string_view name);
std::string_view to_string(Distribution distribution);

struct SyntheticSpec {
    std::size_t n = 0;
    std::size_t d = 0;
    Distribution distribution = Distribution::Normal;
    std::size_t clusters = 1;     // Clustered only
    float cluster_spread = 4.0f;  // std-dev of cluster centres; members have unit variance
    std::uint64_t seed = 0;
};

struct SyntheticData {
    VectorCollection vectors;
    std::vector<std::uint32_t> labels;  // cluster of each vector (all 0 unless Clustered)
};

inline constexpr float kSkewedScaleMin = 0.25f;
inline constexpr float kSkewedScaleMax = 1.5f;

// normal: iid N(0,1). skewed: lognormal per dimension, exp(sigma_j * N(0,1))
// with sigma_j drawn once per dataset from [kSkewedScaleMin, kSkewedScaleMax].
// clustered: Gaussian blobs around N(0, spread^2) centres.
SyntheticData gen_synthetic(const SyntheticSpec& spec);

// Splits the last `count` vectors off as a query set.
std::pair<VectorCollection, VectorCollection> split_queries(const VectorCollection& all, std::size_t count);

struct GroundTruth {
    std::size_t k = 0;
    Metric metric = Metric::L2;
    std::vector<std::vector<VectorId>> ids;
    std::vector<std::vector<double>> distances;  // natural metric values (IP: similarity)
};

// Exhaustive 64-bit ranking; ties go to the lower id.
GroundTruth compute_ground_truth(const VectorCollection& collection, const VectorCollection& queries, std::size_t k,
                                 Metric metric);

double recall_at_k(std::span<const VectorId> truth, std::span<const VectorId> result, std::size_t k);

// Nearest-rank percentile (p in [0,100]) of an unsorted sample.
double nearest_rank_percentile(std::vector<double> values, double p);

struct RunConfig {
    std::string label;
    std::string index = "flat";
    Metric metric = Metric::L2;
    PrunerKind pruner = PrunerKind::None;
    DimensionOrder criteria = DimensionOrder::DistanceToMeans;
    std::size_t k = 10;
    std::size_t nprobe = 0;
    float selection_fraction = kDefaultSelectionFraction;
    float epsilon0 = kDefaultEpsilon0;
    std::size_t n = 0;
    std::size_t d = 0;
    bool keep_traces = false;
};

struct RunReport {
    RunConfig config;
    std::size_t queries = 0;
    double recall = 0.0;
    double qps = 0.0;
    double total_seconds = 0.0;
    double pruning_power_mean = 0.0;
    double pruning_power_p25 = 0.0;
    double pruning_power_p50 = 0.0;
    double pruning_power_best = 0.0;
    double pruning_power_worst = 0.0;
    PhaseTimes phases;
    std::vector<double> per_query_recall;
    std::vector<double> per_query_pruning_power;
    std::vector<SearchTrace> traces;  // only with keep_traces

    // One JSON object per line (schema in README).
    std::string to_json_line() const;
};

using QueryFn = std::function<TopK(std::span<const float> query, const SearchObservers& observers)>;

/// Runs every query once untimed (recall, pruning traces), then once more
/// timed, single-threaded, with per-phase accounting.
RunReport run_experiment(const QueryFn& run, const VectorCollection& queries, const GroundTruth& truth,
                         const RunConfig& config);

}  // namespace pdx
