#include "pdx/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include <json.hpp>

namespace pdx {

Distribution parse_distribution(std::string_view name) {
    if (name == "normal") return Distribution::Normal;
    if (name == "skewed") return Distribution::Skewed;
    if (name == "clustered") return Distribution::Clustered;
    throw std::invalid_argument("unknown distribution '" + std::string(name) +
                                "' (expected normal, skewed or clustered)");
}

std::string_view to_string(Distribution distribution) {
    switch (distribution) {
    case Distribution::Normal: return "normal";
    case Distribution::Skewed: return "skewed";
    case Distribution::Clustered: return "clustered";
    }
    return "?";
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    if (spec.n == 0 || spec.d == 0) throw std::invalid_argument("gen_synthetic: n and d must be >= 1");
    if (spec.distribution == Distribution::Clustered && spec.clusters == 0)
        throw std::invalid_argument("gen_synthetic: clustered needs at least one cluster");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);

    std::vector<float> data(spec.n * spec.d);
    std::vector<std::uint32_t> labels(spec.n, 0);
    switch (spec.distribution) {
    case Distribution::Normal:
        for (auto& x : data) x = normal(rng);
        break;
    case Distribution::Skewed: {
        // Each dimension gets its own log-scale, so dimensions differ in spread.
        std::uniform_real_distribution<float> scale(kSkewedScaleMin, kSkewedScaleMax);
        std::vector<float> sigma(spec.d);
        for (auto& s : sigma) s = scale(rng);
        for (std::size_t i = 0; i < spec.n; ++i)
            for (std::size_t j = 0; j < spec.d; ++j) data[i * spec.d + j] = std::exp(sigma[j] * normal(rng));
        break;
    }
    case Distribution::Clustered: {
        std::vector<float> centres(spec.clusters * spec.d);
        for (auto& c : centres) c = spec.cluster_spread * normal(rng);
        std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(spec.clusters - 1));
        for (std::size_t i = 0; i < spec.n; ++i) {
            labels[i] = pick(rng);
            const float* centre = centres.data() + labels[i] * spec.d;
            for (std::size_t j = 0; j < spec.d; ++j) data[i * spec.d + j] = centre[j] + normal(rng);
        }
        break;
    }
    }
    return {VectorCollection(spec.d, std::move(data)), std::move(labels)};
}

std::pair<VectorCollection, VectorCollection> split_queries(const VectorCollection& all, std::size_t count) {
    if (count > all.size()) throw std::invalid_argument("split_queries: more queries than vectors");
    const std::size_t base_n = all.size() - count;
    const auto mid = all.data().begin() + static_cast<std::ptrdiff_t>(base_n * all.dim());
    return {VectorCollection(all.dim(), std::vector<float>(all.data().begin(), mid)),
            VectorCollection(all.dim(), std::vector<float>(mid, all.data().end()))};
}

GroundTruth compute_ground_truth(const VectorCollection& collection, const VectorCollection& queries, std::size_t k,
                                 Metric metric) {
    if (k == 0) throw std::invalid_argument("compute_ground_truth: k must be >= 1");
    if (!queries.empty() && queries.dim() != collection.dim())
        throw std::invalid_argument("compute_ground_truth: queries have " + std::to_string(queries.dim()) +
                                    " dims, collection has " + std::to_string(collection.dim()));
    GroundTruth truth;
    truth.k = std::min(k, collection.size());
    truth.metric = metric;
    struct Scored {
        double key;
        VectorId id;
        bool operator<(const Scored& o) const { return key < o.key || (key == o.key && id < o.id); }
    };
    std::vector<Scored> scored(collection.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        for (std::size_t i = 0; i < collection.size(); ++i) {
            const double dist = horizontal_distance(collection.row(i), queries.row(q), metric);
            scored[i] = {metric == Metric::IP ? -dist : dist, collection.ids()[i]};
        }
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(truth.k), scored.end());
        std::vector<VectorId> ids(truth.k);
        std::vector<double> dists(truth.k);
        for (std::size_t r = 0; r < truth.k; ++r) {
            ids[r] = scored[r].id;
            dists[r] = metric == Metric::IP ? -scored[r].key : scored[r].key;
        }
        truth.ids.push_back(std::move(ids));
        truth.distances.push_back(std::move(dists));
    }
    return truth;
}

double recall_at_k(std::span<const VectorId> truth, std::span<const VectorId> result, std::size_t k) {
    if (k == 0) throw std::invalid_argument("recall_at_k: k must be >= 1");
    const std::unordered_set<VectorId> expected(truth.begin(), truth.begin() + std::min(k, truth.size()));
    std::unordered_set<VectorId> seen;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, result.size()); ++i)
        if (expected.contains(result[i]) && seen.insert(result[i]).second) ++hits;
    return static_cast<double>(hits) / static_cast<double>(k);
}

double nearest_rank_percentile(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

namespace {

// 0.2f prints as 0.2 rather than 0.20000000298023224.
double as_decimal(float x) { return std::stod(std::to_string(x)); }

}  // namespace

std::string RunReport::to_json_line() const {
    nlohmann::ordered_json j;
    j["label"] = config.label;
    j["index"] = config.index;
    j["metric"] = std::string(to_string(config.metric));
    j["pruner"] = std::string(to_string(config.pruner));
    j["criteria"] = std::string(to_string(config.criteria));
    j["k"] = config.k;
    j["nprobe"] = config.nprobe;
    j["selection_fraction"] = as_decimal(config.selection_fraction);
    j["epsilon0"] = as_decimal(config.epsilon0);
    j["n"] = config.n;
    j["d"] = config.d;
    j["queries"] = queries;
    j["recall"] = recall;
    j["qps"] = qps;
    j["total_seconds"] = total_seconds;
    j["pruning_power"] = {{"mean", pruning_power_mean},
                          {"p25", pruning_power_p25},
                          {"p50", pruning_power_p50},
                          {"best", pruning_power_best},
                          {"worst", pruning_power_worst}};
    j["phase_seconds"] = {{"query_preprocessing", phases.preprocessing.count()},
                          {"find_nearest_buckets", phases.find_buckets.count()},
                          {"bounds_evaluation", phases.bounds.count()},
                          {"distance_calculation", phases.distances.count()}};
    return j.dump();
}

RunReport run_experiment(const QueryFn& run, const VectorCollection& queries, const GroundTruth& truth,
                         const RunConfig& config) {
    if (truth.ids.size() != queries.size())
        throw std::invalid_argument("run_experiment: ground truth has " + std::to_string(truth.ids.size()) +
                                    " queries, query set has " + std::to_string(queries.size()));
    RunReport report;
    report.config = config;
    report.queries = queries.size();
    if (queries.empty()) return report;

    for (std::size_t q = 0; q < queries.size(); ++q) {
        SearchTrace trace;
        const TopK result = run(queries.row(q), {.trace = &trace});
        const auto ids = result.ids();
        report.per_query_recall.push_back(recall_at_k(truth.ids[q], ids, config.k));
        report.per_query_pruning_power.push_back(trace.pruning_power());
        if (config.keep_traces) report.traces.push_back(std::move(trace));
    }

    PhaseTimes phases;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t q = 0; q < queries.size(); ++q) run(queries.row(q), {.times = &phases});
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    const auto count = static_cast<double>(queries.size());
    report.total_seconds = elapsed.count();
    report.qps = report.total_seconds > 0 ? count / report.total_seconds : 0.0;
    report.phases = phases;
    double recall_sum = 0.0;
    double power_sum = 0.0;
    for (const double r : report.per_query_recall) recall_sum += r;
    for (const double p : report.per_query_pruning_power) power_sum += p;
    report.recall = recall_sum / count;
    report.pruning_power_mean = power_sum / count;
    report.pruning_power_p25 = nearest_rank_percentile(report.per_query_pruning_power, 25);
    report.pruning_power_p50 = nearest_rank_percentile(report.per_query_pruning_power, 50);
    report.pruning_power_best =
        *std::max_element(report.per_query_pruning_power.begin(), report.per_query_pruning_power.end());
    report.pruning_power_worst =
        *std::min_element(report.per_query_pruning_power.begin(), report.per_query_pruning_power.end());
    return report;
}

}  // namespace pdx
