#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "oracle.hpp"
#include "pdx/bench.hpp"
#include "pdx/index.hpp"

namespace pdx {
namespace {

TEST(GenSynthetic, DeterministicPerSeed) {
    for (const auto dist : {Distribution::Normal, Distribution::Skewed, Distribution::Clustered}) {
        const SyntheticSpec spec{200, 16, dist, 3, 4.0f, 77};
        EXPECT_EQ(gen_synthetic(spec).vectors, gen_synthetic(spec).vectors);
        auto other = spec;
        other.seed = 78;
        EXPECT_FALSE(gen_synthetic(spec).vectors == gen_synthetic(other).vectors);
    }
}

TEST(GenSynthetic, NormalMoments) {
    const auto c = gen_synthetic({1000, 64, Distribution::Normal, 1, 4.0f, 1}).vectors;
    const auto rows = oracle::rows(c);
    for (std::size_t j = 0; j < 64; ++j) {
        double s = 0, ss = 0;
        for (const auto& r : rows) {
            s += r[j];
            ss += double{r[j]} * r[j];
        }
        const double mean = s / 1000.0;
        const double sd = std::sqrt(ss / 1000.0 - mean * mean);
        EXPECT_NEAR(mean, 0.0, 0.1) << "dim " << j;
        EXPECT_NEAR(sd, 1.0, 0.1) << "dim " << j;
    }
}

TEST(GenSynthetic, SkewedIsPositive) {
    const auto c = gen_synthetic({500, 8, Distribution::Skewed, 1, 4.0f, 2}).vectors;
    for (const float x : c.data()) EXPECT_GT(x, 0.0f);
}

TEST(GenSynthetic, ClusteredLabels) {
    const auto g = gen_synthetic({300, 4, Distribution::Clustered, 5, 4.0f, 3});
    ASSERT_EQ(g.labels.size(), 300u);
    for (const auto l : g.labels) EXPECT_LT(l, 5u);
    EXPECT_THROW(gen_synthetic({0, 4, Distribution::Normal, 1, 4.0f, 3}), std::invalid_argument);
}

TEST(SplitQueries, TakesTail) {
    const auto all = oracle::random_collection(10, 3, 4);
    const auto [base, queries] = split_queries(all, 3);
    EXPECT_EQ(base.size(), 7u);
    EXPECT_EQ(queries.size(), 3u);
    EXPECT_TRUE(std::equal(queries.row(0).begin(), queries.row(0).end(), all.row(7).begin()));
}

TEST(GroundTruth, QueryInCollectionComesFirst) {
    const auto c = oracle::random_collection(100, 8, 5);
    VectorCollection q(8);
    q.push_back(c.row(42), 0);
    const auto gt = compute_ground_truth(c, q, 5, Metric::L2);
    EXPECT_EQ(gt.ids[0][0], 42u);
    EXPECT_EQ(gt.distances[0][0], 0.0);
}

TEST(GroundTruth, KEqualsNGivesAllSorted) {
    const auto c = oracle::random_collection(30, 4, 6);
    const auto q = VectorCollection::from_rows({oracle::random_vector(4, 7)});
    const auto gt = compute_ground_truth(c, q, 30, Metric::L1);
    ASSERT_EQ(gt.ids[0].size(), 30u);
    EXPECT_TRUE(std::is_sorted(gt.distances[0].begin(), gt.distances[0].end()));
    EXPECT_EQ(gt.ids[0], oracle::top_k(c, q.data(), 30, Metric::L1));
}

TEST(GroundTruth, MatchesUnprunedSearch) {
    const auto c = gen_synthetic({3000, 32, Distribution::Normal, 1, 4.0f, 8}).vectors;
    const auto queries = gen_synthetic({10, 32, Distribution::Normal, 1, 4.0f, 9}).vectors;
    const auto flat = flat_build(c);
    for (const Metric metric : {Metric::L2, Metric::L1, Metric::IP}) {
        const auto gt = compute_ground_truth(c, queries, 10, metric);
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            SearchParams p;
            p.metric = metric;
            EXPECT_EQ(oracle::as_set(gt.ids[qi]), oracle::as_set(exact_search(flat, queries.row(qi), p).ids()));
        }
        if (metric == Metric::IP) {
            EXPECT_TRUE(std::is_sorted(gt.distances[0].rbegin(), gt.distances[0].rend()));
        }
    }
}

TEST(GroundTruth, DimensionMismatch) {
    const auto c = oracle::random_collection(5, 4, 1);
    const auto q = oracle::random_collection(1, 3, 1);
    EXPECT_THROW(compute_ground_truth(c, q, 1, Metric::L2), std::invalid_argument);
}

TEST(RecallAtK, Examples) {
    const std::vector<VectorId> truth{1, 2, 3};
    EXPECT_DOUBLE_EQ(recall_at_k(truth, truth, 3), 1.0);
    EXPECT_DOUBLE_EQ(recall_at_k(truth, std::vector<VectorId>{1, 2, 9}, 3), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(recall_at_k(truth, std::vector<VectorId>{7, 8, 9}, 3), 0.0);
    for (std::size_t k = 1; k <= 3; ++k)
        EXPECT_DOUBLE_EQ(recall_at_k(std::span(truth).first(k), std::span(truth).first(k), k), 1.0);
}

TEST(Percentile, NearestRank) {
    const std::vector<double> v{15, 20, 35, 40, 50};
    EXPECT_DOUBLE_EQ(nearest_rank_percentile(v, 30), 20);
    EXPECT_DOUBLE_EQ(nearest_rank_percentile(v, 40), 20);
    EXPECT_DOUBLE_EQ(nearest_rank_percentile(v, 50), 35);
    EXPECT_DOUBLE_EQ(nearest_rank_percentile(v, 100), 50);
    EXPECT_DOUBLE_EQ(nearest_rank_percentile(v, 0), 15);
}

TEST(RunExperiment, ReportAccounting) {
    const auto all = gen_synthetic({4050, 64, Distribution::Skewed, 1, 4.0f, 10}).vectors;
    const auto [base, queries] = split_queries(all, 50);
    const auto flat = flat_build(base, 1000);
    const auto truth = compute_ground_truth(base, queries, 10, Metric::L2);
    SearchParams p;
    p.pruner = PrunerKind::Bond;
    RunConfig config;
    config.label = "bond";
    config.pruner = PrunerKind::Bond;
    config.keep_traces = true;
    const auto report = run_experiment(
        [&](std::span<const float> q, const SearchObservers& obs) { return exact_search(flat, q, p, obs); },
        queries, truth, config);
    EXPECT_EQ(report.queries, 50u);
    EXPECT_DOUBLE_EQ(report.recall, 1.0);
    EXPECT_GT(report.qps, 0.0);
    EXPECT_LE(report.phases.total().count(), report.total_seconds);
    EXPECT_LE(report.pruning_power_worst, report.pruning_power_p25);
    EXPECT_LE(report.pruning_power_p25, report.pruning_power_p50);
    EXPECT_LE(report.pruning_power_p50, report.pruning_power_best);
    EXPECT_EQ(report.traces.size(), 50u);

    const auto j = nlohmann::json::parse(report.to_json_line());
    EXPECT_EQ(j["label"], "bond");
    EXPECT_EQ(j["recall"], 1.0);
    EXPECT_TRUE(j.contains("phase_seconds"));
    EXPECT_EQ(j["pruning_power"]["p50"], report.pruning_power_p50);
    EXPECT_EQ(report.to_json_line().find('\n'), std::string::npos);
}

}  // namespace
}  // namespace pdx
