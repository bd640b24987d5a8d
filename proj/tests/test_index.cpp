#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "oracle.hpp"
#include "pdx/bench.hpp"
#include "pdx/index.hpp"

namespace pdx {
namespace {

std::multiset<VectorId> all_ids(const IvfIndex& index) {
    std::multiset<VectorId> ids;
    for (const auto& chain : index.buckets)
        for (const auto& b : chain) ids.insert(b.ids.begin(), b.ids.end());
    return ids;
}

TEST(IvfBuild, SquareCornersOnePointPerBucket) {
    const auto corners = VectorCollection::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const auto index = ivf_build(corners, {.nlist = 4, .seed = 3});
    ASSERT_EQ(index.nlist, 4u);
    std::set<std::vector<float>> centroids;
    for (std::size_t c = 0; c < 4; ++c) {
        ASSERT_EQ(total_vectors(index.buckets[c]), 1u);
        centroids.insert(index.centroid(c));
    }
    EXPECT_EQ(centroids, (std::set<std::vector<float>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
}

TEST(IvfBuild, SingleBucketCentroidIsGlobalMean) {
    const auto data = oracle::random_collection(300, 6, 4);
    const auto index = ivf_build(data, {.nlist = 1});
    EXPECT_EQ(total_vectors(index.buckets[0]), 300u);
    const auto mean = compute_means(data).means;
    const auto centroid = index.centroid(0);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(centroid[j], mean[j], 1e-5);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(index.bucket_means(0)[j], mean[j], 1e-5);
}

TEST(IvfBuild, RecoversWellSeparatedClusters) {
    const auto gen = gen_synthetic({2000, 32, Distribution::Clustered, 2, 4.0f, 5});
    const auto index = ivf_build(gen.vectors, {.nlist = 2, .seed = 6});
    for (std::size_t c = 0; c < 2; ++c) {
        std::set<std::uint32_t> labels;
        for (const auto& b : index.buckets[c])
            for (const auto id : b.ids) labels.insert(gen.labels[id]);
        EXPECT_EQ(labels.size(), 1u) << "bucket " << c << " mixes clusters";
    }
}

TEST(IvfBuild, CoverageAndDeterminism) {
    const auto data = gen_synthetic({1500, 16, Distribution::Clustered, 8, 4.0f, 7}).vectors;
    const auto a = ivf_build(data, {.seed = 8});
    const auto b = ivf_build(data, {.seed = 8});
    EXPECT_EQ(a.nlist, default_nlist(1500));
    std::multiset<VectorId> expected;
    for (VectorId i = 0; i < 1500; ++i) expected.insert(i);
    EXPECT_EQ(all_ids(a), expected);
    for (std::size_t c = 0; c < a.nlist; ++c) {
        EXPECT_EQ(a.centroid(c), b.centroid(c));
        ASSERT_EQ(a.buckets[c].size(), b.buckets[c].size());
        for (std::size_t i = 0; i < a.buckets[c].size(); ++i) EXPECT_EQ(a.buckets[c][i].ids, b.buckets[c][i].ids);
    }
}

TEST(IvfBuild, Errors) {
    const auto data = oracle::random_collection(5, 3, 9);
    EXPECT_THROW(ivf_build(data, {.nlist = 6}), std::invalid_argument);
    EXPECT_THROW(ivf_build(VectorCollection(3), {}), std::invalid_argument);
}

TEST(Kmeans, EmptyClustersRepaired) {
    // Duplicated points invite empty clusters; every cluster must still own a point.
    std::vector<std::vector<float>> rows;
    for (int i = 0; i < 20; ++i) rows.push_back({0.0f, 0.0f});
    for (int i = 0; i < 20; ++i) rows.push_back({10.0f, static_cast<float>(i)});
    const auto result = kmeans(VectorCollection::from_rows(rows), 6, 1);
    std::vector<int> counts(6, 0);
    for (const auto l : result.labels) ++counts[l];
    for (const int c : counts) EXPECT_GT(c, 0);
}

class IvfSearchTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        const auto all = gen_synthetic({6100, 32, Distribution::Clustered, 20, 2.0f, 10}).vectors;
        auto [base, queries] = split_queries(all, 100);
        data_ = new VectorCollection(std::move(base));
        queries_ = new VectorCollection(std::move(queries));
        index_ = new IvfIndex(ivf_build(*data_, {.nlist = 32, .seed = 11}));
    }
    static void TearDownTestSuite() {
        delete data_;
        delete queries_;
        delete index_;
    }
    static VectorCollection* data_;
    static VectorCollection* queries_;
    static IvfIndex* index_;
};

VectorCollection* IvfSearchTest::data_ = nullptr;
VectorCollection* IvfSearchTest::queries_ = nullptr;
IvfIndex* IvfSearchTest::index_ = nullptr;

TEST_F(IvfSearchTest, SelectBucketsMatchesOracleRanking) {
    for (std::size_t qi = 0; qi < 10; ++qi) {
        const std::vector<float> q(queries_->row(qi).begin(), queries_->row(qi).end());
        std::vector<std::pair<double, std::uint32_t>> ranked;
        for (std::uint32_t c = 0; c < index_->nlist; ++c)
            ranked.emplace_back(oracle::distance(index_->centroid(c), q, Metric::L2), c);
        std::sort(ranked.begin(), ranked.end());
        const auto selected = ivf_select_buckets(*index_, q, 3);
        ASSERT_EQ(selected.size(), 3u);
        for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(selected[r], ranked[r].second);
        EXPECT_EQ(ivf_select_buckets(*index_, q, index_->nlist).size(), index_->nlist);
    }
}

TEST_F(IvfSearchTest, QueryAtCentroidSelectsItsBucket) {
    for (std::uint32_t c = 0; c < index_->nlist; c += 5)
        EXPECT_EQ(ivf_select_buckets(*index_, index_->centroid(c), 1).front(), c);
}

TEST_F(IvfSearchTest, NprobeOutOfRange) {
    const auto q = index_->centroid(0);
    EXPECT_THROW(ivf_select_buckets(*index_, q, 0), std::invalid_argument);
    EXPECT_THROW(ivf_select_buckets(*index_, q, index_->nlist + 1), std::invalid_argument);
}

TEST_F(IvfSearchTest, FullProbeIsExact) {
    for (std::size_t qi = 0; qi < 20; ++qi) {
        const std::vector<float> q(queries_->row(qi).begin(), queries_->row(qi).end());
        const auto expected = oracle::as_set(oracle::top_k(*data_, q, 10, Metric::L2));
        for (const auto pruner : {PrunerKind::None, PrunerKind::Bond}) {
            SearchParams p;
            p.pruner = pruner;
            EXPECT_EQ(oracle::as_set(ivf_search(*index_, q, p, index_->nlist).ids()), expected);
        }
    }
}

TEST_F(IvfSearchTest, SingleProbeIsExactWithinNearestBucket) {
    for (std::size_t qi = 0; qi < 20; ++qi) {
        const std::vector<float> q(queries_->row(qi).begin(), queries_->row(qi).end());
        const auto bucket = ivf_select_buckets(*index_, q, 1).front();
        const auto members = from_pdx(index_->buckets[bucket]);
        SearchParams p;
        p.pruner = PrunerKind::Bond;
        EXPECT_EQ(oracle::as_set(ivf_search(*index_, q, p, 1).ids()),
                  oracle::as_set(oracle::top_k(members, q, 10, Metric::L2)));
    }
}

TEST_F(IvfSearchTest, RecallGrowsWithNprobe) {
    const auto truth = compute_ground_truth(*data_, *queries_, 10, Metric::L2);
    double previous = -1.0;
    for (std::size_t nprobe = 1;; nprobe = std::min(nprobe * 2, index_->nlist)) {
        double sum = 0.0;
        for (std::size_t qi = 0; qi < queries_->size(); ++qi) {
            SearchParams p;
            p.pruner = PrunerKind::Bond;
            sum += recall_at_k(truth.ids[qi], ivf_search(*index_, queries_->row(qi), p, nprobe).ids(), 10);
        }
        const double recall = sum / static_cast<double>(queries_->size());
        EXPECT_GE(recall, previous - 0.01) << "nprobe=" << nprobe;
        previous = recall;
        if (nprobe == index_->nlist) break;
    }
    EXPECT_DOUBLE_EQ(previous, 1.0);
}

TEST(FlatPartitioning, OnePartitionEqualsSingleBlockSearch) {
    const auto data = oracle::random_collection(400, 16, 12);
    const auto flat = flat_build(data, 10'000);
    ASSERT_EQ(flat.partitions.size(), 1u);
    EXPECT_EQ(flat.partitions[0].m, 400u);
    const auto q = oracle::random_vector(16, 13);
    SearchParams p;
    p.pruner = PrunerKind::Bond;
    EXPECT_EQ(exact_search(flat, q, p).ids(), oracle::top_k(data, q, 10, Metric::L2));
}

TEST(FlatPartitioning, PartitionsCoverInOrder) {
    const auto data = oracle::random_collection(2500, 8, 14);
    const auto flat = flat_build(data, 1000);
    ASSERT_EQ(flat.partitions.size(), 3u);
    EXPECT_EQ(flat.partitions[0].m, 1000u);
    EXPECT_EQ(flat.partitions[2].m, 500u);
    EXPECT_EQ(from_pdx(flat.partitions), data);
    for (const auto& part : flat.partitions) EXPECT_EQ(part.metadata, flat.global_means);
}

TEST(FlatPartitioning, BondAndLinearAgree) {
    const auto data = gen_synthetic({5000, 64, Distribution::Skewed, 1, 4.0f, 15}).vectors;
    const auto flat = flat_build(data, 1000);
    for (int qi = 0; qi < 5; ++qi) {
        const auto q = gen_synthetic({1, 64, Distribution::Skewed, 1, 4.0f, 100u + qi}).vectors.data();
        SearchParams linear;
        SearchParams bond;
        bond.pruner = PrunerKind::Bond;
        EXPECT_EQ(oracle::as_set(exact_search(flat, q, linear).ids()),
                  oracle::as_set(exact_search(flat, q, bond).ids()));
    }
}

TEST(FlatPartitioning, AdsOnRotatedPartitions) {
    const auto data = gen_synthetic({4000, 64, Distribution::Clustered, 10, 2.0f, 16}).vectors;
    const auto flat = flat_build(data, 1000, generate_orthogonal(64, 17));
    ASSERT_TRUE(flat.transform.has_value());
    const auto q = data.row(123);
    SearchParams p;
    p.pruner = PrunerKind::Ads;
    const auto result = exact_search(flat, q, p).sorted();
    EXPECT_EQ(result.front().id, 123u);
    EXPECT_NEAR(result.front().distance, 0.0f, 1e-3);
}

}  // namespace
}  // namespace pdx
