#include <gtest/gtest.h>

#include <cstring>

#include "oracle.hpp"
#include "pdx/kernels.hpp"

namespace pdx {
namespace {

PdxBlock two_vector_block() { return to_pdx(VectorCollection::from_rows({{1, 2}, {0, 0}}))[0]; }

TEST(VerticalAccumulate, L2Example) {
    const auto block = two_vector_block();
    const std::vector<float> q{1, 2};
    DistanceAccumulator acc(block);
    vertical_accumulate(block, q, {0, 2}, Metric::L2, acc);
    EXPECT_EQ(acc[0], 0.0f);
    EXPECT_EQ(acc[1], 5.0f);
}

TEST(VerticalAccumulate, IpExample) {
    const auto block = two_vector_block();
    const std::vector<float> q{1, 2};
    DistanceAccumulator acc(block);
    vertical_accumulate(block, q, {0, 2}, Metric::IP, acc);
    EXPECT_EQ(acc[0], 5.0f);
    EXPECT_EQ(acc[1], 0.0f);
}

TEST(VerticalAccumulate, L1Example) {
    const auto block = to_pdx(VectorCollection::from_rows({{0, 3}}))[0];
    const std::vector<float> q{1, 2};
    DistanceAccumulator acc(block);
    vertical_accumulate(block, q, {0, 2}, Metric::L1, acc);
    EXPECT_EQ(acc[0], 2.0f);
}

TEST(VerticalAccumulate, RangeOutOfBounds) {
    const auto block = two_vector_block();
    const std::vector<float> q{1, 2};
    DistanceAccumulator acc(block);
    EXPECT_THROW(vertical_accumulate(block, q, {0, 3}, Metric::L2, acc), std::invalid_argument);
    EXPECT_THROW(vertical_accumulate(block, q, {2, 1}, Metric::L2, acc), std::invalid_argument);
    const std::vector<float> short_q{1};
    EXPECT_THROW(vertical_accumulate(block, short_q, {0, 1}, Metric::L2, acc), std::invalid_argument);
}

TEST(VerticalAccumulateSelected, EmptyPositionsLeavesAccumulator) {
    const auto block = two_vector_block();
    const std::vector<float> q{1, 2};
    DistanceAccumulator acc(block);
    acc.values[0] = 3.0f;
    const auto before = acc.values;
    vertical_accumulate_selected(block, q, {0, 2}, Metric::L2, acc, {});
    EXPECT_EQ(acc.values, before);
}

TEST(VerticalAccumulateSelected, AllPositionsEqualsFull) {
    const auto c = oracle::random_collection(40, 19, 11);
    const auto block = to_pdx(c)[0];
    const auto q = oracle::random_vector(19, 12);
    std::vector<std::uint32_t> all(40);
    for (std::uint32_t i = 0; i < 40; ++i) all[i] = i;
    for (const Metric m : {Metric::L2, Metric::L1, Metric::IP}) {
        DistanceAccumulator full(block), sel(block);
        vertical_accumulate(block, q, {0, 19}, m, full);
        vertical_accumulate_selected(block, q, {0, 19}, m, sel, all);
        for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(full[i], sel[i]);
    }
}

TEST(VerticalAccumulateSelected, OnlySelectedSlotChanges) {
    const auto c = oracle::random_collection(3, 5, 21);
    const auto block = to_pdx(c)[0];
    const auto q = oracle::random_vector(5, 22);
    DistanceAccumulator acc(block);
    const std::uint32_t pos[] = {1};
    vertical_accumulate_selected(block, q, {0, 5}, Metric::L2, acc, pos);
    EXPECT_EQ(acc[0], 0.0f);
    EXPECT_EQ(acc[2], 0.0f);
    EXPECT_NEAR(acc[1], oracle::distance(oracle::rows(c)[1], q, Metric::L2), 1e-5);
}

TEST(VerticalAccumulateSelected, InvalidPositions) {
    const auto block = two_vector_block();
    const std::vector<float> q{1, 2};
    DistanceAccumulator acc(block);
    const std::uint32_t beyond[] = {2};
    const std::uint32_t unordered[] = {1, 0};
    EXPECT_THROW(vertical_accumulate_selected(block, q, {0, 2}, Metric::L2, acc, beyond), std::invalid_argument);
    EXPECT_THROW(vertical_accumulate_selected(block, q, {0, 2}, Metric::L2, acc, unordered),
                 std::invalid_argument);
}

TEST(HorizontalDistance, Examples) {
    const std::vector<float> a{3, 4}, zero{0, 0}, b{1, 2}, c{2, 1};
    EXPECT_EQ(horizontal_distance(a, a, Metric::L2), 0.0);
    EXPECT_EQ(horizontal_distance(a, zero, Metric::L2), 25.0);
    EXPECT_EQ(horizontal_distance(b, c, Metric::L1), 2.0);
    const std::vector<float> shorter{1};
    EXPECT_THROW(horizontal_distance(a, shorter, Metric::L2), std::invalid_argument);
}

TEST(Kernels, MatchHorizontalOracle) {
    std::uint64_t seed = 1000;
    for (const std::size_t d : {8, 16, 32, 64, 128, 512, 1536}) {
        for (const std::size_t m : {1, 17, 64}) {
            const auto c = oracle::random_collection(m, d, ++seed);
            const auto block = to_pdx(c)[0];
            const auto q = oracle::random_vector(d, ++seed);
            const auto rows = oracle::rows(c);
            for (const Metric metric : {Metric::L2, Metric::L1, Metric::IP}) {
                DistanceAccumulator acc(block);
                vertical_accumulate(block, q, {0, d}, metric, acc);
                for (std::size_t i = 0; i < m; ++i) {
                    const double expected = horizontal_distance(rows[i], q, metric);
                    // IP can cancel towards zero; measure relative to the sum of |terms|.
                    double scale = std::fabs(expected);
                    if (metric == Metric::IP) {
                        scale = 0.0;
                        for (std::size_t j = 0; j < d; ++j) scale += std::fabs(double{rows[i][j]} * q[j]);
                    }
                    EXPECT_LE(std::fabs(acc[i] - expected), 1e-4 * scale + 1e-6)
                        << "d=" << d << " m=" << m << " metric=" << to_string(metric);
                }
            }
        }
    }
}

TEST(Kernels, RangeAdditivityIsBitExact) {
    const auto c = oracle::random_collection(64, 77, 31);
    const auto block = to_pdx(c)[0];
    const auto q = oracle::random_vector(77, 32);
    for (const Metric metric : {Metric::L2, Metric::L1, Metric::IP}) {
        for (const std::size_t cut : {0, 1, 30, 76, 77}) {
            DistanceAccumulator whole(block), split(block);
            vertical_accumulate(block, q, {0, 77}, metric, whole);
            vertical_accumulate(block, q, {0, cut}, metric, split);
            vertical_accumulate(block, q, {cut, 77}, metric, split);
            EXPECT_EQ(std::memcmp(whole.values.data(), split.values.data(), 64 * sizeof(float)), 0);
        }
    }
}

TEST(Kernels, L2AndL1NonNegative) {
    const auto c = oracle::random_collection(50, 40, 41, -1e3f, 1e3f);
    for (const auto& block : to_pdx(c, 16)) {
        const auto q = oracle::random_vector(40, 42, -1e3f, 1e3f);
        for (const Metric metric : {Metric::L2, Metric::L1}) {
            DistanceAccumulator acc(block);
            vertical_accumulate(block, q, {0, 40}, metric, acc);
            for (const float v : acc.values) EXPECT_GE(v, 0.0f);
        }
    }
}

TEST(Kernels, OrderedVariantsFollowPermutation) {
    const auto c = oracle::random_collection(20, 6, 51);
    const auto block = to_pdx(c)[0];
    const auto q = oracle::random_vector(6, 52);
    const std::vector<std::uint32_t> order{4, 1, 5, 0, 3, 2};
    std::vector<float> pq(6);
    for (std::size_t s = 0; s < 6; ++s) pq[s] = q[order[s]];
    DistanceAccumulator acc(block);
    vertical_accumulate_ordered(block, pq, order, {0, 2}, Metric::L1, acc);
    const auto rows = oracle::rows(c);
    for (std::size_t i = 0; i < 20; ++i)
        EXPECT_FLOAT_EQ(acc[i], std::fabs(rows[i][4] - q[4]) + std::fabs(rows[i][1] - q[1]));
    const std::uint32_t pos[] = {3, 7};
    vertical_accumulate_ordered_selected(block, pq, order, {2, 6}, Metric::L1, acc, pos);
    EXPECT_NEAR(acc[3], oracle::distance(rows[3], q, Metric::L1), 1e-5);
    EXPECT_FLOAT_EQ(acc[4], std::fabs(rows[4][4] - q[4]) + std::fabs(rows[4][1] - q[1]));
}

TEST(Metric, Parse) {
    EXPECT_EQ(parse_metric("l2"), Metric::L2);
    EXPECT_EQ(parse_metric("ip"), Metric::IP);
    EXPECT_THROW(parse_metric("cosine"), std::invalid_argument);
}

}  // namespace
}  // namespace pdx
