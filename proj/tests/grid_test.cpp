#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "convgrid/grid.hpp"
#include "convgrid/rng.hpp"

using namespace convgrid;

namespace {

Grid random_grid(const Shape& shape, SplitMix64& rng) {
    std::vector<double> values(shape.value_count());
    for (double& v : values) v = rng.uniform(-2.0, 2.0);
    return Grid(shape, std::move(values));
}

Shape random_shape(SplitMix64& rng) {
    Shape s;
    s.rank = 1 + static_cast<int>(rng.below(3));
    for (int a = 0; a < s.rank; ++a) s.extent[a] = 1 + static_cast<int>(rng.below(6));
    s.channels = 1 + static_cast<int>(rng.below(3));
    return s;
}

double sum(const Grid& g) {
    return std::accumulate(g.values().begin(), g.values().end(), 0.0);
}

}  // namespace

TEST(Shape, InvariantsEnforced) {
    EXPECT_THROW(make_shape({0}), value_error);
    EXPECT_THROW(make_shape({2, 2}, 0), value_error);
    EXPECT_EQ(make_shape({3, 4}, 2).value_count(), 24u);
}

TEST(MakeGrid, DirectConstruction) {
    const Grid g1 = make_grid(make_shape({3}), {1, 2, 3});
    EXPECT_EQ(g1.values()[0], 1.0);
    EXPECT_EQ(g1.values()[2], 3.0);

    const Grid g2 = make_grid(make_shape({2, 2}), {1, 2, 3, 4});
    EXPECT_EQ(g2.at(0, {0, 0}), 1.0);
    EXPECT_EQ(g2.at(0, {0, 1}), 2.0);
    EXPECT_EQ(g2.at(0, {1, 0}), 3.0);
    EXPECT_EQ(g2.at(0, {1, 1}), 4.0);
}

TEST(MakeGrid, RejectsBadInput) {
    EXPECT_THROW(make_grid(make_shape({3}), {1, 2}), value_error);
    EXPECT_THROW(make_grid(make_shape({2}), {1, std::nan("")}), value_error);
    EXPECT_THROW(make_grid(make_shape({2}), {1, std::numeric_limits<double>::infinity()}), value_error);
}

TEST(ZeroPad, OneDimensional) {
    const Grid g = make_grid(make_shape({2}), {1, 2});
    const int pad[1] = {1};
    const Grid padded = zero_pad(g, pad);
    ASSERT_EQ(padded.shape().extent[0], 4);
    EXPECT_EQ(padded.values()[0], 0.0);
    EXPECT_EQ(padded.values()[1], 1.0);
    EXPECT_EQ(padded.values()[2], 2.0);
    EXPECT_EQ(padded.values()[3], 0.0);
}

TEST(ZeroPad, CentersTwoDimensional) {
    const Grid g = make_grid(make_shape({1, 1}), {5});
    const int pad[2] = {1, 1};
    const Grid padded = zero_pad(g, pad);
    ASSERT_EQ(padded.shape().extent[0], 3);
    ASSERT_EQ(padded.shape().extent[1], 3);
    EXPECT_EQ(padded.at(0, {1, 1}), 5.0);
    EXPECT_EQ(sum(padded), 5.0);
}

TEST(ZeroPad, ZeroPadIsIdentity) {
    const Grid g = make_grid(make_shape({3}), {1, 2, 3});
    const int pad[1] = {0};
    const Grid padded = zero_pad(g, pad);
    EXPECT_EQ(padded.shape(), g.shape());
    EXPECT_TRUE(std::equal(g.values().begin(), g.values().end(), padded.values().begin()));
}

TEST(ZeroPad, GrowsExtentsAndPreservesSum) {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const Shape shape = random_shape(rng);
        const Grid g = random_grid(shape, rng);
        std::vector<int> pad(shape.rank);
        for (int& p : pad) p = static_cast<int>(rng.below(3));
        const Grid padded = zero_pad(g, pad);
        for (int a = 0; a < shape.rank; ++a)
            EXPECT_EQ(padded.shape().extent[a], shape.extent[a] + 2 * pad[a]);
        EXPECT_NEAR(sum(padded), sum(g), 1e-12);
    }
}

TEST(ZeroPad, RejectsLengthMismatch) {
    const Grid g = make_grid(make_shape({2, 2}), {1, 2, 3, 4});
    const int pad[1] = {1};
    EXPECT_THROW(zero_pad(g, pad), value_error);
}

TEST(Flatten, RowMajorOrder) {
    const Grid g = make_grid(make_shape({2, 2}), {1, 2, 3, 4});
    const FeatureVector fv = flatten(g);
    EXPECT_EQ(fv.values, (std::vector<double>{1, 2, 3, 4}));
    ASSERT_TRUE(fv.origin.has_value());
    EXPECT_EQ(*fv.origin, g.shape());
}

TEST(Flatten, PooledMapLength) {
    // 24 x 24 spatial with 64 channels flattens to 36864.
    const Shape s = make_shape({24, 24}, 64);
    EXPECT_EQ(s.value_count(), 36864u);
    // 119-long 1D map with 64 channels flattens to 7616.
    EXPECT_EQ(make_shape({119}, 64).value_count(), 7616u);
}

TEST(Unflatten, RoundTripIsExact) {
    SplitMix64 rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const Grid g = random_grid(random_shape(rng), rng);
        const Grid back = unflatten(flatten(g));
        EXPECT_EQ(back.shape(), g.shape());
        EXPECT_TRUE(std::equal(g.values().begin(), g.values().end(), back.values().begin()));
    }
}

TEST(Unflatten, ExplicitExample) {
    FeatureVector fv{{1, 2, 3, 4}, make_shape({2, 2}, 1)};
    const Grid g = unflatten(fv);
    EXPECT_EQ(g.at(0, {1, 0}), 3.0);
}

TEST(Unflatten, MissingOriginFails) {
    FeatureVector fv{{1, 2, 3}, std::nullopt};
    EXPECT_THROW(unflatten(fv), value_error);
}

TEST(ChannelView, ExtractsChannel) {
    const Grid g = make_grid(make_shape({2}, 2), {1, 2, 3, 4});
    const Grid second = channel_view(g, 1);
    EXPECT_EQ(second.channels(), 1);
    EXPECT_EQ(second.values()[0], 3.0);
    EXPECT_EQ(second.values()[1], 4.0);
}

TEST(ChannelView, SingleChannelIdentity) {
    const Grid g = make_grid(make_shape({3}), {1, 2, 3});
    const Grid v = channel_view(g, 0);
    EXPECT_TRUE(std::equal(g.values().begin(), g.values().end(), v.values().begin()));
}

TEST(ChannelView, OutOfRangeFails) {
    const Grid g = make_grid(make_shape({2}, 2), {1, 2, 3, 4});
    EXPECT_THROW(channel_view(g, 2), value_error);
    EXPECT_THROW(channel_view(g, -1), value_error);
}

// Layout law: value at (channel c, row x1, col x2) sits at flat index
// (c*n1 + x1)*n2 + x2, consistent with channel_view.
TEST(Layout, RankTwoLaw) {
    SplitMix64 rng(33);
    const Shape shape = make_shape({3, 4}, 2);
    const Grid g = random_grid(shape, rng);
    for (int c = 0; c < 2; ++c) {
        const Grid view = channel_view(g, c);
        for (int x1 = 0; x1 < 3; ++x1)
            for (int x2 = 0; x2 < 4; ++x2) {
                const std::size_t flat = (static_cast<std::size_t>(c) * 3 + x1) * 4 + x2;
                EXPECT_EQ(g.values()[flat], view.at(0, {x1, x2}));
            }
    }
}

TEST(Crop, InvertsZeroPad) {
    SplitMix64 rng(44);
    const Grid g = random_grid(make_shape({4, 5}, 2), rng);
    const int pad[2] = {2, 1};
    const Grid back = crop(zero_pad(g, pad), pad);
    EXPECT_EQ(back.shape(), g.shape());
    EXPECT_TRUE(std::equal(g.values().begin(), g.values().end(), back.values().begin()));
}
