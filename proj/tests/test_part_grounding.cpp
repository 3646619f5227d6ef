#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "artic/error.hpp"
#include "artic/part_grounding.hpp"

using namespace artic;
using namespace artic::grounding;

namespace {

FeatureMap make_map(std::size_t w, std::size_t h, std::size_t c, std::vector<double> values, std::vector<bool> mask) {
    FeatureMap m;
    m.width = w;
    m.height = h;
    m.channels = c;
    m.values = std::move(values);
    m.mask = std::move(mask);
    return m;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

FeatureStore example_store() {
    return FeatureStore({{{1, 0}, GAPartClass::HingeDoor},
                         {{0.9, 0.1}, GAPartClass::HingeDoor},
                         {{0, 1}, GAPartClass::SliderButton}});
}

}  // namespace

TEST(ClassNames, RoundTrip) {
    for (auto c : kAllClasses) {
        EXPECT_EQ(parse_class(class_label(c)), c);
        EXPECT_EQ(parse_class(class_hyphenated(c)), c);
    }
    EXPECT_EQ(parse_class("Hinge Door"), GAPartClass::HingeDoor);
    EXPECT_EQ(parse_class("SliderDrawer"), GAPartClass::SliderDrawer);
    EXPECT_FALSE(parse_class("teapot"));
    EXPECT_EQ(class_hyphenated(GAPartClass::LineFixedHandle), "line-fixed-handle");
}

TEST(ClassNames, JointKinds) {
    EXPECT_EQ(class_joint(GAPartClass::HingeDoor), program::JointKind::Revolute);
    EXPECT_EQ(class_joint(GAPartClass::SliderButton), program::JointKind::Prismatic);
    EXPECT_FALSE(class_joint(GAPartClass::RoundFixedHandle));
    EXPECT_TRUE(is_fixed_handle(GAPartClass::LineFixedHandle));
    EXPECT_FALSE(is_fixed_handle(GAPartClass::HingeHandle));
    EXPECT_TRUE(is_handle(GAPartClass::HingeHandle));
}

TEST(MaxPool, SingleMaskedCell) {
    const auto m = make_map(2, 1, 3, {1, 2, 3, 4, 5, 6}, {true, false});
    EXPECT_EQ(max_pool(m), (Feature{1, 2, 3}));
}

TEST(MaxPool, ChannelWiseMax) {
    const auto m = make_map(2, 1, 3, {1, 5, 3, 4, 2, 6}, {true, true});
    EXPECT_EQ(max_pool(m), (Feature{4, 5, 6}));
}

TEST(MaxPool, Errors) {
    EXPECT_EQ(code_of([] { max_pool(make_map(2, 1, 1, {1, 2}, {false, false})); }), ErrorCode::EmptyMask);
    EXPECT_EQ(code_of([] { max_pool(make_map(2, 1, 1, {1, 2, 3}, {true, true})); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([] { max_pool(make_map(2, 1, 1, {1, 2}, {true})); }), ErrorCode::DimensionMismatch);
}

TEST(MaxPool, AgainstBruteForce) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t w = 1 + rng() % 6, h = 1 + rng() % 6, c = 1 + rng() % 8;
        std::vector<double> values(w * h * c);
        for (auto& v : values) {
            v = u(rng);
        }
        std::vector<bool> mask(w * h);
        for (std::size_t i = 0; i < mask.size(); ++i) {
            mask[i] = rng() % 2 == 0;
        }
        mask[rng() % mask.size()] = true;
        const auto m = make_map(w, h, c, values, mask);
        const auto f = max_pool(m);
        for (std::size_t ch = 0; ch < c; ++ch) {
            double best = -1e300;
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    if (mask[y * w + x]) {
                        best = std::max(best, values[(y * w + x) * c + ch]);
                    }
                }
            }
            EXPECT_EQ(f[ch], best);
        }
    }
}

TEST(Knn, ExampleStoreVotes) {
    const auto r = knn_ground(example_store(), Feature{1, 0.05}, 3);
    EXPECT_EQ(r.label, GAPartClass::HingeDoor);
    EXPECT_EQ(r.votes.at(GAPartClass::HingeDoor), 2u);
    EXPECT_EQ(r.votes.at(GAPartClass::SliderButton), 1u);
}

TEST(Knn, TieGoesToNearestMember) {
    const FeatureStore s({{{1, 0}, GAPartClass::HingeDoor}, {{0, 1}, GAPartClass::SliderButton}});
    EXPECT_EQ(knn_ground(s, Feature{0.2, 1}, 2).label, GAPartClass::SliderButton);
    EXPECT_EQ(knn_ground(s, Feature{1, 0.2}, 2).label, GAPartClass::HingeDoor);
}

TEST(Knn, WholeStoreMajority) {
    const auto r = knn_ground(example_store(), Feature{0, 1}, 3);
    EXPECT_EQ(r.label, GAPartClass::HingeDoor);
    EXPECT_EQ(r.votes.at(GAPartClass::HingeDoor), 2u);
    EXPECT_THROW(knn_ground(example_store(), Feature{0, 1}, 4), std::invalid_argument);
    EXPECT_THROW(knn_ground(example_store(), Feature{0, 1}, 0), std::invalid_argument);
}

TEST(Knn, Errors) {
    EXPECT_EQ(code_of([] { knn_ground(FeatureStore{}, Feature{1, 0}); }), ErrorCode::EmptyStore);
    EXPECT_EQ(code_of([] { knn_ground(example_store(), Feature{1, 0, 0}); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([] {
                  FeatureStore s = example_store();
                  s.add({{1, 2, 3}, GAPartClass::HingeLid});
              }),
              ErrorCode::DimensionMismatch);
}

TEST(Knn, ScaleAndPermutationInvariance) {
    const SyntheticFeatureModel model(12, 0.1, 9);
    const auto store = model.make_store(6, 10);
    std::mt19937_64 rng(11);
    std::vector<FeatureEntry> shuffled = store.entries();
    for (int trial = 0; trial < 100; ++trial) {
        const auto cls = kAllClasses[rng() % kAllClasses.size()];
        auto q = model.sample(cls, rng);
        const auto base = knn_ground(store, q);
        auto scaled = q;
        for (auto& v : scaled) {
            v *= 7.5;
        }
        EXPECT_EQ(knn_ground(store, scaled).label, base.label);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_EQ(knn_ground(FeatureStore(shuffled), q).label, base.label);
    }
}

TEST(Knn, SyntheticClassesRecovered) {
    const SyntheticFeatureModel model(16, 0.05, 0);
    const auto store = model.make_store(8, 1);
    std::mt19937_64 rng(2);
    for (auto cls : kAllClasses) {
        for (int i = 0; i < 10; ++i) {
            EXPECT_EQ(knn_ground(store, model.sample(cls, rng)).label, cls);
        }
    }
}

TEST(CosineDistance, Basics) {
    EXPECT_NEAR(cosine_distance(Feature{1, 0}, Feature{2, 0}), 0.0, 1e-12);
    EXPECT_NEAR(cosine_distance(Feature{1, 0}, Feature{0, 3}), 1.0, 1e-12);
    EXPECT_NEAR(cosine_distance(Feature{1, 0}, Feature{-1, 0}), 2.0, 1e-12);
}

TEST(FeatureStoreIo, JsonlRoundTrip) {
    const auto store = SyntheticFeatureModel(5, 0.2, 4).make_store(3, 5);
    std::stringstream ss;
    store.save_jsonl(ss);
    const auto back = FeatureStore::load_jsonl(ss);
    ASSERT_EQ(back.size(), store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        EXPECT_EQ(back.entries()[i].label, store.entries()[i].label);
        for (std::size_t j = 0; j < 5; ++j) {
            EXPECT_DOUBLE_EQ(back.entries()[i].vector[j], store.entries()[i].vector[j]);
        }
    }
}

TEST(FeatureStoreIo, BadLines) {
    std::stringstream bad_label(R"({"label":"teapot","vector":[1,2]})");
    EXPECT_THROW(FeatureStore::load_jsonl(bad_label), SchemaError);
    std::stringstream bad_json("{not json");
    EXPECT_THROW(FeatureStore::load_jsonl(bad_json), SchemaError);
}
