#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "artic/action_program.hpp"
#include "artic/error.hpp"
#include "support.hpp"

using namespace artic;
using namespace artic::program;

TEST(ParseStrategies, SingleUnit) {
    const auto s = parse_strategies("Strategy 1: 1 step: (1) (Door, revolute, +90)");
    ASSERT_EQ(s.strategies.size(), 1u);
    EXPECT_EQ(s.strategies[0].index, 1);
    ASSERT_EQ(s.strategies[0].steps.size(), 1u);
    EXPECT_EQ(s.strategies[0].steps[0], (ActionUnit{"Door", JointKind::Revolute, 90.0}));
}

TEST(ParseStrategies, TwoStepsInOrder) {
    const auto s = parse_strategies("Strategy 3: 2 steps: (1) (Button, prismatic, -0.5) (2) (Door, revolute, +60)");
    ASSERT_EQ(s.strategies.size(), 1u);
    EXPECT_EQ(s.strategies[0].index, 3);
    const std::vector<ActionUnit> want = {{"Button", JointKind::Prismatic, -0.5}, {"Door", JointKind::Revolute, 60.0}};
    EXPECT_EQ(s.strategies[0].steps, want);
}

TEST(ParseStrategies, NewPrefixAndBareSigns) {
    const auto s = parse_strategies(
        "New Strategy 1: 2 steps: (1) (Button, prismatic, -) (2) (Door, revolute,  +)\n"
        "New Strategy 2: 1 step: (1) (Button, prismatic, -)");
    ASSERT_EQ(s.strategies.size(), 2u);
    const std::vector<ActionUnit> want = {{"Button", JointKind::Prismatic, -0.5}, {"Door", JointKind::Revolute, 90.0}};
    EXPECT_EQ(s.strategies[0].steps, want);
    EXPECT_EQ(s.strategies[1].steps, (std::vector<ActionUnit>{{"Button", JointKind::Prismatic, -0.5}}));
}

TEST(ParseStrategies, HeaderWithoutIndex) {
    const auto s = parse_strategies("Strategy: 1 step: (1) (Lid, prismatic, -0.5)");
    ASSERT_EQ(s.strategies.size(), 1u);
    EXPECT_EQ(s.strategies[0].steps[0], (ActionUnit{"Lid", JointKind::Prismatic, -0.5}));
}

TEST(ParseStrategies, MicrowaveFourStrategies) {
    const auto s = parse_strategies(
        "Strategy 1: 1 step: (1) (Door, revolute, +90)\n"
        "Strategy 2: 1 step: (1) (Handle, revolute, +90)\n"
        "Strategy 3: 2 steps: (1) (Button, prismatic, -0.5) (2) (Door, revolute, +60)\n"
        "Strategy 4: 2 steps: (1) (Handle, revolute, +30) (2) (Door, revolute, +60)");
    ASSERT_EQ(s.strategies.size(), 4u);
    EXPECT_EQ(s.strategies[3].steps[0], (ActionUnit{"Handle", JointKind::Revolute, 30.0}));
    const auto e = to_expr(s);
    ASSERT_TRUE(e.is_union());
    ASSERT_EQ(e.children().size(), 4u);
    EXPECT_TRUE(e.children()[0].is_unit());
    EXPECT_TRUE(e.children()[1].is_unit());
    EXPECT_TRUE(e.children()[2].is_list());
    EXPECT_TRUE(e.children()[3].is_list());
    EXPECT_EQ(e.children()[2].children().size(), 2u);
}

TEST(ParseStrategies, CaseInsensitiveJointAndTrimmedName) {
    const auto s = parse_strategies("strategy 1: 1 step: (1) (  Door  , REVOLUTE, -45)");
    EXPECT_EQ(s.strategies[0].steps[0], (ActionUnit{"Door", JointKind::Revolute, -45.0}));
}

TEST(ParseStrategies, Errors) {
    auto code_of = [](const std::string& text) {
        try {
            parse_strategies(text);
        } catch (const SyntaxError& e) {
            EXPECT_GE(e.line(), 1u);
            EXPECT_GE(e.column(), 1u);
            return e.code();
        }
        ADD_FAILURE() << "no error for: " << text;
        return ErrorCode::IoError;
    };
    EXPECT_EQ(code_of("Strategy 1: 1 step: (1) (Door, spherical, +90)"), ErrorCode::UnknownJoint);
    EXPECT_EQ(code_of("Strategy 1: 2 steps: (1) (Door, revolute, +90)"), ErrorCode::SyntaxError);
    EXPECT_EQ(code_of("Strategy 1: 1 step: (2) (Door, revolute, +90)"), ErrorCode::SyntaxError);
    EXPECT_EQ(code_of("Strategy 1: 1 step: (1) (Door, revolute, 0)"), ErrorCode::SyntaxError);
    EXPECT_EQ(code_of("Strategy 1: 1 step: (1) (9Door, revolute, +1)"), ErrorCode::SyntaxError);
    EXPECT_EQ(code_of("Strategy 2: 1 step: (1) (Door, revolute, +1)\nStrategy 1: 1 step: (1) (Door, revolute, +1)"),
              ErrorCode::SyntaxError);
    EXPECT_EQ(code_of(""), ErrorCode::SyntaxError);
    EXPECT_EQ(code_of("Strategy 1: 1 step: (1) (Door, revolute, +90"), ErrorCode::SyntaxError);
}

TEST(ParseStrategies, ErrorLocationPointsAtOffendingLine) {
    try {
        parse_strategies("Strategy 1: 1 step: (1) (Door, revolute, +90)\nStrategy 2: 1 step: (1) (Door, twisty, +1)");
        FAIL();
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.code(), ErrorCode::UnknownJoint);
    }
}

TEST(ParseStrategies, FuzzedInputsParseOrRaiseLocatedErrors) {
    std::mt19937_64 rng(5);
    const std::string base = "New Strategy 1: 2 steps: (1) (Button, prismatic, -0.5) (2) (Door, revolute, +60)";
    const std::string alphabet = "()+-:,. 0123456789SsNnewtrategyprismaticrevolute\n";
    for (int i = 0; i < 5000; ++i) {
        std::string t = base;
        const int edits = std::uniform_int_distribution<int>(1, 4)(rng);
        for (int e = 0; e < edits; ++e) {
            const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, t.size())(rng);
            const char c = alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
            switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
            case 0: t.insert(t.begin() + static_cast<long>(pos), c); break;
            case 1: if (pos < t.size()) t.erase(pos, 1); break;
            default: if (pos < t.size()) t[pos] = c; break;
            }
        }
        try {
            const auto s = parse_strategies(t);
            EXPECT_FALSE(s.strategies.empty());
        } catch (const SyntaxError& e) {
            EXPECT_GE(e.line(), 1u);
            EXPECT_GE(e.column(), 1u);
        } catch (...) {
            ADD_FAILURE() << "unexpected exception type for input: " << t;
        }
    }
}

TEST(SerializeStrategies, Canonical) {
    StrategySet s{{Strategy{1, {{"Door", JointKind::Revolute, 90.0}}}}};
    EXPECT_EQ(serialize_strategies(s), "Strategy 1: 1 step: (1) (Door, revolute, +90)");
    s.strategies[0].steps.push_back({"Handle", JointKind::Prismatic, -0.5});
    EXPECT_EQ(serialize_strategies(s), "Strategy 1: 2 steps: (1) (Door, revolute, +90) (2) (Handle, prismatic, -0.5)");
}

TEST(SerializeStrategies, EmptySetRejected) {
    try {
        serialize_strategies(StrategySet{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptySet);
    }
}

TEST(SerializeStrategies, RoundTripRandomSets) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 2000; ++i) {
        const StrategySet s = artic::testing::random_strategy_set(rng);
        EXPECT_EQ(parse_strategies(serialize_strategies(s)), s);
    }
}

TEST(FormatDelta, ShortestSignedText) {
    EXPECT_EQ(format_delta(90.0), "+90");
    EXPECT_EQ(format_delta(-0.5), "-0.5");
    EXPECT_EQ(format_delta(0.1), "+0.1");
    const double tricky = 1.0 / 3.0;
    const auto s = parse_strategies("Strategy 1: 1 step: (1) (Door, revolute, " + format_delta(tricky) + ")");
    EXPECT_EQ(s.strategies[0].steps[0].delta, tricky);
}

TEST(ToExpr, Nesting) {
    StrategySet one{{Strategy{1, {{"Door", JointKind::Revolute, 90.0}}}}};
    EXPECT_TRUE(to_expr(one).is_unit());
    one.strategies[0].steps.push_back({"Door", JointKind::Revolute, 10.0});
    const auto list = to_expr(one);
    ASSERT_TRUE(list.is_list());
    EXPECT_EQ(list.children().size(), 2u);
    EXPECT_THROW(to_expr(StrategySet{}), Error);
}

TEST(ToExpr, NeverProducesSingletonContainers) {
    std::mt19937_64 rng(8);
    std::function<void(const ProgramExpr&)> check = [&](const ProgramExpr& e) {
        if (!e.is_unit()) {
            EXPECT_GE(e.children().size(), 2u);
            for (const auto& c : e.children()) {
                check(c);
            }
        }
    };
    for (int i = 0; i < 500; ++i) {
        check(to_expr(artic::testing::random_strategy_set(rng)));
    }
}

TEST(Json, StrategySetRoundTrip) {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100; ++i) {
        const StrategySet s = artic::testing::random_strategy_set(rng);
        const nlohmann::json j = s;
        EXPECT_EQ(j.get<StrategySet>(), s);
    }
}
