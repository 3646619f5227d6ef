#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace artic::program {

enum class JointKind { Revolute, Prismatic };

const char* joint_kind_name(JointKind kind);  // "revolute" / "prismatic"
// Case-insensitive; nullopt for anything else.
std::optional<JointKind> parse_joint_kind(std::string_view token);

inline constexpr double kDefaultRevoluteDelta = 90.0;   // degrees
inline constexpr double kDefaultPrismaticDelta = 0.5;   // fraction of part extent

double default_delta(JointKind kind);

// One manipulation of one part: (part name, joint, signed state change).
// Positive delta moves the part away from the object body.
struct ActionUnit {
    std::string part_name;
    JointKind joint = JointKind::Revolute;
    double delta = 0.0;  // degrees (revolute) or fraction of the part extent (prismatic)

    bool operator==(const ActionUnit&) const = default;
};

struct Strategy {
    int index = 1;
    std::vector<ActionUnit> steps;

    bool operator==(const Strategy&) const = default;
};

// Alternatives in preference order.
struct StrategySet {
    std::vector<Strategy> strategies;

    bool operator==(const StrategySet&) const = default;
};

struct ProgramExpr;

struct UnionExpr {
    std::vector<ProgramExpr> children;
};

struct ListExpr {
    std::vector<ProgramExpr> children;
};

struct ProgramExpr {
    std::variant<ActionUnit, UnionExpr, ListExpr> node;

    bool is_unit() const { return std::holds_alternative<ActionUnit>(node); }
    bool is_union() const { return std::holds_alternative<UnionExpr>(node); }
    bool is_list() const { return std::holds_alternative<ListExpr>(node); }
    const std::vector<ProgramExpr>& children() const;
};

bool valid_part_name(std::string_view name);

// Throws SyntaxError (or its UnknownJoint flavour) with a 1-based location.
// Accepts the optional "New" prefix and header forms with or without a
// strategy number ("Strategy: 1 step: ...").
StrategySet parse_strategies(std::string_view text);

// Canonical text, one strategy per line. Throws EmptySet.
std::string serialize_strategies(const StrategySet& set);

// Shortest text that parses back to exactly `delta`, always signed ("+90", "-0.5").
std::string format_delta(double delta);

// Throws EmptySet.
ProgramExpr to_expr(const StrategySet& set);

std::string expr_to_string(const ProgramExpr& expr);

// Throws InvariantViolation on indices that are not 1..n or empty/invalid steps.
void validate(const StrategySet& set);

void to_json(nlohmann::json& j, const ActionUnit& u);
void from_json(const nlohmann::json& j, ActionUnit& u);
void to_json(nlohmann::json& j, const StrategySet& s);
void from_json(const nlohmann::json& j, StrategySet& s);
nlohmann::json expr_to_json(const ProgramExpr& expr);

}  // namespace artic::program
