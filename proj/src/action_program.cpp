#include "artic/action_program.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "artic/error.hpp"

namespace artic::program {

const char* joint_kind_name(JointKind kind) {
    return kind == JointKind::Revolute ? "revolute" : "prismatic";
}

namespace {

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i]))) {
            return false;
        }
    }
    return true;
}

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == ' ' || c == '_' || c == '-';
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    StrategySet parse_set() {
        StrategySet set;
        skip_ws();
        if (at_end()) {
            fail("expected a strategy header, found end of input");
        }
        int previous = 0;
        while (!at_end()) {
            Strategy s = parse_strategy(previous);
            previous = s.index;
            set.strategies.push_back(std::move(s));
            skip_ws();
        }
        return set;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    [[noreturn]] void fail_at(std::size_t at, const std::string& msg,
                              ErrorCode code = ErrorCode::SyntaxError) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < at && i < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw SyntaxError(line, col, msg, code);
    }

    [[noreturn]] void fail(const std::string& msg) const { fail_at(pos_, msg); }

    std::string describe_here() const {
        if (at_end()) {
            return "end of input";
        }
        return std::string("'") + peek() + "'";
    }

    void expect(char c) {
        skip_ws();
        if (peek() != c) {
            fail(std::string("expected '") + c + "', found " + describe_here());
        }
        ++pos_;
    }

    std::string_view word() {
        skip_ws();
        const std::size_t start = pos_;
        while (!at_end() && std::isalpha(static_cast<unsigned char>(peek()))) {
            ++pos_;
        }
        return text_.substr(start, pos_ - start);
    }

    std::optional<int> integer() {
        skip_ws();
        const std::size_t start = pos_;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
            ++pos_;
        }
        if (start == pos_) {
            return std::nullopt;
        }
        int value = 0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (res.ec != std::errc{}) {
            fail_at(start, "integer out of range");
        }
        return value;
    }

    Strategy parse_strategy(int previous_index) {
        skip_ws();
        const std::size_t header_start = pos_;
        std::string_view kw = word();
        if (iequals(kw, "new")) {
            kw = word();
        }
        if (!iequals(kw, "strategy")) {
            fail_at(header_start, "expected 'Strategy' header");
        }
        Strategy s;
        const std::size_t index_pos = (skip_ws(), pos_);
        if (auto idx = integer()) {
            if (*idx < 1) {
                fail_at(index_pos, "strategy index must be positive");
            }
            if (*idx <= previous_index) {
                fail_at(index_pos, "strategy indices must be strictly increasing");
            }
            s.index = *idx;
        } else {
            s.index = previous_index + 1;
        }
        expect(':');
        const std::size_t count_pos = (skip_ws(), pos_);
        const auto count = integer();
        if (!count) {
            fail("expected step count");
        }
        const std::string_view unit = word();
        if (unit != "step" && unit != "steps") {
            fail_at(pos_ - unit.size(), "expected 'step' or 'steps'");
        }
        expect(':');

        skip_ws();
        while (peek() == '(') {
            s.steps.push_back(parse_step(static_cast<int>(s.steps.size()) + 1));
            skip_ws();
        }
        if (s.steps.empty()) {
            fail("expected at least one step");
        }
        if (static_cast<std::size_t>(*count) != s.steps.size()) {
            fail_at(count_pos, "header announces " + std::to_string(*count) + " step(s) but " +
                                   std::to_string(s.steps.size()) + " were given");
        }
        return s;
    }

    ActionUnit parse_step(int expected_number) {
        expect('(');
        const std::size_t num_pos = (skip_ws(), pos_);
        const auto number = integer();
        if (!number) {
            fail("expected step number");
        }
        if (*number != expected_number) {
            fail_at(num_pos, "step number " + std::to_string(*number) + " out of sequence (expected " +
                                 std::to_string(expected_number) + ")");
        }
        expect(')');
        expect('(');

        ActionUnit unit;
        skip_ws();
        const std::size_t name_pos = pos_;
        if (!std::isalpha(static_cast<unsigned char>(peek()))) {
            fail("part name must start with a letter");
        }
        while (!at_end() && peek() != ',') {
            if (!is_name_char(peek())) {
                fail(std::string("invalid character in part name: ") + describe_here());
            }
            ++pos_;
        }
        std::string_view name = text_.substr(name_pos, pos_ - name_pos);
        while (!name.empty() && name.back() == ' ') {
            name.remove_suffix(1);
        }
        unit.part_name = std::string(name);
        expect(',');

        skip_ws();
        const std::size_t joint_pos = pos_;
        while (!at_end() && peek() != ',' && !std::isspace(static_cast<unsigned char>(peek())) &&
               peek() != ')') {
            ++pos_;
        }
        const std::string_view joint_token = text_.substr(joint_pos, pos_ - joint_pos);
        if (joint_token.empty()) {
            fail("expected joint kind");
        }
        const auto joint = parse_joint_kind(joint_token);
        if (!joint) {
            fail_at(joint_pos, "unknown joint kind '" + std::string(joint_token) + "'",
                    ErrorCode::UnknownJoint);
        }
        unit.joint = *joint;
        expect(',');

        unit.delta = parse_delta(*joint);
        expect(')');
        return unit;
    }

    double parse_delta(JointKind joint) {
        skip_ws();
        const std::size_t start = pos_;
        double sign = 1.0;
        bool has_sign = false;
        if (peek() == '+' || peek() == '-') {
            sign = peek() == '-' ? -1.0 : 1.0;
            has_sign = true;
            ++pos_;
            skip_ws();
        }
        const std::size_t num_start = pos_;
        double magnitude = 0.0;
        if (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) {
            const auto res = std::from_chars(text_.data() + num_start, text_.data() + text_.size(),
                                             magnitude);
            if (res.ec != std::errc{}) {
                fail_at(num_start, "malformed number");
            }
            pos_ = static_cast<std::size_t>(res.ptr - text_.data());
        } else if (has_sign) {
            magnitude = default_delta(joint);
        } else {
            fail_at(start, "expected signed delta or bare sign");
        }
        if (!std::isfinite(magnitude)) {
            fail_at(num_start, "delta must be finite");
        }
        if (magnitude == 0.0) {
            fail_at(start, "delta must be non-zero");
        }
        return sign * magnitude;
    }
};

}  // namespace

std::optional<JointKind> parse_joint_kind(std::string_view token) {
    if (iequals(token, "revolute")) {
        return JointKind::Revolute;
    }
    if (iequals(token, "prismatic")) {
        return JointKind::Prismatic;
    }
    return std::nullopt;
}

double default_delta(JointKind kind) {
    return kind == JointKind::Revolute ? kDefaultRevoluteDelta : kDefaultPrismaticDelta;
}

bool valid_part_name(std::string_view name) {
    if (name.empty() || !std::isalpha(static_cast<unsigned char>(name.front())) ||
        name.back() == ' ') {
        return false;
    }
    for (char c : name) {
        if (!is_name_char(c)) {
            return false;
        }
    }
    return true;
}

const std::vector<ProgramExpr>& ProgramExpr::children() const {
    static const std::vector<ProgramExpr> none;
    if (const auto* u = std::get_if<UnionExpr>(&node)) {
        return u->children;
    }
    if (const auto* l = std::get_if<ListExpr>(&node)) {
        return l->children;
    }
    return none;
}

StrategySet parse_strategies(std::string_view text) { return Parser(text).parse_set(); }

std::string format_delta(double delta) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), std::abs(delta));
    std::string out(delta < 0 ? "-" : "+");
    out.append(buf, res.ptr);
    return out;
}

void validate(const StrategySet& set) {
    if (set.strategies.empty()) {
        throw Error(ErrorCode::EmptySet, "strategy set is empty");
    }
    int previous = 0;
    for (const auto& s : set.strategies) {
        if (s.index <= previous) {
            throw Error(ErrorCode::InvariantViolation, "strategy indices must be strictly increasing from 1");
        }
        previous = s.index;
        if (s.steps.empty()) {
            throw Error(ErrorCode::InvariantViolation,
                        "strategy " + std::to_string(s.index) + " has no steps");
        }
        for (const auto& u : s.steps) {
            if (!valid_part_name(u.part_name)) {
                throw Error(ErrorCode::InvariantViolation, "invalid part name '" + u.part_name + "'");
            }
            if (u.delta == 0.0 || !std::isfinite(u.delta)) {
                throw Error(ErrorCode::InvariantViolation, "delta must be finite and non-zero");
            }
        }
    }
}

std::string serialize_strategies(const StrategySet& set) {
    validate(set);
    std::ostringstream out;
    bool first = true;
    for (const auto& s : set.strategies) {
        if (!first) {
            out << '\n';
        }
        first = false;
        out << "Strategy " << s.index << ": " << s.steps.size()
            << (s.steps.size() == 1 ? " step:" : " steps:");
        for (std::size_t i = 0; i < s.steps.size(); ++i) {
            const auto& u = s.steps[i];
            out << " (" << (i + 1) << ") (" << u.part_name << ", " << joint_kind_name(u.joint) << ", "
                << format_delta(u.delta) << ")";
        }
    }
    return out.str();
}

namespace {

ProgramExpr strategy_expr(const Strategy& s) {
    if (s.steps.size() == 1) {
        return ProgramExpr{s.steps.front()};
    }
    ListExpr list;
    for (const auto& u : s.steps) {
        list.children.push_back(ProgramExpr{u});
    }
    return ProgramExpr{std::move(list)};
}

}  // namespace

ProgramExpr to_expr(const StrategySet& set) {
    if (set.strategies.empty()) {
        throw Error(ErrorCode::EmptySet, "strategy set is empty");
    }
    if (set.strategies.size() == 1) {
        return strategy_expr(set.strategies.front());
    }
    UnionExpr u;
    for (const auto& s : set.strategies) {
        u.children.push_back(strategy_expr(s));
    }
    return ProgramExpr{std::move(u)};
}

std::string expr_to_string(const ProgramExpr& expr) {
    if (const auto* unit = std::get_if<ActionUnit>(&expr.node)) {
        return "(" + unit->part_name + ", " + joint_kind_name(unit->joint) + ", " +
               format_delta(unit->delta) + ")";
    }
    const bool is_union = expr.is_union();
    std::string out = is_union ? "Union{" : "List[";
    const auto& kids = expr.children();
    for (std::size_t i = 0; i < kids.size(); ++i) {
        if (i) {
            out += ", ";
        }
        out += expr_to_string(kids[i]);
    }
    out += is_union ? "}" : "]";
    return out;
}

void to_json(nlohmann::json& j, const ActionUnit& u) {
    j = nlohmann::json{{"part", u.part_name}, {"joint", joint_kind_name(u.joint)}, {"delta", u.delta}};
}

void from_json(const nlohmann::json& j, ActionUnit& u) {
    u.part_name = j.at("part").get<std::string>();
    const auto kind = parse_joint_kind(j.at("joint").get<std::string>());
    if (!kind) {
        throw Error(ErrorCode::UnknownJoint, j.at("joint").get<std::string>());
    }
    u.joint = *kind;
    u.delta = j.at("delta").get<double>();
}

void to_json(nlohmann::json& j, const StrategySet& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& st : s.strategies) {
        arr.push_back({{"index", st.index}, {"steps", st.steps}});
    }
    j = nlohmann::json{{"strategies", std::move(arr)}};
}

void from_json(const nlohmann::json& j, StrategySet& s) {
    s.strategies.clear();
    for (const auto& st : j.at("strategies")) {
        Strategy strategy;
        strategy.index = st.at("index").get<int>();
        strategy.steps = st.at("steps").get<std::vector<ActionUnit>>();
        s.strategies.push_back(std::move(strategy));
    }
    validate(s);
}

nlohmann::json expr_to_json(const ProgramExpr& expr) {
    if (const auto* unit = std::get_if<ActionUnit>(&expr.node)) {
        return nlohmann::json{{"unit", *unit}};
    }
    nlohmann::json kids = nlohmann::json::array();
    for (const auto& c : expr.children()) {
        kids.push_back(expr_to_json(c));
    }
    return nlohmann::json{{expr.is_union() ? "union" : "list", std::move(kids)}};
}

}  // namespace artic::program
