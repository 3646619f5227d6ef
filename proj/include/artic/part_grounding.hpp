#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "artic/action_program.hpp"

namespace artic::grounding {

enum class GAPartClass {
    HingeDoor,
    SliderDrawer,
    SliderButton,
    HingeHandle,
    LineFixedHandle,
    RoundFixedHandle,
    HingeLid,
    SliderLid,
    HingeKnob,
};

inline constexpr std::array<GAPartClass, 9> kAllClasses = {
    GAPartClass::HingeDoor,       GAPartClass::SliderDrawer,     GAPartClass::SliderButton,
    GAPartClass::HingeHandle,     GAPartClass::LineFixedHandle,  GAPartClass::RoundFixedHandle,
    GAPartClass::HingeLid,        GAPartClass::SliderLid,        GAPartClass::HingeKnob,
};

std::string_view class_label(GAPartClass c);   // "hinge_door"
std::string class_hyphenated(GAPartClass c);   // "hinge-door"
// Accepts "hinge_door", "hinge-door", "Hinge Door", "HingeDoor".
std::optional<GAPartClass> parse_class(std::string_view text);

bool is_fixed_handle(GAPartClass c);
bool is_handle(GAPartClass c);
// Joint kind the class actuates; nullopt for fixed handles (they inherit their parent's).
std::optional<program::JointKind> class_joint(GAPartClass c);

using Feature = std::vector<double>;

struct FeatureMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;
    std::vector<double> values;  // row-major [y][x][c]
    std::vector<bool> mask;      // row-major [y][x]

    std::span<const double> cell(std::size_t x, std::size_t y) const;
};

// Channel-wise max over masked cells. Throws EmptyMask / DimensionMismatch.
Feature max_pool(const FeatureMap& map);

struct FeatureEntry {
    Feature vector;
    GAPartClass label;
};

class FeatureStore {
public:
    FeatureStore() = default;
    explicit FeatureStore(std::vector<FeatureEntry> entries);

    void add(FeatureEntry entry);
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t dimension() const { return dimension_; }
    const std::vector<FeatureEntry>& entries() const { return entries_; }

    // JSON Lines: {"label":"hinge_door","vector":[...]} per line.
    static FeatureStore load_jsonl(std::istream& in);
    static FeatureStore load_jsonl_file(const std::string& path);
    void save_jsonl(std::ostream& out) const;

private:
    std::vector<FeatureEntry> entries_;
    std::size_t dimension_ = 0;
};

struct GroundingResult {
    GAPartClass label;
    std::map<GAPartClass, std::size_t> votes;
    double nearest_distance = 0.0;
};

inline constexpr std::size_t kDefaultK = 5;

double cosine_distance(std::span<const double> a, std::span<const double> b);

// Majority vote over the k nearest entries by cosine distance; ties go to
// the tied label whose closest member ranks first.
GroundingResult knn_ground(const FeatureStore& store, std::span<const double> query,
                           std::size_t k = kDefaultK);

// Stand-in for pooled image features: one random unit mean per class,
// observations are mean + N(0, sigma^2) per channel.
class SyntheticFeatureModel {
public:
    SyntheticFeatureModel(std::size_t dimension, double sigma, std::uint64_t seed);

    std::size_t dimension() const { return dimension_; }
    double sigma() const { return sigma_; }
    const Feature& mean(GAPartClass c) const;
    Feature sample(GAPartClass c, std::mt19937_64& rng) const;
    FeatureStore make_store(std::size_t per_class, std::uint64_t seed) const;

private:
    std::size_t dimension_;
    double sigma_;
    std::map<GAPartClass, Feature> means_;
};

}  // namespace artic::grounding
