#include "artic/part_grounding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "artic/error.hpp"

namespace artic::grounding {

std::string_view class_label(GAPartClass c) {
    switch (c) {
    case GAPartClass::HingeDoor: return "hinge_door";
    case GAPartClass::SliderDrawer: return "slider_drawer";
    case GAPartClass::SliderButton: return "slider_button";
    case GAPartClass::HingeHandle: return "hinge_handle";
    case GAPartClass::LineFixedHandle: return "line_fixed_handle";
    case GAPartClass::RoundFixedHandle: return "round_fixed_handle";
    case GAPartClass::HingeLid: return "hinge_lid";
    case GAPartClass::SliderLid: return "slider_lid";
    case GAPartClass::HingeKnob: return "hinge_knob";
    }
    return "hinge_door";
}

std::string class_hyphenated(GAPartClass c) {
    std::string s(class_label(c));
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

std::optional<GAPartClass> parse_class(std::string_view text) {
    std::string key;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    for (GAPartClass c : kAllClasses) {
        std::string label;
        for (char ch : class_label(c)) {
            if (ch != '_') {
                label.push_back(ch);
            }
        }
        if (label == key) {
            return c;
        }
    }
    return std::nullopt;
}

bool is_fixed_handle(GAPartClass c) {
    return c == GAPartClass::LineFixedHandle || c == GAPartClass::RoundFixedHandle;
}

bool is_handle(GAPartClass c) { return is_fixed_handle(c) || c == GAPartClass::HingeHandle; }

std::optional<program::JointKind> class_joint(GAPartClass c) {
    switch (c) {
    case GAPartClass::HingeDoor:
    case GAPartClass::HingeHandle:
    case GAPartClass::HingeLid:
    case GAPartClass::HingeKnob:
        return program::JointKind::Revolute;
    case GAPartClass::SliderDrawer:
    case GAPartClass::SliderButton:
    case GAPartClass::SliderLid:
        return program::JointKind::Prismatic;
    case GAPartClass::LineFixedHandle:
    case GAPartClass::RoundFixedHandle:
        return std::nullopt;
    }
    return std::nullopt;
}

std::span<const double> FeatureMap::cell(std::size_t x, std::size_t y) const {
    return std::span<const double>(values).subspan((y * width + x) * channels, channels);
}

Feature max_pool(const FeatureMap& map) {
    const std::size_t cells = map.width * map.height;
    if (map.mask.size() != cells || map.values.size() != cells * map.channels) {
        throw Error(ErrorCode::DimensionMismatch, "feature map and mask sizes disagree");
    }
    Feature pooled;
    bool any = false;
    for (std::size_t y = 0; y < map.height; ++y) {
        for (std::size_t x = 0; x < map.width; ++x) {
            if (!map.mask[y * map.width + x]) {
                continue;
            }
            const auto v = map.cell(x, y);
            if (!any) {
                pooled.assign(v.begin(), v.end());
                any = true;
            } else {
                for (std::size_t c = 0; c < map.channels; ++c) {
                    pooled[c] = std::max(pooled[c], v[c]);
                }
            }
        }
    }
    if (!any) {
        throw Error(ErrorCode::EmptyMask, "mask selects no cells");
    }
    return pooled;
}

FeatureStore::FeatureStore(std::vector<FeatureEntry> entries) {
    for (auto& e : entries) {
        add(std::move(e));
    }
}

void FeatureStore::add(FeatureEntry entry) {
    if (entry.vector.empty()) {
        throw Error(ErrorCode::DimensionMismatch, "feature vectors must be non-empty");
    }
    if (entries_.empty()) {
        dimension_ = entry.vector.size();
    } else if (entry.vector.size() != dimension_) {
        throw Error(ErrorCode::DimensionMismatch,
                    "store dimension is " + std::to_string(dimension_) + ", entry has " +
                        std::to_string(entry.vector.size()));
    }
    entries_.push_back(std::move(entry));
}

FeatureStore FeatureStore::load_jsonl(std::istream& in) {
    FeatureStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = "$[" + std::to_string(lineno - 1) + "]";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(where, e.what());
        }
        if (!j.contains("label") || !j["label"].is_string()) {
            throw SchemaError(where + ".label", "missing string label");
        }
        const auto label = parse_class(j["label"].get<std::string>());
        if (!label) {
            throw SchemaError(where + ".label", "unknown GAPart class '" + j["label"].get<std::string>() + "'");
        }
        if (!j.contains("vector") || !j["vector"].is_array()) {
            throw SchemaError(where + ".vector", "missing numeric array");
        }
        store.add({j["vector"].get<Feature>(), *label});
    }
    return store;
}

FeatureStore FeatureStore::load_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path);
    }
    return load_jsonl(in);
}

void FeatureStore::save_jsonl(std::ostream& out) const {
    for (const auto& e : entries_) {
        out << nlohmann::json{{"label", class_label(e.label)}, {"vector", e.vector}}.dump() << '\n';
    }
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 1.0;
    }
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

GroundingResult knn_ground(const FeatureStore& store, std::span<const double> query, std::size_t k) {
    if (store.empty()) {
        throw Error(ErrorCode::EmptyStore, "feature store is empty");
    }
    if (query.size() != store.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "query has dimension " + std::to_string(query.size()) +
                                                      ", store has " + std::to_string(store.dimension()));
    }
    if (k < 1 || k > store.size()) {
        throw std::invalid_argument("knn_ground: k must be in [1, store size]");
    }

    struct Neighbor {
        double distance;
        GAPartClass label;
    };
    std::vector<Neighbor> all;
    all.reserve(store.size());
    for (const auto& e : store.entries()) {
        all.push_back({cosine_distance(query, e.vector), e.label});
    }
    // Distance ties are broken by label so the result is independent of store order.
    auto closer = [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.label < b.label;
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);

    GroundingResult result;
    for (std::size_t i = 0; i < k; ++i) {
        ++result.votes[all[i].label];
    }
    std::size_t best = 0;
    for (const auto& [label, count] : result.votes) {
        best = std::max(best, count);
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (result.votes[all[i].label] == best) {
            result.label = all[i].label;
            break;
        }
    }
    result.nearest_distance = all.front().distance;
    return result;
}

SyntheticFeatureModel::SyntheticFeatureModel(std::size_t dimension, double sigma, std::uint64_t seed)
    : dimension_(dimension), sigma_(sigma) {
    if (dimension == 0) {
        throw std::invalid_argument("feature dimension must be positive");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (GAPartClass c : kAllClasses) {
        Feature m(dimension);
        double norm = 0.0;
        for (auto& v : m) {
            v = normal(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : m) {
            v /= norm;
        }
        means_.emplace(c, std::move(m));
    }
}

const Feature& SyntheticFeatureModel::mean(GAPartClass c) const { return means_.at(c); }

Feature SyntheticFeatureModel::sample(GAPartClass c, std::mt19937_64& rng) const {
    Feature f = mean(c);
    if (sigma_ > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma_);
        for (auto& v : f) {
            v += noise(rng);
        }
    }
    return f;
}

FeatureStore SyntheticFeatureModel::make_store(std::size_t per_class, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    FeatureStore store;
    for (GAPartClass c : kAllClasses) {
        for (std::size_t i = 0; i < per_class; ++i) {
            store.add({sample(c, rng), c});
        }
    }
    return store;
}

}  // namespace artic::grounding
