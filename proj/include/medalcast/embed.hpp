#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "medalcast/error.hpp"
#include "medalcast/ingest.hpp"
#include "medalcast/matrix.hpp"
#include "medalcast/rng.hpp"

#include "json.hpp"

namespace medalcast::embed {

constexpr int kDim = 10;
constexpr std::uint64_t kDefaultSeed = 42;

/// Codeword for a categorical value: ten uniform [-1, 1) draws from a stream
/// keyed by (seed, category, value). Hash-keyed generation means vocabulary
/// insertion order never matters.
inline Vec categorical_codeword(std::uint64_t seed, const std::string& category,
                                const std::string& value) {
    SplitMix64 rng(seed ^ fnv1a("embed/" + category) ^ fnv1a(value));
    rng.next();
    Vec v(kDim);
    for (double& x : v) x = rng.uniform_sym();
    return v;
}

/// Codeword for an integer count: sinusoidal positional encoding,
/// entry 2k = sin(v / 100^(2k/10)), entry 2k+1 = cos(v / 100^(2k/10)).
/// Nearby counts land near each other, which is what makes the nearest
/// neighbor interval decode meaningful.
inline Vec scalar_codeword(int count) {
    Vec v(kDim);
    for (int k = 0; k < kDim / 2; ++k) {
        double scale = std::pow(100.0, (2.0 * k) / kDim);
        v[2 * k] = std::sin(count / scale);
        v[2 * k + 1] = std::cos(count / scale);
    }
    return v;
}

/// Deterministic map from category values and integer counts to 10-dim
/// vectors. Built once from registered vocabularies, then immutable.
class EmbeddingCodebook {
public:
    EmbeddingCodebook() : seed_(kDefaultSeed) {}

    std::uint64_t seed() const { return seed_; }

    static EmbeddingCodebook build(
        std::uint64_t seed,
        const std::map<std::string, std::vector<std::string>>& categorical_vocab,
        const std::map<std::string, int>& scalar_max) {
        EmbeddingCodebook cb;
        cb.seed_ = seed;
        for (const auto& [category, values] : categorical_vocab) {
            auto& table = cb.categories_[category];
            for (const auto& value : values)
                table[value] = categorical_codeword(seed, category, value);
            check_injective(category, table);
        }
        for (const auto& [feature, max_count] : scalar_max) {
            if (max_count < 1)
                throw range_error("scalar feature '" + feature + "' needs max >= 1");
            auto& list = cb.scalars_[feature];
            list.reserve(static_cast<std::size_t>(max_count) + 1);
            for (int c = 0; c <= max_count; ++c) list.push_back(scalar_codeword(c));
            check_monotone_distance(feature, list);
        }
        return cb;
    }

    const Vec& category_vec(const std::string& category, const std::string& value) const {
        auto cat = categories_.find(category);
        if (cat == categories_.end())
            throw range_error("unknown embedding category '" + category + "'");
        auto it = cat->second.find(value);
        if (it == cat->second.end())
            throw range_error("value '" + value + "' is not registered for category '" +
                              category + "'");
        return it->second;
    }

    const Vec& scalar_vec(const std::string& feature, int count) const {
        const auto& list = scalar_entries(feature);
        if (count < 0 || count >= static_cast<int>(list.size()))
            throw range_error("count " + std::to_string(count) + " outside domain [0, " +
                              std::to_string(list.size() - 1) + "] of feature '" +
                              feature + "'");
        return list[static_cast<std::size_t>(count)];
    }

    const std::vector<Vec>& scalar_entries(const std::string& feature) const {
        auto it = scalars_.find(feature);
        if (it == scalars_.end())
            throw range_error("unknown scalar feature '" + feature + "'");
        return it->second;
    }

    const std::map<std::string, std::map<std::string, Vec>>& categories() const {
        return categories_;
    }
    const std::map<std::string, std::vector<Vec>>& scalars() const { return scalars_; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["seed"] = seed_;
        j["dim"] = kDim;
        for (const auto& [cat, table] : categories_)
            for (const auto& [value, vec] : table)
                j["categories"][cat][value] = vec;
        for (const auto& [feature, list] : scalars_)
            j["scalars"][feature] = list;
        return j;
    }

    static EmbeddingCodebook from_json(const nlohmann::json& j) {
        EmbeddingCodebook cb;
        cb.seed_ = j.at("seed").get<std::uint64_t>();
        if (j.contains("categories"))
            for (const auto& [cat, table] : j.at("categories").items())
                for (const auto& [value, vec] : table.items())
                    cb.categories_[cat][value] = vec.get<Vec>();
        if (j.contains("scalars"))
            for (const auto& [feature, list] : j.at("scalars").items())
                cb.scalars_[feature] = list.get<std::vector<Vec>>();
        return cb;
    }

private:
    static void check_injective(const std::string& category,
                                const std::map<std::string, Vec>& table) {
        std::set<Vec> seen;
        for (const auto& [value, vec] : table)
            if (!seen.insert(vec).second)
                throw numeric_error("codeword collision in category '" + category +
                                    "' at value '" + value + "'");
    }

    // d(enc(k), enc(k+1)) < d(enc(k), enc(k+3)) over the whole domain.
    static void check_monotone_distance(const std::string& feature,
                                        const std::vector<Vec>& list) {
        for (std::size_t k = 0; k + 3 < list.size(); ++k) {
            Vec d1(kDim), d3(kDim);
            for (int i = 0; i < kDim; ++i) {
                d1[i] = list[k][i] - list[k + 1][i];
                d3[i] = list[k][i] - list[k + 3][i];
            }
            if (!(norm2(d1) < norm2(d3)))
                throw numeric_error("scalar encoding for '" + feature +
                                    "' is not distance-monotone at count " +
                                    std::to_string(k));
        }
    }

    std::uint64_t seed_;
    std::map<std::string, std::map<std::string, Vec>> categories_;
    std::map<std::string, std::vector<Vec>> scalars_;
};

// Category names used by the athlete vector, in concatenation order.
inline const char* kCategoryNoc = "noc";
inline const char* kCategoryEdition = "edition";
inline const char* kCategoryGames = "games";
inline const char* kCategoryAwards = "awards";
inline const char* kCategorySport = "sport";

// Scalar feature names, in team-matrix column order.
inline const std::vector<std::string>& team_feature_names() {
    static const std::vector<std::string> names = {"gold", "silver", "bronze",
                                                   "athletes", "events"};
    return names;
}

/// Per-athlete aggregate: the five attributes feeding the athlete vector,
/// plus the set of sports entered (one matrix row per sport downstream).
struct AthleteSummary {
    std::string name;
    std::string noc;
    ingest::Sex sex = ingest::Sex::M;
    int earliest_edition = 0;
    int games_count = 0;
    ingest::Medal best_award = ingest::Medal::NoMedal;
    std::string primary_sport;           // sport of the earliest appearance
    std::vector<std::string> sports;     // distinct, in first-appearance order
    int latest_edition = 0;
    int longest_consecutive_run = 0;     // consecutive editions participated
};

/// Aggregates one athlete's records, considering only editions <= up_to.
/// Identity is (name, noc): a name can recur across countries.
inline std::vector<AthleteSummary> summarize_athletes(
    const std::vector<ingest::AthleteRecord>& records, int up_to_edition = 1 << 30) {
    std::map<std::pair<std::string, std::string>, std::vector<const ingest::AthleteRecord*>>
        grouped;
    for (const auto& r : records)
        if (r.edition <= up_to_edition) grouped[{r.noc, r.name}].push_back(&r);

    auto award_rank = [](ingest::Medal m) {
        switch (m) {
            case ingest::Medal::Gold: return 3;
            case ingest::Medal::Silver: return 2;
            case ingest::Medal::Bronze: return 1;
            default: return 0;
        }
    };

    std::vector<AthleteSummary> out;
    out.reserve(grouped.size());
    for (auto& [key, rows] : grouped) {
        std::sort(rows.begin(), rows.end(),
                  [](const ingest::AthleteRecord* a, const ingest::AthleteRecord* b) {
                      if (a->edition != b->edition) return a->edition < b->edition;
                      return a->sport < b->sport;
                  });
        AthleteSummary s;
        s.noc = key.first;
        s.name = key.second;
        s.sex = rows.front()->sex;
        s.earliest_edition = rows.front()->edition;
        s.primary_sport = rows.front()->sport;
        std::set<int> editions;
        for (const auto* r : rows) {
            editions.insert(r->edition);
            s.latest_edition = std::max(s.latest_edition, r->edition);
            if (award_rank(r->medal) > award_rank(s.best_award)) s.best_award = r->medal;
            if (std::find(s.sports.begin(), s.sports.end(), r->sport) == s.sports.end())
                s.sports.push_back(r->sport);
        }
        s.games_count = static_cast<int>(editions.size());
        int run = 0, prev = -10, best = 0;
        for (int e : editions) {
            run = (e == prev + 1) ? run + 1 : 1;
            best = std::max(best, run);
            prev = e;
        }
        s.longest_consecutive_run = best;
        out.push_back(std::move(s));
    }
    return out;
}

/// The 1x50 athlete vector: NOC | edition | games | awards | sport.
inline Vec athlete_vector(const EmbeddingCodebook& cb, const AthleteSummary& s) {
    Vec out;
    out.reserve(5 * kDim);
    auto append = [&out](const Vec& v) { out.insert(out.end(), v.begin(), v.end()); };
    append(cb.category_vec(kCategoryNoc, s.noc));
    append(cb.category_vec(kCategoryEdition, std::to_string(s.earliest_edition)));
    append(cb.category_vec(kCategoryGames, std::to_string(s.games_count)));
    append(cb.category_vec(kCategoryAwards, ingest::medal_name(s.best_award)));
    append(cb.category_vec(kCategorySport, s.primary_sport));
    return out;
}

/// The 10x5 national-team matrix; column j is the scalar codeword of count j.
inline Matrix team_matrix(const EmbeddingCodebook& cb, const ingest::MedalTally& tally) {
    const int counts[5] = {tally.gold, tally.silver, tally.bronze, tally.athletes,
                           tally.events};
    Matrix m(kDim, 5);
    for (int j = 0; j < 5; ++j)
        m.set_col(static_cast<std::size_t>(j),
                  cb.scalar_vec(team_feature_names()[static_cast<std::size_t>(j)],
                                counts[j]));
    return m;
}

} // namespace medalcast::embed
