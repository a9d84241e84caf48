#pragma once

#include <map>
#include <string>
#include <vector>

#include "medalcast/embed.hpp"
#include "medalcast/error.hpp"
#include "medalcast/matrix.hpp"
#include "medalcast/pca.hpp"

namespace medalcast::statematrix {

constexpr std::size_t kSportRows = 71;
constexpr std::size_t kTeamRows = 10;
constexpr std::size_t kStateRows = kSportRows + kTeamRows + 1; // 82
constexpr std::size_t kStateCols = 5;

/// Bijection between the 71-sport vocabulary and matrix rows 0..70.
class SportIndex {
public:
    static SportIndex from_names(const std::vector<std::string>& names) {
        SportIndex idx;
        idx.names_ = names;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (!idx.index_.emplace(names[i], i).second)
                throw schema_error("duplicate sport '" + names[i] + "' in vocabulary");
        }
        return idx;
    }

    std::size_t row(const std::string& sport) const {
        auto it = index_.find(sport);
        if (it == index_.end())
            throw range_error("sport '" + sport + "' is not in the sport vocabulary");
        return it->second;
    }

    bool contains(const std::string& sport) const { return index_.count(sport) > 0; }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::map<std::string, std::size_t> index_;
};

struct SlidingWindowConfig {
    int window = 5; // Games count, including the current one
};

/// Athlete-aggregate block M_t (71x5) for one country at Games index t.
///
/// An athlete contributes iff their latest appearance falls inside the
/// window of the most recent `window` Games ending at t, and they do not hit
/// the long-career exclusion (more than five consecutive Games). Each
/// contributor's projected 5-vector is added to the row of every program
/// they entered up to t; entering one program in several events still counts
/// once per program.
inline Matrix accumulate_athletes(const std::string& country, int t,
                                  const std::vector<ingest::AthleteRecord>& athletes,
                                  const embed::EmbeddingCodebook& codebook,
                                  const pca::ProjectionMatrix& projection,
                                  const SportIndex& index,
                                  const SlidingWindowConfig& cfg = {}) {
    if (cfg.window < 1) throw range_error("sliding window must be >= 1");
    std::vector<ingest::AthleteRecord> relevant;
    for (const auto& r : athletes)
        if (r.noc == country && r.edition <= t) relevant.push_back(r);

    Matrix m(index.size(), kStateCols);
    for (const auto& summary : embed::summarize_athletes(relevant, t)) {
        if (summary.latest_edition <= t - cfg.window) continue;
        if (summary.longest_consecutive_run > 5) continue;
        Vec projected = pca::project(projection, embed::athlete_vector(codebook, summary));
        for (const auto& sport : summary.sports) {
            std::size_t row = index.row(sport);
            for (std::size_t c = 0; c < kStateCols; ++c)
                m.at(row, c) += projected[c];
        }
    }
    return m;
}

/// Host indicator: all-ones when the next Games are hosted by this country.
inline Vec host_row(bool is_host_next) {
    return Vec(kStateCols, is_host_next ? 1.0 : 0.0);
}

/// X_t = M_t (+) N_t (+) host row, stacked vertically in that order.
inline Matrix assemble(const Matrix& athlete_block, const Matrix& team_block,
                       const Vec& host) {
    if (athlete_block.cols() != kStateCols || team_block.cols() != kStateCols ||
        host.size() != kStateCols)
        throw shape_error("assemble: blocks must have 5 columns");
    if (team_block.rows() != kTeamRows)
        throw shape_error("assemble: team block must have 10 rows");
    Matrix x(athlete_block.rows() + kTeamRows + 1, kStateCols);
    for (std::size_t r = 0; r < athlete_block.rows(); ++r)
        for (std::size_t c = 0; c < kStateCols; ++c) x.at(r, c) = athlete_block.at(r, c);
    for (std::size_t r = 0; r < kTeamRows; ++r)
        for (std::size_t c = 0; c < kStateCols; ++c)
            x.at(athlete_block.rows() + r, c) = team_block.at(r, c);
    for (std::size_t c = 0; c < kStateCols; ++c)
        x.at(athlete_block.rows() + kTeamRows, c) = host[c];
    return x;
}

/// Overwrites the N_t block (rows 71..80) of an assembled state.
inline void replace_team_block(Matrix& state, const Matrix& team_block) {
    if (team_block.rows() != kTeamRows || team_block.cols() != kStateCols)
        throw shape_error("replace_team_block: block must be 10x5");
    const std::size_t offset = state.rows() - kTeamRows - 1;
    for (std::size_t r = 0; r < kTeamRows; ++r)
        for (std::size_t c = 0; c < kStateCols; ++c)
            state.at(offset + r, c) = team_block.at(r, c);
}

/// Reads the N_t block back out of an assembled state.
inline Matrix team_block_of(const Matrix& state) {
    const std::size_t offset = state.rows() - kTeamRows - 1;
    Matrix m(kTeamRows, kStateCols);
    for (std::size_t r = 0; r < kTeamRows; ++r)
        for (std::size_t c = 0; c < kStateCols; ++c)
            m.at(r, c) = state.at(offset + r, c);
    return m;
}

inline void set_host_row(Matrix& state, bool is_host_next) {
    for (std::size_t c = 0; c < kStateCols; ++c)
        state.at(state.rows() - 1, c) = is_host_next ? 1.0 : 0.0;
}

} // namespace medalcast::statematrix
