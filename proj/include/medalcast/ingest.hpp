#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "medalcast/csv.hpp"
#include "medalcast/error.hpp"

namespace medalcast::ingest {

enum class Medal { Gold, Silver, Bronze, NoMedal };
enum class Sex { M, F };

struct AthleteRecord {
    std::string name;
    std::string noc;   // canonical 3-letter code
    Sex sex = Sex::M;
    int edition = 0;   // ordinal Games index (1-based)
    int year = 0;
    std::string sport;
    std::string event;
    Medal medal = Medal::NoMedal;
};

struct MedalTally {
    std::string noc;
    int year = 0;
    int gold = 0, silver = 0, bronze = 0;
    int athletes = 0, events = 0;
};

struct GamesRecord {
    int year = 0;
    std::string host_noc;
    bool held = true;
};

/// Alias -> canonical code map. Lookups are case-insensitive; an alias that
/// is not registered is an error so that name drift surfaces early.
class NocRegistry {
public:
    void add(const std::string& alias, const std::string& code) {
        aliases_[lowercase(alias)] = code;
        codes_.insert(code);
    }

    static NocRegistry load(const std::string& path) {
        CsvTable t = read_csv(path);
        std::size_t a = t.column("alias"), c = t.column("code");
        NocRegistry reg;
        for (const auto& row : t.rows) {
            reg.add(row[a], row[c]);
            reg.add(row[c], row[c]); // canonical codes resolve to themselves
        }
        return reg;
    }

    std::string canonicalize(const std::string& name) const {
        auto it = aliases_.find(lowercase(name));
        if (it == aliases_.end())
            throw validation_error("unknown country identifier '" + name + "'");
        return it->second;
    }

    bool known(const std::string& name) const {
        return aliases_.count(lowercase(name)) > 0;
    }

    const std::set<std::string>& codes() const { return codes_; }

    static std::string lowercase(std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        return s;
    }

private:
    std::map<std::string, std::string> aliases_;
    std::set<std::string> codes_;
};

inline Medal parse_medal(const std::string& raw) {
    std::string s = NocRegistry::lowercase(raw);
    if (s == "gold") return Medal::Gold;
    if (s == "silver") return Medal::Silver;
    if (s == "bronze") return Medal::Bronze;
    if (s == "no medal" || s == "nomedal" || s == "none") return Medal::NoMedal;
    throw schema_error("unrecognized medal value '" + raw + "'");
}

inline std::string medal_name(Medal m) {
    switch (m) {
        case Medal::Gold: return "Gold";
        case Medal::Silver: return "Silver";
        case Medal::Bronze: return "Bronze";
        default: return "No medal";
    }
}

inline int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw schema_error("cannot parse " + what + " from '" + s + "'");
    }
}

struct AthleteLoad {
    std::vector<AthleteRecord> records;
    std::size_t dropped = 0; // rows removed for missing noc/year/sport/medal
};

/// Rows missing any of {noc, year, sport, medal} are dropped and counted;
/// everything else is canonicalized on the way in.
inline AthleteLoad load_athletes(const std::string& path, const NocRegistry& registry) {
    CsvTable t = read_csv(path);
    std::size_t c_name = t.column("name"), c_noc = t.column("noc"),
                c_sex = t.column("sex"), c_edition = t.column("edition"),
                c_year = t.column("year"), c_sport = t.column("sport"),
                c_event = t.column("event"), c_medal = t.column("medal");
    AthleteLoad out;
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size())
            throw schema_error("athlete row has " + std::to_string(row.size()) +
                               " fields, header has " + std::to_string(t.header.size()));
        if (row[c_noc].empty() || row[c_year].empty() || row[c_sport].empty() ||
            row[c_medal].empty()) {
            ++out.dropped;
            continue;
        }
        AthleteRecord rec;
        rec.name = row[c_name];
        rec.noc = registry.canonicalize(row[c_noc]);
        rec.sex = (NocRegistry::lowercase(row[c_sex]) == "f") ? Sex::F : Sex::M;
        rec.edition = parse_int(row[c_edition], "edition");
        rec.year = parse_int(row[c_year], "year");
        rec.sport = row[c_sport];
        rec.event = row[c_event];
        rec.medal = parse_medal(row[c_medal]);
        if (rec.edition < 1)
            throw schema_error("edition must be >= 1, got " + row[c_edition]);
        out.records.push_back(std::move(rec));
    }
    return out;
}

/// Advisory range check against the documented data ranges; violations are
/// reported, not rejected, because synthetic fixtures may exceed them.
struct TallyLoad {
    std::vector<MedalTally> tallies;
    std::vector<std::string> range_warnings;
};

inline TallyLoad load_tallies(const std::string& path, const NocRegistry& registry) {
    CsvTable t = read_csv(path);
    std::size_t c_noc = t.column("noc"), c_year = t.column("year"),
                c_gold = t.column("gold"), c_silver = t.column("silver"),
                c_bronze = t.column("bronze"), c_ath = t.column("athletes"),
                c_ev = t.column("events");
    TallyLoad out;
    auto check = [&out](const std::string& field, int v, int8_t, int max,
                        const std::string& noc, int year) {
        if (v < 0)
            throw schema_error(field + " must be non-negative");
        if (v > max)
            out.range_warnings.push_back(field + "=" + std::to_string(v) + " for " +
                                         noc + "/" + std::to_string(year) +
                                         " exceeds documented maximum " +
                                         std::to_string(max));
    };
    for (const auto& row : t.rows) {
        MedalTally m;
        m.noc = registry.canonicalize(row[c_noc]);
        m.year = parse_int(row[c_year], "year");
        m.gold = parse_int(row[c_gold], "gold");
        m.silver = parse_int(row[c_silver], "silver");
        m.bronze = parse_int(row[c_bronze], "bronze");
        m.athletes = parse_int(row[c_ath], "athletes");
        m.events = parse_int(row[c_ev], "events");
        check("gold", m.gold, 0, 83, m.noc, m.year);
        check("silver", m.silver, 0, 78, m.noc, m.year);
        check("bronze", m.bronze, 0, 77, m.noc, m.year);
        check("athletes", m.athletes, 0, 1109, m.noc, m.year);
        check("events", m.events, 0, 47, m.noc, m.year);
        out.tallies.push_back(std::move(m));
    }
    return out;
}

/// Games flagged as not held (war years) stay in the list with held=false;
/// every downstream series filters on the flag.
inline std::vector<GamesRecord> load_hosts(const std::string& path,
                                           const NocRegistry& registry) {
    CsvTable t = read_csv(path);
    std::size_t c_year = t.column("year"), c_host = t.column("host_noc"),
                c_held = t.column("held");
    std::vector<GamesRecord> out;
    std::set<int> seen;
    for (const auto& row : t.rows) {
        GamesRecord g;
        g.year = parse_int(row[c_year], "year");
        if (!seen.insert(g.year).second)
            throw schema_error("duplicate year " + std::to_string(g.year) +
                               " in hosts file");
        std::string flag = NocRegistry::lowercase(row[c_held]);
        g.held = (flag == "1" || flag == "true" || flag == "yes");
        g.host_noc = g.held ? registry.canonicalize(row[c_host]) : row[c_host];
        out.push_back(std::move(g));
    }
    std::sort(out.begin(), out.end(),
              [](const GamesRecord& a, const GamesRecord& b) { return a.year < b.year; });
    return out;
}

/// Replaces each missing element with the mean of its immediate neighbors.
/// Boundary or consecutive missing markers are the caller's problem.
inline std::vector<double> impute_glitch(const std::vector<std::optional<double>>& series) {
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].has_value()) {
            out[i] = *series[i];
            continue;
        }
        if (i == 0 || i + 1 == series.size())
            throw numeric_error("missing value at series boundary cannot be imputed");
        if (!series[i - 1].has_value() || !series[i + 1].has_value())
            throw numeric_error("consecutive missing values cannot be imputed");
        out[i] = 0.5 * (*series[i - 1] + *series[i + 1]);
    }
    return out;
}

struct PanelEntry {
    std::string noc;
    int year = 0;
    int games_index = 0;         // 1-based position among held Games
    MedalTally tally;            // zeros when the country has no tally row
    bool has_tally = false;
    std::vector<std::size_t> athlete_rows; // indices into the athletes vector
};

struct Panel {
    std::vector<int> held_years;              // sorted ascending
    std::vector<std::string> countries;       // sorted ascending
    std::vector<GamesRecord> games;           // held Games only, sorted
    std::vector<PanelEntry> entries;          // countries x held_years, row-major

    const PanelEntry& entry(std::size_t country_idx, std::size_t year_idx) const {
        return entries[country_idx * held_years.size() + year_idx];
    }
    PanelEntry& entry(std::size_t country_idx, std::size_t year_idx) {
        return entries[country_idx * held_years.size() + year_idx];
    }
};

/// One time-ordered entry per (country, held Games year). Countries with no
/// rows in a given year keep an empty entry; first-medal analysis needs them.
inline Panel build_panel(const std::vector<AthleteRecord>& athletes,
                         const std::vector<MedalTally>& tallies,
                         const std::vector<GamesRecord>& hosts) {
    Panel panel;
    std::map<int, int> year_to_index; // held year -> 0-based index
    for (const auto& g : hosts) {
        if (!g.held) continue;
        panel.games.push_back(g);
        year_to_index[g.year] = static_cast<int>(panel.held_years.size());
        panel.held_years.push_back(g.year);
    }

    std::set<std::string> country_set;
    for (const auto& a : athletes) country_set.insert(a.noc);
    for (const auto& t : tallies) country_set.insert(t.noc);
    panel.countries.assign(country_set.begin(), country_set.end());

    std::map<std::string, std::size_t> country_index;
    for (std::size_t i = 0; i < panel.countries.size(); ++i)
        country_index[panel.countries[i]] = i;

    panel.entries.resize(panel.countries.size() * panel.held_years.size());
    for (std::size_t ci = 0; ci < panel.countries.size(); ++ci)
        for (std::size_t yi = 0; yi < panel.held_years.size(); ++yi) {
            PanelEntry& e = panel.entry(ci, yi);
            e.noc = panel.countries[ci];
            e.year = panel.held_years[yi];
            e.games_index = static_cast<int>(yi) + 1;
            e.tally.noc = e.noc;
            e.tally.year = e.year;
        }

    for (const auto& t : tallies) {
        auto it = year_to_index.find(t.year);
        if (it == year_to_index.end())
            throw validation_error("tally year " + std::to_string(t.year) +
                                   " is not a held Games year");
        PanelEntry& e = panel.entry(country_index[t.noc], it->second);
        e.tally = t;
        e.has_tally = true;
    }

    for (std::size_t i = 0; i < athletes.size(); ++i) {
        const auto& a = athletes[i];
        auto it = year_to_index.find(a.year);
        if (it == year_to_index.end())
            throw validation_error("athlete year " + std::to_string(a.year) +
                                   " is not a held Games year");
        panel.entry(country_index[a.noc], it->second).athlete_rows.push_back(i);
    }
    return panel;
}

} // namespace medalcast::ingest
