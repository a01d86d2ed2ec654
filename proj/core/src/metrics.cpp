#include "tdvim/metrics.hpp"

#include "tdvim/error.hpp"
#include "detail/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

namespace tdvim {

namespace {

void require_scores(const ScoreSet& s) {
    if (s.genuine.empty() || s.impostor.empty()) {
        throw Error(ErrorKind::EmptyScores, "genuine and impostor score lists must both be non-empty");
    }
}

double count_at_or_above(const std::vector<double>& sorted, double t) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
    return static_cast<double>(sorted.end() - it);
}

double count_below(const std::vector<double>& sorted, double t) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
    return static_cast<double>(it - sorted.begin());
}

struct AttemptCell {
    bool has_s1 = false;
    bool has_s2 = false;
    std::optional<double> s1;
    std::optional<double> s2;

    bool success(double tau) const {
        return has_s1 && has_s2 && s1 && s2 && *s1 > tau && *s2 > tau;
    }
};

// morph_id -> attempts [1..P] for one backend.
struct BackendView {
    std::map<std::string, std::vector<AttemptCell>> morphs;
    int attempts = 0;
};

BackendView build_view(const TrialTable& t, std::string_view backend) {
    std::map<std::string, std::map<int, AttemptCell>> raw;
    for (const auto& r : t.rows) {
        if (r.backend != backend) {
            continue;
        }
        if (r.attempt < 1) {
            throw Error(ErrorKind::InvalidArgument, "attempt indices start at 1 (morph " + r.morph_id + ")");
        }
        auto& cell = raw[r.morph_id][r.attempt];
        bool& has = r.contributor == Contributor::S1 ? cell.has_s1 : cell.has_s2;
        if (has) {
            throw Error(ErrorKind::InvalidArgument, "duplicate trial row for morph " + r.morph_id + " attempt " +
                                                        std::to_string(r.attempt) + " backend " + r.backend);
        }
        has = true;
        (r.contributor == Contributor::S1 ? cell.s1 : cell.s2) = r.score;
    }

    BackendView view;
    for (auto& [id, attempts] : raw) {
        const int p = attempts.rbegin()->first;
        if (static_cast<std::size_t>(p) != attempts.size()) {
            throw Error(ErrorKind::IncompletePair, "attempts for morph " + id + " are not contiguous from 1");
        }
        if (view.attempts == 0) {
            view.attempts = p;
        } else if (view.attempts != p) {
            throw Error(ErrorKind::IncompletePair, "morph " + id + " has " + std::to_string(p) +
                                                       " attempts, others have " + std::to_string(view.attempts));
        }
        auto& cells = view.morphs[id];
        for (const auto& [attempt, cell] : attempts) {
            if (!cell.has_s1 || !cell.has_s2) {
                throw Error(ErrorKind::IncompletePair, "morph " + id + " attempt " + std::to_string(attempt) +
                                                           " lacks a row for one contributor");
            }
            cells.push_back(cell);
        }
    }
    return view;
}

double threshold_for(const Thresholds& thresholds, std::string_view backend) {
    const auto it = thresholds.find(backend);
    if (it == thresholds.end()) {
        throw Error(ErrorKind::MissingThreshold, "no threshold for backend '" + std::string(backend) + "'");
    }
    return it->second;
}

std::string single_backend(const TrialTable& t) {
    const auto names = t.backends();
    if (names.empty()) {
        throw Error(ErrorKind::EmptyTable, "trial table has no rows");
    }
    if (names.size() != 1) {
        throw Error(ErrorKind::InvalidArgument, "expected a single-backend trial table, got " +
                                                    std::to_string(names.size()) + " backends");
    }
    return names.front();
}

double multi_probe(const TrialTable& t, const std::string& backend, double tau) {
    const auto view = build_view(t, backend);
    if (view.morphs.empty()) {
        throw Error(ErrorKind::EmptyTable, "no trials for backend '" + backend + "'");
    }
    std::vector<double> weight(static_cast<std::size_t>(view.attempts));
    for (int i = 1; i <= view.attempts; ++i) {
        weight[static_cast<std::size_t>(i - 1)] = 1.0 - ftar(t, backend, i);
    }
    double sum = 0.0;
    for (const auto& [id, cells] : view.morphs) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].success(tau)) {
                sum += weight[i];
            }
        }
    }
    return 100.0 * sum / (static_cast<double>(view.attempts) * static_cast<double>(view.morphs.size()));
}

double multi_probe_multi_svs(const TrialTable& t, const Thresholds& thresholds) {
    const auto names = t.backends();
    if (names.empty()) {
        throw Error(ErrorKind::EmptyTable, "trial table has no rows");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : names) {
        best = std::min(best, multi_probe(t, b, threshold_for(thresholds, b)));
    }
    return best;
}

int parse_int(const std::string& text, std::string_view what) {
    int v = 0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw Error(ErrorKind::ParseError, "bad " + std::string(what) + " '" + text + "'");
    }
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------

ErrorRates fmr_fnmr(const ScoreSet& s, double threshold) {
    require_scores(s);
    const auto fmr = std::count_if(s.impostor.begin(), s.impostor.end(), [&](double x) { return x >= threshold; });
    const auto fnmr = std::count_if(s.genuine.begin(), s.genuine.end(), [&](double x) { return x < threshold; });
    return {static_cast<double>(fmr) / static_cast<double>(s.impostor.size()),
            static_cast<double>(fnmr) / static_cast<double>(s.genuine.size())};
}

EerResult eer(const ScoreSet& s) {
    require_scores(s);
    std::vector<double> gen = s.genuine;
    std::vector<double> imp = s.impostor;
    std::sort(gen.begin(), gen.end());
    std::sort(imp.begin(), imp.end());

    std::vector<double> values;
    values.reserve(gen.size() + imp.size());
    std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(), std::back_inserter(values));
    values.erase(std::unique(values.begin(), values.end()), values.end());

    std::vector<double> candidates;
    candidates.reserve(2 * values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        candidates.push_back(values[i]);
        if (i + 1 < values.size()) {
            candidates.push_back((values[i] + values[i + 1]) / 2.0);
        }
    }
    // Midpoints stay between their neighbours, so candidates are already ascending.

    const double n_gen = static_cast<double>(gen.size());
    const double n_imp = static_cast<double>(imp.size());
    EerResult best{1.0, candidates.front()};
    double best_gap = std::numeric_limits<double>::infinity();
    for (const double t : candidates) {
        const double fmr = count_at_or_above(imp, t) / n_imp;
        const double fnmr = count_below(gen, t) / n_gen;
        const double gap = std::abs(fmr - fnmr);
        if (gap < best_gap) {
            best_gap = gap;
            best = {(fmr + fnmr) / 2.0, t};
        }
    }
    return best;
}

double threshold_at_fmr(const ScoreSet& s, double target_fmr) {
    if (s.impostor.empty()) {
        throw Error(ErrorKind::EmptyScores, "impostor score list is empty");
    }
    if (!(target_fmr > 0.0 && target_fmr < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "target FMR must lie in (0, 1)");
    }
    std::vector<double> imp = s.impostor;
    std::sort(imp.begin(), imp.end(), std::greater<>());
    const auto n = imp.size();
    const double nd = static_cast<double>(n);

    // Largest number of accepted impostors k with k / n <= target.
    auto k = static_cast<std::size_t>(std::floor(target_fmr * nd));
    while (k + 1 < n && static_cast<double>(k + 1) / nd <= target_fmr) {
        ++k;
    }
    while (k > 0 && static_cast<double>(k) / nd > target_fmr) {
        --k;
    }
    return std::nextafter(imp[k], std::numeric_limits<double>::infinity());
}

// ---------------------------------------------------------------------------

std::string_view to_string(Contributor c) noexcept {
    return c == Contributor::S1 ? "S1" : "S2";
}

std::string_view to_string(GmapCapacity c) noexcept {
    switch (c) {
        case GmapCapacity::MultiProbe: return "multi_probe";
        case GmapCapacity::MultiProbeMultiSvs: return "multi_probe_multi_svs";
        case GmapCapacity::Full: return "full";
    }
    return "full";
}

std::vector<std::string> TrialTable::backends() const {
    std::set<std::string> names;
    for (const auto& r : rows) {
        names.insert(r.backend);
    }
    return {names.begin(), names.end()};
}

std::vector<MorphFactor> TrialTable::attack_types() const {
    std::set<MorphFactor> types;
    for (const auto& r : rows) {
        types.insert(r.attack_type);
    }
    return {types.begin(), types.end()};
}

void sort_canonical(TrialTable& t) {
    std::stable_sort(t.rows.begin(), t.rows.end(), [](const TrialRow& a, const TrialRow& b) {
        return std::tie(a.morph_id, a.backend, a.attempt, a.contributor) <
               std::tie(b.morph_id, b.backend, b.attempt, b.contributor);
    });
}

std::string trial_table_to_csv(const TrialTable& t) {
    std::ostringstream out;
    out << kTrialTableHeader << '\n';
    for (const auto& r : t.rows) {
        out << detail::csv_field(r.morph_id) << ',' << to_string(r.attack_type) << ',' << r.attempt << ','
            << to_string(r.contributor) << ',' << detail::csv_field(r.backend) << ','
            << (r.score ? detail::format_roundtrip(*r.score) : std::string()) << ',' << detail::csv_field(r.device)
            << ',' << detail::csv_field(r.language) << ',' << to_string(r.gender_pair) << '\n';
    }
    return out.str();
}

TrialTable trial_table_from_csv(std::string_view text) {
    const auto lines = detail::split_lines(text);
    if (lines.empty() || lines.front() != kTrialTableHeader) {
        throw Error(ErrorKind::ParseError, "trial table header must be '" + std::string(kTrialTableHeader) + "'");
    }
    TrialTable t;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const auto f = detail::split_csv_line(lines[ln]);
        if (f.size() != 9) {
            throw Error(ErrorKind::ParseError, "trial table line " + std::to_string(ln + 1) + " has " +
                                                   std::to_string(f.size()) + " fields");
        }
        TrialRow r;
        r.morph_id = f[0];
        const auto factor = parse_factor(f[1]);
        const auto gp = parse_gender_pair(f[8]);
        if (!factor || !gp || (f[3] != "S1" && f[3] != "S2")) {
            throw Error(ErrorKind::ParseError, "trial table line " + std::to_string(ln + 1) + " has a bad enum field");
        }
        r.attack_type = *factor;
        r.attempt = parse_int(f[2], "attempt");
        r.contributor = f[3] == "S1" ? Contributor::S1 : Contributor::S2;
        r.backend = f[4];
        if (!f[5].empty()) {
            double v = 0.0;
            const auto* end = f[5].data() + f[5].size();
            const auto res = std::from_chars(f[5].data(), end, v);
            if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(v)) {
                throw Error(ErrorKind::ParseError, "bad score '" + f[5] + "'");
            }
            r.score = v;
        }
        r.device = f[6];
        r.language = f[7];
        r.gender_pair = *gp;
        t.rows.push_back(std::move(r));
    }
    return t;
}

void write_trial_table(const TrialTable& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    }
    out << trial_table_to_csv(t);
}

TrialTable load_trial_table(const std::filesystem::path& path) {
    return trial_table_from_csv(detail::read_text_file(path.string()));
}

// ---------------------------------------------------------------------------

double mmpmr(const TrialTable& t, const Thresholds& thresholds) {
    const auto backend = single_backend(t);
    const double tau = threshold_for(thresholds, backend);
    constexpr double kNone = -std::numeric_limits<double>::infinity();
    std::map<std::string, std::pair<double, double>> best;
    std::map<std::string, std::pair<bool, bool>> seen;
    for (const auto& r : t.rows) {
        auto [it, inserted] = best.try_emplace(r.morph_id, kNone, kNone);
        double& slot = r.contributor == Contributor::S1 ? it->second.first : it->second.second;
        if (r.score) {
            slot = std::max(slot, *r.score);
        }
        auto& flags = seen[r.morph_id];
        (r.contributor == Contributor::S1 ? flags.first : flags.second) = true;
    }
    std::size_t successes = 0;
    for (const auto& [id, scores] : best) {
        const auto& flags = seen[id];
        if (!flags.first || !flags.second) {
            throw Error(ErrorKind::IncompletePair, "morph " + id + " lacks trials for one contributor");
        }
        if (scores.first > tau && scores.second > tau) {
            ++successes;
        }
    }
    return 100.0 * static_cast<double>(successes) / static_cast<double>(best.size());
}

double fmmpmr(const TrialTable& t, const Thresholds& thresholds) {
    const auto backend = single_backend(t);
    const double tau = threshold_for(thresholds, backend);
    const auto view = build_view(t, backend);
    std::size_t successes = 0;
    for (const auto& [id, cells] : view.morphs) {
        for (const auto& c : cells) {
            successes += c.success(tau) ? 1 : 0;
        }
    }
    return 100.0 * static_cast<double>(successes) /
           (static_cast<double>(view.morphs.size()) * static_cast<double>(view.attempts));
}

MapMatrix map_matrix(const TrialTable& t, const Thresholds& thresholds) {
    MapMatrix out;
    out.backends = t.backends();
    if (out.backends.empty()) {
        throw Error(ErrorKind::EmptyTable, "trial table has no rows");
    }
    std::vector<BackendView> views;
    std::vector<double> taus;
    std::set<std::string> morphs;
    int attempts = 0;
    for (const auto& b : out.backends) {
        taus.push_back(threshold_for(thresholds, b));
        views.push_back(build_view(t, b));
        attempts = std::max(attempts, views.back().attempts);
        for (const auto& [id, cells] : views.back().morphs) {
            morphs.insert(id);
        }
    }

    const std::size_t n_backends = out.backends.size();
    // fooled[m][i] = number of backends fooled by morph m in attempt i+1.
    std::vector<std::vector<std::size_t>> fooled;
    for (const auto& id : morphs) {
        std::vector<std::size_t> per_attempt(static_cast<std::size_t>(attempts), 0);
        for (std::size_t b = 0; b < n_backends; ++b) {
            const auto it = views[b].morphs.find(id);
            if (it == views[b].morphs.end()) {
                continue;
            }
            for (std::size_t i = 0; i < it->second.size(); ++i) {
                per_attempt[i] += it->second[i].success(taus[b]) ? 1 : 0;
            }
        }
        fooled.push_back(std::move(per_attempt));
    }

    out.cells.assign(static_cast<std::size_t>(attempts), std::vector<double>(n_backends, 0.0));
    for (std::size_t r = 1; r <= static_cast<std::size_t>(attempts); ++r) {
        for (std::size_t c = 1; c <= n_backends; ++c) {
            std::size_t hits = 0;
            for (const auto& per_attempt : fooled) {
                const auto ok = std::count_if(per_attempt.begin(), per_attempt.end(),
                                              [c](std::size_t n) { return n >= c; });
                hits += static_cast<std::size_t>(ok) >= r ? 1 : 0;
            }
            out.cells[r - 1][c - 1] = 100.0 * static_cast<double>(hits) / static_cast<double>(fooled.size());
        }
    }
    return out;
}

double ftar(const TrialTable& t, std::string_view backend, int attempt) {
    std::size_t total = 0;
    std::size_t failed = 0;
    for (const auto& r : t.rows) {
        if (r.backend == backend && r.attempt == attempt) {
            ++total;
            failed += r.score ? 0 : 1;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(failed) / static_cast<double>(total);
}

double gmap(const TrialTable& t, const GmapConfig& cfg) {
    if (t.rows.empty()) {
        throw Error(ErrorKind::EmptyTable, "trial table has no rows");
    }
    for (const auto& b : t.backends()) {
        threshold_for(cfg.thresholds, b);
    }
    switch (cfg.capacity) {
        case GmapCapacity::MultiProbe: {
            const auto backend = single_backend(t);
            return multi_probe(t, backend, threshold_for(cfg.thresholds, backend));
        }
        case GmapCapacity::MultiProbeMultiSvs:
            return multi_probe_multi_svs(t, cfg.thresholds);
        case GmapCapacity::Full: {
            auto types = cfg.attack_types.empty() ? t.attack_types() : cfg.attack_types;
            std::sort(types.begin(), types.end());
            types.erase(std::unique(types.begin(), types.end()), types.end());
            double sum = 0.0;
            for (const auto d : types) {
                TrialTable sub;
                std::copy_if(t.rows.begin(), t.rows.end(), std::back_inserter(sub.rows),
                             [d](const TrialRow& r) { return r.attack_type == d; });
                if (sub.rows.empty()) {
                    throw Error(ErrorKind::EmptyTable,
                                "no trials for attack type " + std::string(to_string(d)));
                }
                sum += multi_probe_multi_svs(sub, cfg.thresholds);
            }
            return sum / static_cast<double>(types.size());
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown G-MAP capacity");
}

}  // namespace tdvim
