#include "tdvim/evaluation.hpp"

#include "tdvim/error.hpp"
#include "tdvim/parallel.hpp"
#include "detail/csv.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace tdvim {

namespace {

std::optional<double> score_of(const AcquireResult& a, const AcquireResult& b) {
    if (!acquired(a) || !acquired(b)) {
        return std::nullopt;
    }
    return cosine_similarity(std::get<Embedding>(a), std::get<Embedding>(b));
}

bool record_less(const RecordingMeta* a, const RecordingMeta* b) {
    return std::tie(a->session, a->sentence_id, a->path) < std::tie(b->session, b->sentence_id, b->path);
}

}  // namespace

BackendSet make_backends(const std::vector<VerifierDescriptor>& descriptors) {
    BackendSet out;
    for (const auto& d : descriptors) {
        out.push_back(make_backend(d));
    }
    return out;
}

std::vector<AcquireResult> embed_files(const VerifierBackend& backend, const std::vector<std::filesystem::path>& paths,
                                       int jobs) {
    std::vector<AcquireResult> out(paths.size(), AcquireFailure{"not computed"});
    parallel_for(paths.size(), jobs, [&](std::size_t i) {
        AudioSignal sig;
        try {
            sig = read_wav(paths[i]);
        } catch (const Error& e) {
            out[i] = AcquireFailure{e.what()};
            return;
        }
        out[i] = backend.embed(sig, paths[i]);
    });
    return out;
}

// ---------------------------------------------------------------------------

BaselineResult run_baseline(const Manifest& m, const VerifierBackend& backend, const BaselineGrouping& grouping,
                            double target_fmr, int jobs) {
    BaselineResult result;
    result.backend = backend.descriptor().name;
    result.target_fmr = target_fmr;

    using GroupKey = std::pair<std::string, std::string>;
    std::map<GroupKey, std::map<std::string, std::vector<const RecordingMeta*>>> groups;
    for (const auto& r : m.records) {
        groups[{grouping.by_device ? r.device : "*", grouping.by_language ? r.language : "*"}][r.subject_id]
            .push_back(&r);
    }
    if (groups.empty()) {
        throw Error(ErrorKind::InsufficientData, "manifest has no recordings");
    }
    for (const auto& [key, subjects] : groups) {
        const std::string name = "group " + key.first + "/" + key.second;
        if (subjects.size() < 2) {
            throw Error(ErrorKind::InsufficientData, name + " has fewer than 2 subjects");
        }
        for (const auto& [id, recs] : subjects) {
            if (recs.size() < 2) {
                throw Error(ErrorKind::InsufficientData, name + ": subject " + id + " has fewer than 2 recordings");
            }
        }
    }

    std::vector<std::filesystem::path> paths;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& r : m.records) {
        if (index.emplace(r.path.string(), paths.size()).second) {
            paths.push_back(r.path);
        }
    }
    const auto embeddings = embed_files(backend, paths, jobs);
    auto emb = [&](const RecordingMeta* r) -> const AcquireResult& { return embeddings[index.at(r->path.string())]; };

    for (auto& [key, subjects] : groups) {
        BaselineGroup g;
        g.device = key.first;
        g.language = key.second;
        g.subjects = subjects.size();
        std::vector<std::pair<const RecordingMeta*, std::size_t>> all;  // record, subject ordinal
        std::size_t ordinal = 0;
        for (auto& [id, recs] : subjects) {
            std::sort(recs.begin(), recs.end(), record_less);
            for (std::size_t i = 0; i < recs.size(); ++i) {
                all.emplace_back(recs[i], ordinal);
                for (std::size_t j = i + 1; j < recs.size(); ++j) {
                    if (const auto s = score_of(emb(recs[i]), emb(recs[j]))) {
                        g.scores.genuine.push_back(*s);
                    } else {
                        ++g.skipped_pairs;
                    }
                }
            }
            ++ordinal;
        }
        for (std::size_t i = 0; i < all.size(); ++i) {
            for (std::size_t j = i + 1; j < all.size(); ++j) {
                if (all[i].second == all[j].second) {
                    continue;
                }
                if (const auto s = score_of(emb(all[i].first), emb(all[j].first))) {
                    g.scores.impostor.push_back(*s);
                } else {
                    ++g.skipped_pairs;
                }
            }
        }
        if (g.scores.genuine.empty() || g.scores.impostor.empty()) {
            throw Error(ErrorKind::InsufficientData, "group " + g.device + "/" + g.language +
                                                         " has no usable genuine or impostor scores");
        }
        g.eer = eer(g.scores);
        g.threshold_at_target_fmr = threshold_at_fmr(g.scores, target_fmr);
        result.pooled.genuine.insert(result.pooled.genuine.end(), g.scores.genuine.begin(), g.scores.genuine.end());
        result.pooled.impostor.insert(result.pooled.impostor.end(), g.scores.impostor.begin(),
                                      g.scores.impostor.end());
        result.groups.push_back(std::move(g));
    }
    result.pooled_threshold_at_target_fmr = threshold_at_fmr(result.pooled, target_fmr);
    return result;
}

// ---------------------------------------------------------------------------

VulnerabilityResult run_vulnerability(const std::vector<MorphRecord>& morphs, const Manifest& corpus,
                                      const ProtocolConfig& cfg, const BackendSet& backends) {
    if (cfg.attempts < 1) {
        throw Error(ErrorKind::ConfigError, "attempts must be positive");
    }
    if (backends.empty()) {
        throw Error(ErrorKind::ConfigError, "at least one backend is required");
    }
    {
        std::set<std::string> names;
        for (const auto& b : backends) {
            if (!names.insert(b->descriptor().name).second) {
                throw Error(ErrorKind::ConfigError, "duplicate backend name " + b->descriptor().name);
            }
        }
    }

    using SubjectKey = std::tuple<std::string, std::string, std::string>;  // subject, device, language
    std::map<SubjectKey, std::vector<const RecordingMeta*>> by_subject;
    for (const auto& r : corpus.records) {
        by_subject[{r.subject_id, r.device, r.language}].push_back(&r);
    }
    for (auto& [key, recs] : by_subject) {
        std::sort(recs.begin(), recs.end(), record_less);
    }

    struct Planned {
        const MorphRecord* morph;
        std::array<std::vector<std::filesystem::path>, 2> probes;  // per contributor, one per attempt
    };

    VulnerabilityResult result;
    std::vector<Planned> plan;
    for (const auto& m : morphs) {
        Planned p{&m, {}};
        bool complete = true;
        const std::array<const std::string*, 2> subjects{&m.first_subject, &m.second_subject};
        for (std::size_t c = 0; c < 2; ++c) {
            std::vector<const RecordingMeta*> candidates;
            const auto it = by_subject.find({*subjects[c], m.device, m.language});
            if (it != by_subject.end()) {
                for (const auto* r : it->second) {
                    const bool same_sentence = r->sentence_id == m.sentence_id;
                    const bool wanted = cfg.mode == ProbeMode::TextDependent ? same_sentence : !same_sentence;
                    if (wanted && r->path != m.path) {
                        candidates.push_back(r);
                    }
                }
            }
            if (candidates.empty()) {
                result.exclusions.push_back(
                    {m.id(), *subjects[c],
                     cfg.mode == ProbeMode::TextDependent ? "no same-sentence probe recording"
                                                          : "no other-sentence probe recording"});
                complete = false;
                continue;
            }
            if (candidates.size() < static_cast<std::size_t>(cfg.attempts)) {
                result.notes.push_back(m.id() + ": " + *subjects[c] + " has " + std::to_string(candidates.size()) +
                                       " distinct probe recording(s) for " + std::to_string(cfg.attempts) +
                                       " attempts; reusing cyclically");
            }
            for (int a = 0; a < cfg.attempts; ++a) {
                p.probes[c].push_back(candidates[static_cast<std::size_t>(a) % candidates.size()]->path);
            }
        }
        if (complete) {
            plan.push_back(std::move(p));
        }
    }

    std::vector<std::filesystem::path> paths;
    std::unordered_map<std::string, std::size_t> index;
    auto intern = [&](const std::filesystem::path& p) {
        if (index.emplace(p.string(), paths.size()).second) {
            paths.push_back(p);
        }
    };
    for (const auto& p : plan) {
        intern(p.morph->path);
        for (const auto& probes : p.probes) {
            for (const auto& path : probes) {
                intern(path);
            }
        }
    }

    for (const auto& backend : backends) {
        const auto embeddings = embed_files(*backend, paths, cfg.jobs);
        const auto& name = backend->descriptor().name;
        for (const auto& p : plan) {
            const auto& enrolled = embeddings[index.at(p.morph->path.string())];
            for (int a = 0; a < cfg.attempts; ++a) {
                for (std::size_t c = 0; c < 2; ++c) {
                    const auto& probe = embeddings[index.at(p.probes[c][static_cast<std::size_t>(a)].string())];
                    TrialRow row;
                    row.morph_id = p.morph->id();
                    row.attack_type = p.morph->factor;
                    row.attempt = a + 1;
                    row.contributor = c == 0 ? Contributor::S1 : Contributor::S2;
                    row.backend = name;
                    row.score = score_of(enrolled, probe);
                    row.device = p.morph->device;
                    row.language = p.morph->language;
                    row.gender_pair = p.morph->gender_pair;
                    result.table.rows.push_back(std::move(row));
                }
            }
        }
    }
    sort_canonical(result.table);
    return result;
}

VulnerabilityResult run_vulnerability(const std::vector<MorphRecord>& morphs, const Manifest& corpus,
                                      const ProtocolConfig& cfg) {
    return run_vulnerability(morphs, corpus, cfg, make_backends(cfg.backends));
}

void write_exclusions(const std::vector<Exclusion>& exclusions, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    }
    out << "morph_id,contributor,reason\n";
    for (const auto& e : exclusions) {
        out << detail::csv_field(e.morph_id) << ',' << detail::csv_field(e.contributor) << ','
            << detail::csv_field(e.reason) << '\n';
    }
}

// ---------------------------------------------------------------------------

std::size_t HistogramSeries::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Histogram histogram_data(const ScoreSet& baseline, const TrialTable& trials, int bins) {
    if (bins < 2) {
        throw Error(ErrorKind::InvalidArgument, "histogram needs at least 2 bins");
    }
    if (baseline.genuine.empty() || baseline.impostor.empty()) {
        throw Error(ErrorKind::EmptyScores, "baseline genuine and impostor scores are required");
    }
    Histogram h;
    const auto nb = static_cast<std::size_t>(bins);
    for (std::size_t i = 0; i <= nb; ++i) {
        h.edges.push_back(-1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(bins));
    }
    auto bin_of = [&](double s) {
        const double u = (std::clamp(s, -1.0, 1.0) + 1.0) / 2.0;
        return std::min(nb - 1, static_cast<std::size_t>(u * static_cast<double>(bins)));
    };
    auto make = [&](std::string name, const std::vector<double>& scores) {
        HistogramSeries s{std::move(name), std::vector<std::size_t>(nb, 0)};
        for (const double x : scores) {
            ++s.counts[bin_of(x)];
        }
        return s;
    };

    h.series.push_back(make("genuine", baseline.genuine));
    h.series.push_back(make("impostor", baseline.impostor));
    std::size_t morph_scores = 0;
    for (const auto f : kAllFactors) {
        std::vector<double> scores;
        for (const auto& r : trials.rows) {
            if (r.attack_type == f && r.score) {
                scores.push_back(*r.score);
            }
        }
        morph_scores += scores.size();
        h.series.push_back(make(std::string(to_string(f)), scores));
    }
    if (morph_scores == 0) {
        throw Error(ErrorKind::EmptyScores, "no morph-vs-contributor scores to bin");
    }
    return h;
}

std::string histogram_to_csv(const Histogram& h) {
    std::ostringstream out;
    out << "bin_low,bin_high";
    for (const auto& s : h.series) {
        out << ',' << s.name;
    }
    out << '\n';
    for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
        out << detail::format_fixed(h.edges[b], 4) << ',' << detail::format_fixed(h.edges[b + 1], 4);
        for (const auto& s : h.series) {
            out << ',' << s.counts[b];
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace tdvim
