#include "tdvim/pipeline.hpp"

#include "tdvim/error.hpp"
#include "tdvim/metrics.hpp"
#include "tdvim/report.hpp"
#include "detail/csv.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace tdvim {

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    }
}

std::string file_safe(std::string_view name) {
    std::string out;
    for (const char c : name) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                          c == '_';
        out.push_back(keep ? c : '_');
    }
    return out;
}

std::string num(double v) {
    return detail::format_fixed(v, 6);
}

TrialTable filter(const TrialTable& t, const std::function<bool(const TrialRow&)>& keep) {
    TrialTable out;
    for (const auto& r : t.rows) {
        if (keep(r)) {
            out.rows.push_back(r);
        }
    }
    return out;
}

bool pair_matches(GenderPair gp, PairColumn col) {
    return col == PairColumn::Combined || (col == PairColumn::FF) == (gp == GenderPair::FF);
}

/// One cell per (factor, language, device, pair column) present in the table.
ResultGrid grid_of(const TrialTable& t, const std::function<double(const TrialTable&)>& value) {
    std::vector<std::string> languages;
    std::set<std::string> devices;
    for (const auto& r : t.rows) {
        if (std::find(languages.begin(), languages.end(), r.language) == languages.end()) {
            languages.push_back(r.language);
        }
        devices.insert(r.device);
    }
    ResultGrid g;
    for (const auto f : t.attack_types()) {
        for (const auto& lang : languages) {
            for (const auto& dev : devices) {
                for (const auto col : kPairColumns) {
                    const auto sub = filter(t, [&](const TrialRow& r) {
                        return r.attack_type == f && r.language == lang && r.device == dev &&
                               pair_matches(r.gender_pair, col);
                    });
                    if (!sub.rows.empty()) {
                        g.set(f, lang, dev, col, value(sub));
                    }
                }
            }
        }
    }
    return g;
}

class OutputLog {
public:
    explicit OutputLog(fs::path dir) : dir_(std::move(dir)) {}

    void text(const std::string& name, std::string_view content) {
        const auto p = dir_ / name;
        write_text_file(p, content);
        written_.push_back(p);
    }

    fs::path path(const std::string& name) {
        written_.push_back(dir_ / name);
        return dir_ / name;
    }

    std::vector<fs::path> take() { return std::move(written_); }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

void write_grid(OutputLog& log, const std::string& stem, const ResultGrid& g) {
    log.text(stem + ".csv", render_grid(g, GridFormat::Csv));
    log.text(stem + ".md", render_grid(g, GridFormat::Markdown));
}

}  // namespace

fs::path run_synth(const SynthRequest& req) {
    if (req.out.empty()) {
        throw Error(ErrorKind::ConfigError, "an output directory is required");
    }
    ensure_dir(req.out / "wav");
    auto m = synth_corpus(req.speakers, req.sentences, req.config, req.seed, req.out / "wav", req.jobs);
    const auto path = req.out / "manifest.csv";
    write_manifest(m, path);
    return path;
}

MorphRunSummary run_morph(const MorphRequest& req) {
    if (req.out.empty()) {
        throw Error(ErrorKind::ConfigError, "an output directory is required");
    }
    if (req.policy.factors.empty()) {
        throw Error(ErrorKind::ConfigError, "at least one morphing factor is required");
    }
    const auto m = load_manifest(req.manifest);
    const auto specs = generate_pairings(m, req.policy);
    if (specs.empty()) {
        throw Error(ErrorKind::ConfigError, "no same-gender pairs can be formed from " + req.manifest.string());
    }
    ensure_dir(req.out / "wav");
    const auto batch = batch_morph(specs, req.out / "wav", req.jobs);

    MorphRunSummary s;
    s.manifest = req.out / "morphs.csv";
    s.morphs = batch.records.size();
    s.failures = batch.failures.size();
    write_morph_manifest(batch.records, s.manifest);

    const auto failures_path = req.out / "morph_failures.csv";
    if (!batch.failures.empty()) {
        std::ostringstream out;
        out << "morph_id,message\n";
        for (const auto& f : batch.failures) {
            out << detail::csv_field(f.morph_id) << ',' << detail::csv_field(f.message) << '\n';
        }
        write_text_file(failures_path, out.str());
    } else {
        std::error_code ec;
        fs::remove(failures_path, ec);
    }
    return s;
}

EvaluateSummary run_evaluate(const EvaluateRequest& req) {
    if (req.out.empty()) {
        throw Error(ErrorKind::ConfigError, "an output directory is required");
    }
    if (req.attempts < 1) {
        throw Error(ErrorKind::ConfigError, "attempts must be positive");
    }
    if (!(req.target_fmr > 0.0 && req.target_fmr < 1.0)) {
        throw Error(ErrorKind::ConfigError, "target FMR must lie in (0, 1)");
    }
    if (req.backends.empty() || !fs::exists(req.backends)) {
        throw Error(ErrorKind::ConfigError, "backend config not found: " + req.backends.string());
    }
    const auto descriptors = load_backend_config(req.backends);
    const auto corpus = load_manifest(req.corpus);
    const auto morphs = load_morph_manifest(req.morphs);
    if (morphs.empty()) {
        throw Error(ErrorKind::ConfigError, "morph manifest is empty");
    }
    if (req.mode == ProbeMode::TextIndependent) {
        std::set<std::string> sentences;
        for (const auto& r : corpus.records) {
            sentences.insert(r.sentence_id);
        }
        if (sentences.size() < 2) {
            throw Error(ErrorKind::ConfigError, "text-independent probing needs at least two sentences");
        }
    }

    ensure_dir(req.out);
    OutputLog log(req.out);
    EvaluateSummary summary;

    const auto backends = make_backends(descriptors);

    // Baseline and operating thresholds, per backend.
    Thresholds thresholds;
    std::vector<BaselineResult> baselines;
    std::ostringstream baseline_csv;
    std::ostringstream threshold_csv;
    std::ostringstream scores_csv;
    scores_csv << "backend,device,language,kind,score\n";
    baseline_csv << "backend,device,language,subjects,genuine,impostor,eer_percent,eer_threshold,threshold_at_fmr,"
                    "skipped_pairs\n";
    threshold_csv << "backend,source,target_fmr,threshold\n";
    for (const auto& b : backends) {
        const auto& d = b->descriptor();
        const double target = d.fmr_target.value_or(req.target_fmr);
        auto base = run_baseline(corpus, *b, BaselineGrouping{}, target, req.jobs);
        for (const auto& g : base.groups) {
            baseline_csv << detail::csv_field(d.name) << ',' << detail::csv_field(g.device) << ','
                         << detail::csv_field(g.language) << ',' << g.subjects << ',' << g.scores.genuine.size()
                         << ',' << g.scores.impostor.size() << ',' << num(100.0 * g.eer.eer) << ','
                         << num(g.eer.threshold) << ',' << num(g.threshold_at_target_fmr) << ',' << g.skipped_pairs
                         << '\n';
            for (const auto& [kind, list] : {std::pair{"genuine", &g.scores.genuine},
                                             std::pair{"impostor", &g.scores.impostor}}) {
                for (const auto v : *list) {
                    scores_csv << detail::csv_field(d.name) << ',' << detail::csv_field(g.device) << ','
                               << detail::csv_field(g.language) << ',' << kind << ','
                               << detail::format_roundtrip(v) << '\n';
                }
            }
        }
        const double t = d.threshold.value_or(base.pooled_threshold_at_target_fmr);
        thresholds.emplace(d.name, t);
        threshold_csv << detail::csv_field(d.name) << ',' << (d.threshold ? "fixed" : "fmr") << ','
                      << (d.threshold ? std::string() : num(target)) << ',' << detail::format_roundtrip(t) << '\n';
        baselines.push_back(std::move(base));
    }
    log.text("baseline.csv", baseline_csv.str());
    log.text("baseline_scores.csv", scores_csv.str());
    log.text("thresholds.csv", threshold_csv.str());

    // Vulnerability protocol.
    ProtocolConfig cfg;
    cfg.mode = req.mode;
    cfg.attempts = req.attempts;
    cfg.backends = descriptors;
    cfg.jobs = req.jobs;
    auto vuln = run_vulnerability(morphs, corpus, cfg, backends);
    write_trial_table(vuln.table, log.path("trials.csv"));
    write_exclusions(vuln.exclusions, log.path("exclusions.csv"));
    {
        std::ostringstream notes;
        for (const auto& n : vuln.notes) {
            notes << n << '\n';
        }
        log.text("notes.txt", notes.str());
    }
    summary.trials = vuln.table.rows.size();
    summary.exclusions = vuln.exclusions.size();
    summary.notes = vuln.notes;
    if (vuln.table.rows.empty()) {
        throw Error(ErrorKind::InsufficientData, "every morph was excluded; no trials to score");
    }
    const auto& table = vuln.table;

    // Scalar metrics per backend and attack type.
    std::ostringstream metrics_csv;
    metrics_csv << "backend,attack_type,morphs,mmpmr,fmmpmr,gmap_multi_probe\n";
    for (const auto& b : table.backends()) {
        for (const auto f : table.attack_types()) {
            const auto sub = filter(table, [&](const TrialRow& r) { return r.backend == b && r.attack_type == f; });
            std::set<std::string> ids;
            for (const auto& r : sub.rows) {
                ids.insert(r.morph_id);
            }
            GmapConfig gc{thresholds, GmapCapacity::MultiProbe, {}};
            metrics_csv << detail::csv_field(b) << ',' << to_string(f) << ',' << ids.size() << ','
                        << num(mmpmr(sub, thresholds)) << ',' << num(fmmpmr(sub, thresholds)) << ','
                        << num(gmap(sub, gc)) << '\n';
        }
    }
    log.text("metrics.csv", metrics_csv.str());

    // G-MAP in each capacity.
    std::ostringstream gmap_csv;
    gmap_csv << "capacity,backend,device,value\n";
    for (const auto& b : table.backends()) {
        const auto sub = filter(table, [&](const TrialRow& r) { return r.backend == b; });
        GmapConfig gc{thresholds, GmapCapacity::MultiProbe, {}};
        gmap_csv << to_string(GmapCapacity::MultiProbe) << ',' << detail::csv_field(b) << ",*," << num(gmap(sub, gc))
                 << '\n';
        write_grid(log, "gmap_" + file_safe(b),
                   grid_of(sub, [&](const TrialTable& cell) { return gmap(cell, gc); }));
    }
    {
        GmapConfig gc{thresholds, GmapCapacity::MultiProbeMultiSvs, {}};
        gmap_csv << to_string(GmapCapacity::MultiProbeMultiSvs) << ",*,*," << num(gmap(table, gc)) << '\n';
        write_grid(log, "gmap_multi_svs", grid_of(table, [&](const TrialTable& cell) { return gmap(cell, gc); }));
    }
    std::map<std::string, double> full_per_device;
    {
        std::set<std::string> devices;
        for (const auto& r : table.rows) {
            devices.insert(r.device);
        }
        GmapConfig gc{thresholds, GmapCapacity::Full, {}};
        for (const auto& dev : devices) {
            const auto sub = filter(table, [&](const TrialRow& r) { return r.device == dev; });
            full_per_device[dev] = gmap(sub, gc);
            gmap_csv << to_string(GmapCapacity::Full) << ",*," << detail::csv_field(dev) << ','
                     << num(full_per_device[dev]) << '\n';
        }
    }
    log.text("gmap.csv", gmap_csv.str());
    const auto full = summarize_full_gmap(full_per_device);
    log.text("gmap_full.csv", render_summary(full, GridFormat::Csv));
    log.text("gmap_full.md", render_summary(full, GridFormat::Markdown));

    // MAP matrix over every backend.
    {
        const auto mm = map_matrix(table, thresholds);
        std::ostringstream out;
        out << "attempts";
        for (std::size_t c = 1; c <= mm.backends.size(); ++c) {
            out << ",fooled_ge_" << c;
        }
        out << '\n';
        for (std::size_t r = 0; r < mm.cells.size(); ++r) {
            out << (r + 1);
            for (const auto v : mm.cells[r]) {
                out << ',' << num(v);
            }
            out << '\n';
        }
        log.text("map.csv", out.str());
    }

    // Score distributions for the first backend.
    {
        const auto& first = baselines.front();
        const auto sub = filter(table, [&](const TrialRow& r) { return r.backend == first.backend; });
        const auto h = histogram_data(first.pooled, sub, req.bins);
        log.text("histogram.csv", histogram_to_csv(h));
        log.text("histogram.svg", histogram_svg(h));
    }

    summary.outputs = log.take();
    return summary;
}

}  // namespace tdvim
