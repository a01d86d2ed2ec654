#include "tdvim/error.hpp"
#include "tdvim/parallel.hpp"
#include "tdvim/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : text) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

int exit_code_for(const tdvim::Error& e) {
    switch (e.kind()) {
        case tdvim::ErrorKind::ConfigError:
        case tdvim::ErrorKind::InvalidArgument:
            return 2;
        default:
            return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-domain voice morphing and vulnerability evaluation"};
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    int jobs = tdvim::default_jobs();
    std::string out;
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "Output directory");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    int speakers = 6;
    std::string sentences = "S1,S2,S3";
    std::string synth_config;
    synth->add_option("--speakers", speakers, "Number of speakers")->capture_default_str();
    synth->add_option("--sentences", sentences, "Comma-separated sentence ids")->capture_default_str();
    synth->add_option("--config", synth_config, "key=value synthesis config file");
    synth->add_option("--seed", seed, "Random seed");
    synth->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    synth->add_option("--out", out, "Output directory");

    // morph
    auto* morph = app.add_subcommand("morph", "Generate morphs from a corpus manifest");
    std::string manifest;
    std::string gender_mode = "combined";
    std::string factors = "M25,M50,M75,M100";
    std::string mode = "portion";
    int session = 0;
    morph->add_option("--manifest", manifest, "Corpus manifest CSV")->required();
    morph->add_option("--gender-mode", gender_mode, "ff, mm or combined")->capture_default_str();
    morph->add_option("--factors", factors, "Comma-separated factors")->capture_default_str();
    morph->add_option("--mode", mode, "portion or literal")->capture_default_str();
    morph->add_option("--session", session, "Only morph recordings from this session");
    morph->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    morph->add_option("--out", out, "Output directory");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Baseline, vulnerability run, metrics and reports");
    std::string corpus;
    std::string morphs;
    std::string backends;
    std::string probe_mode = "td";
    int attempts = 3;
    double target_fmr = 0.001;
    int bins = 40;
    evaluate->add_option("--corpus", corpus, "Corpus manifest CSV")->required();
    evaluate->add_option("--morphs", morphs, "Morph manifest CSV")->required();
    evaluate->add_option("--backends", backends, "Backend config file")->required();
    evaluate->add_option("--mode", probe_mode, "td or ti")->capture_default_str();
    evaluate->add_option("--attempts", attempts, "Probe attempts per contributor")->capture_default_str();
    evaluate->add_option("--fmr", target_fmr, "Default FMR target for derived thresholds")->capture_default_str();
    evaluate->add_option("--bins", bins, "Histogram bins")->capture_default_str();
    evaluate->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    evaluate->add_option("--out", out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (out.empty()) {
            throw tdvim::Error(tdvim::ErrorKind::ConfigError, "--out is required");
        }
        if (*synth) {
            tdvim::SynthRequest req;
            req.speakers = speakers;
            req.sentences = split_list(sentences);
            if (!synth_config.empty()) {
                req.config = tdvim::load_synth_config(synth_config);
            }
            req.seed = seed;
            req.out = out;
            req.jobs = jobs;
            std::cout << tdvim::run_synth(req).string() << '\n';
        } else if (*morph) {
            tdvim::MorphRequest req;
            req.manifest = manifest;
            req.out = out;
            req.jobs = jobs;
            const auto gm = tdvim::parse_gender_mode(gender_mode);
            if (!gm) {
                throw tdvim::Error(tdvim::ErrorKind::ConfigError, "unknown gender mode '" + gender_mode + "'");
            }
            req.policy.gender_mode = *gm;
            req.policy.factors.clear();
            for (const auto& tok : split_list(factors)) {
                const auto f = tdvim::parse_factor(tok);
                if (!f) {
                    throw tdvim::Error(tdvim::ErrorKind::ConfigError, "unknown morphing factor '" + tok + "'");
                }
                req.policy.factors.push_back(*f);
            }
            if (mode == "portion") {
                req.policy.mode = tdvim::MorphMode::PortionAverage;
            } else if (mode == "literal") {
                req.policy.mode = tdvim::MorphMode::LiteralHalving;
            } else {
                throw tdvim::Error(tdvim::ErrorKind::ConfigError, "unknown morph mode '" + mode + "'");
            }
            if (session > 0) {
                req.policy.session = session;
            }
            const auto s = tdvim::run_morph(req);
            if (s.failures > 0) {
                std::cerr << s.failures << " morphs failed; see morph_failures.csv\n";
            }
            std::cout << s.manifest.string() << '\n';
            return s.failures > 0 ? 1 : 0;
        } else if (*evaluate) {
            tdvim::EvaluateRequest req;
            req.corpus = corpus;
            req.morphs = morphs;
            req.backends = backends;
            if (probe_mode == "td") {
                req.mode = tdvim::ProbeMode::TextDependent;
            } else if (probe_mode == "ti") {
                req.mode = tdvim::ProbeMode::TextIndependent;
            } else {
                throw tdvim::Error(tdvim::ErrorKind::ConfigError, "unknown probe mode '" + probe_mode + "'");
            }
            req.attempts = attempts;
            req.target_fmr = target_fmr;
            req.bins = bins;
            req.out = out;
            req.jobs = jobs;
            const auto s = tdvim::run_evaluate(req);
            if (!s.notes.empty()) {
                std::cerr << s.notes.size() << " probe notes written to notes.txt\n";
            }
            for (const auto& p : s.outputs) {
                std::cout << p.string() << '\n';
            }
        }
    } catch (const tdvim::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
