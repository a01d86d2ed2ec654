#include "tdvim/corpus.hpp"

#include "tdvim/error.hpp"
#include "detail/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace tdvim {

namespace {

constexpr std::array<std::string_view, 8> kColumns = {
    "subject_id", "gender", "device", "language", "session", "sentence_id", "path", "sample_rate"};

int parse_positive_int(const std::string& text, std::string_view what, std::size_t line_no) {
    int value = 0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end || value <= 0) {
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " +
                                               std::string(what) + " must be a positive integer, got '" +
                                               text + "'");
    }
    return value;
}

std::filesystem::path relative_if_inside(const std::filesystem::path& p, const std::filesystem::path& base) {
    const auto abs_p = std::filesystem::absolute(p).lexically_normal();
    const auto abs_base = std::filesystem::absolute(base).lexically_normal();
    const auto rel = abs_p.lexically_relative(abs_base);
    if (rel.empty() || *rel.begin() == "..") {
        return abs_p;
    }
    return rel;
}

}  // namespace

std::string_view to_string(Gender g) {
    return g == Gender::F ? "F" : "M";
}

std::optional<Gender> parse_gender(std::string_view text) {
    if (text == "F" || text == "f") {
        return Gender::F;
    }
    if (text == "M" || text == "m") {
        return Gender::M;
    }
    return std::nullopt;
}

Manifest parse_manifest(std::string_view csv_text, const std::filesystem::path& base_dir, std::string name) {
    const auto lines = detail::split_lines(csv_text);
    if (lines.empty()) {
        throw Error(ErrorKind::ParseError, "manifest has no header");
    }
    const auto header = detail::split_csv_line(lines.front());
    std::array<std::size_t, kColumns.size()> index{};
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        const auto it = std::find_if(header.begin(), header.end(),
                                     [&](const std::string& h) { return detail::trim(h) == kColumns[c]; });
        if (it == header.end()) {
            throw Error(ErrorKind::ParseError, "manifest header is missing column '" +
                                                   std::string(kColumns[c]) + "'");
        }
        index[c] = static_cast<std::size_t>(it - header.begin());
    }

    Manifest m;
    m.name = std::move(name);
    using Key = std::tuple<std::string, std::string, std::string, int, std::string>;
    std::set<Key> seen;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (detail::trim(lines[ln]).empty()) {
            continue;
        }
        const auto fields = detail::split_csv_line(lines[ln]);
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::ParseError, "line " + std::to_string(ln + 1) + ": expected " +
                                                   std::to_string(header.size()) + " fields, got " +
                                                   std::to_string(fields.size()));
        }
        auto field = [&](std::size_t c) { return detail::trim(fields[index[c]]); };

        RecordingMeta r;
        r.subject_id = field(0);
        const auto gender = parse_gender(field(1));
        if (!gender) {
            throw Error(ErrorKind::ParseError, "line " + std::to_string(ln + 1) + ": gender must be F or M");
        }
        r.gender = *gender;
        r.device = field(2);
        r.language = field(3);
        r.session = parse_positive_int(field(4), "session", ln + 1);
        r.sentence_id = field(5);
        std::filesystem::path p = field(6);
        r.path = p.is_absolute() ? p : (base_dir / p).lexically_normal();
        r.sample_rate = parse_positive_int(field(7), "sample_rate", ln + 1);
        if (r.subject_id.empty() || r.sentence_id.empty() || field(6).empty()) {
            throw Error(ErrorKind::ParseError, "line " + std::to_string(ln + 1) + ": empty required field");
        }

        Key key{r.subject_id, r.device, r.language, r.session, r.sentence_id};
        if (!seen.insert(key).second) {
            throw Error(ErrorKind::DuplicateKey,
                        "line " + std::to_string(ln + 1) + ": duplicate recording for subject " + r.subject_id +
                            " device " + r.device + " language " + r.language + " session " +
                            std::to_string(r.session) + " sentence " + r.sentence_id);
        }
        m.records.push_back(std::move(r));
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    const std::string text = detail::read_text_file(path.string());
    return parse_manifest(text, path.parent_path(), path.stem().string());
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
    const auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
    std::ostringstream out;
    out << kManifestHeader << '\n';
    for (const auto& r : m.records) {
        out << detail::csv_field(r.subject_id) << ',' << to_string(r.gender) << ','
            << detail::csv_field(r.device) << ',' << detail::csv_field(r.language) << ',' << r.session << ','
            << detail::csv_field(r.sentence_id) << ','
            << detail::csv_field(relative_if_inside(r.path, base).generic_string()) << ',' << r.sample_rate
            << '\n';
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    }
    file << out.str();
}

ValidationReport validate_manifest(const Manifest& m) {
    ValidationReport report;
    if (m.records.empty()) {
        report.usable = false;
        report.notes.push_back("manifest is empty");
        return report;
    }

    std::map<std::pair<std::string, std::string>, std::set<int>> rates;
    std::map<std::string, Gender> subjects;
    for (const auto& r : m.records) {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(r.path, ec)) {
            report.missing_files.push_back(r.path);
        }
        rates[{r.device, r.language}].insert(r.sample_rate);
        const auto [it, inserted] = subjects.emplace(r.subject_id, r.gender);
        if (!inserted && it->second != r.gender) {
            report.notes.push_back("subject " + r.subject_id + " listed with both genders");
        }
    }
    for (const auto& [group, set] : rates) {
        if (set.size() > 1) {
            report.sample_rate_conflicts.push_back({group.first, group.second, {set.begin(), set.end()}});
        }
    }

    std::map<Gender, int> per_gender;
    for (const auto& [id, g] : subjects) {
        ++per_gender[g];
    }
    for (const auto& [id, g] : subjects) {
        if (per_gender[g] < 2) {
            report.unpairable_subjects.push_back(id);
        }
    }
    if (subjects.size() - report.unpairable_subjects.size() < 2) {
        report.usable = false;
        report.notes.push_back("no same-gender pair available for morphing");
    }
    return report;
}

// ---------------------------------------------------------------------------

SynthConfig parse_synth_config(std::string_view text) {
    SynthConfig cfg;
    for (const auto& raw : detail::split_lines(text)) {
        std::string line = raw.substr(0, raw.find('#'));
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::ConfigError, "expected key=value, got '" + line + "'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        auto number = [&]() {
            try {
                std::size_t used = 0;
                const double v = std::stod(value, &used);
                if (used != value.size()) {
                    throw std::invalid_argument(value);
                }
                return v;
            } catch (const std::exception&) {
                throw Error(ErrorKind::ConfigError, key + " expects a number, got '" + value + "'");
            }
        };
        if (key == "duration_s") {
            cfg.duration_s = number();
        } else if (key == "sample_rate") {
            cfg.sample_rate = static_cast<int>(number());
        } else if (key == "noise_floor") {
            cfg.noise_floor = number();
        } else if (key == "sessions") {
            cfg.sessions = static_cast<int>(number());
        } else if (key == "device") {
            cfg.device = value;
        } else if (key == "language") {
            cfg.language = value;
        } else {
            throw Error(ErrorKind::ConfigError, "unknown synth config key '" + key + "'");
        }
    }
    if (!(cfg.duration_s > 0.1) || cfg.sample_rate < 4000 || !(cfg.noise_floor >= 0.0 && cfg.noise_floor < 0.5) ||
        cfg.sessions < 1 || cfg.device.empty() || cfg.language.empty()) {
        throw Error(ErrorKind::ConfigError, "synth config value out of range");
    }
    return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error(ErrorKind::ConfigError, "synth config not found: " + path.string());
    }
    return parse_synth_config(detail::read_text_file(path.string()));
}

}  // namespace tdvim
