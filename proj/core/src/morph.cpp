#include "tdvim/morph.hpp"

#include "tdvim/error.hpp"
#include "tdvim/parallel.hpp"
#include "detail/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace tdvim {

namespace {

// Numerator over 4: M25 -> 1, ..., M100 -> 4.
std::size_t quarters(MorphFactor f) noexcept {
    switch (f) {
        case MorphFactor::M25: return 1;
        case MorphFactor::M50: return 2;
        case MorphFactor::M75: return 3;
        case MorphFactor::M100: return 4;
    }
    return 4;
}

std::size_t parse_size(const std::string& text, std::string_view what, std::size_t line_no) {
    std::size_t value = 0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw Error(ErrorKind::ParseError,
                    "line " + std::to_string(line_no) + ": bad " + std::string(what) + " '" + text + "'");
    }
    return value;
}

}  // namespace

double proportion(MorphFactor f) noexcept {
    return static_cast<double>(quarters(f)) / 4.0;
}

std::string_view to_string(MorphFactor f) noexcept {
    switch (f) {
        case MorphFactor::M25: return "M25";
        case MorphFactor::M50: return "M50";
        case MorphFactor::M75: return "M75";
        case MorphFactor::M100: return "M100";
    }
    return "M100";
}

std::optional<MorphFactor> parse_factor(std::string_view text) {
    if (!text.empty() && (text.front() == 'M' || text.front() == 'm')) {
        text.remove_prefix(1);
    }
    if (text == "25") return MorphFactor::M25;
    if (text == "50") return MorphFactor::M50;
    if (text == "75") return MorphFactor::M75;
    if (text == "100") return MorphFactor::M100;
    return std::nullopt;
}

std::string_view to_string(MorphMode m) noexcept {
    return m == MorphMode::PortionAverage ? "portion" : "literal";
}

std::string_view to_string(GenderPair g) noexcept {
    return g == GenderPair::FF ? "FF" : "MM";
}

std::optional<GenderPair> parse_gender_pair(std::string_view text) {
    if (text == "FF" || text == "ff") return GenderPair::FF;
    if (text == "MM" || text == "mm") return GenderPair::MM;
    return std::nullopt;
}

std::optional<GenderMode> parse_gender_mode(std::string_view text) {
    if (text == "ff" || text == "FF") return GenderMode::FF;
    if (text == "mm" || text == "MM") return GenderMode::MM;
    if (text == "combined" || text == "Combined") return GenderMode::Combined;
    return std::nullopt;
}

std::string morph_id(const MorphSpec& spec) {
    std::string id = spec.first.subject_id + "_" + spec.second.subject_id + "_" +
                     std::string(to_string(spec.factor)) + "_" + spec.first.sentence_id + "_" + spec.first.device +
                     "_" + spec.first.language;
    if (spec.first.session != 1) {
        id += "_s" + std::to_string(spec.first.session);
    }
    return id;
}

std::size_t select_portion_length(std::size_t n2, MorphFactor factor) {
    return n2 * quarters(factor) / 4;
}

MorphResult morph(const AudioSignal& s1, const AudioSignal& s2, MorphFactor factor, MorphMode mode) {
    if (s1.empty() || s2.empty()) {
        throw Error(ErrorKind::EmptyAudio, "morph contributors must be non-empty");
    }
    const std::size_t p = select_portion_length(s2.size(), factor);
    const auto [a, b] = zero_pad_pair(s1, s2);
    const auto x = a.samples();
    const auto y = b.samples();
    const std::size_t len = x.size();

    std::vector<float> out(len);
    for (std::size_t i = 0; i < p; ++i) {
        out[i] = (x[i] + y[i]) / 2.0f;
    }
    if (mode == MorphMode::PortionAverage) {
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(p), x.end(), out.begin() + static_cast<std::ptrdiff_t>(p));
    } else {
        for (std::size_t i = p; i < len; ++i) {
            out[i] = x[i] / 2.0f;
        }
    }
    return {AudioSignal(std::move(out), s1.sample_rate()), p, len};
}

std::vector<MorphSpec> generate_pairings(const Manifest& m, const PairingPolicy& policy) {
    using CellKey = std::tuple<std::string, std::string, int, std::string>;
    std::map<CellKey, std::map<std::string, const RecordingMeta*>> cells;
    for (const auto& r : m.records) {
        if (policy.session && r.session != *policy.session) {
            continue;
        }
        cells[{r.device, r.language, r.session, r.sentence_id}].emplace(r.subject_id, &r);
    }

    std::vector<MorphFactor> factors = policy.factors;
    std::sort(factors.begin(), factors.end());
    factors.erase(std::unique(factors.begin(), factors.end()), factors.end());

    auto gender_allowed = [&](Gender g) {
        switch (policy.gender_mode) {
            case GenderMode::FF: return g == Gender::F;
            case GenderMode::MM: return g == Gender::M;
            case GenderMode::Combined: return true;
        }
        return false;
    };

    std::vector<MorphSpec> specs;
    for (const auto& [key, subjects] : cells) {
        for (const auto& [id1, r1] : subjects) {
            if (!gender_allowed(r1->gender)) {
                continue;
            }
            for (const auto& [id2, r2] : subjects) {
                if (id1 == id2 || r2->gender != r1->gender) {
                    continue;
                }
                for (const auto f : factors) {
                    specs.push_back({*r1, *r2, f, policy.mode});
                }
            }
        }
    }
    return specs;
}

BatchMorphResult batch_morph(const std::vector<MorphSpec>& specs, const std::filesystem::path& out_dir, int jobs) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorKind::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());
    }

    std::vector<std::optional<MorphRecord>> slots(specs.size());
    std::vector<std::string> errors(specs.size());
    parallel_for(specs.size(), jobs, [&](std::size_t i) {
        const auto& spec = specs[i];
        try {
            const auto s1 = read_wav(spec.first.path);
            const auto s2 = read_wav(spec.second.path);
            const auto result = morph(s1, s2, spec.factor, spec.mode);
            MorphRecord rec;
            rec.first_subject = spec.first.subject_id;
            rec.second_subject = spec.second.subject_id;
            rec.gender_pair = spec.gender_pair();
            rec.factor = spec.factor;
            rec.sentence_id = spec.first.sentence_id;
            rec.device = spec.first.device;
            rec.language = spec.first.language;
            rec.session = spec.first.session;
            rec.p = result.p;
            rec.padded_len = result.padded_len;
            rec.path = out_dir / (morph_id(spec) + ".wav");
            write_wav(result.signal, rec.path);
            slots[i] = std::move(rec);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    BatchMorphResult out;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (slots[i]) {
            out.records.push_back(std::move(*slots[i]));
        } else {
            out.failures.push_back({i, morph_id(specs[i]), errors[i]});
        }
    }
    return out;
}

void write_morph_manifest(const std::vector<MorphRecord>& records, const std::filesystem::path& path) {
    const auto base = std::filesystem::absolute(path.parent_path().empty() ? "." : path.parent_path());
    std::ostringstream out;
    out << kMorphManifestHeader << '\n';
    for (const auto& r : records) {
        auto stored = std::filesystem::absolute(r.path).lexically_normal().lexically_relative(base.lexically_normal());
        if (stored.empty() || *stored.begin() == "..") {
            stored = std::filesystem::absolute(r.path).lexically_normal();
        }
        out << detail::csv_field(r.first_subject) << ',' << detail::csv_field(r.second_subject) << ','
            << to_string(r.gender_pair) << ',' << to_string(r.factor) << ',' << detail::csv_field(r.sentence_id)
            << ',' << detail::csv_field(r.device) << ',' << detail::csv_field(r.language) << ',' << r.session
            << ',' << r.p << ',' << r.padded_len << ',' << detail::csv_field(stored.generic_string()) << '\n';
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    }
    file << out.str();
}

std::vector<MorphRecord> load_morph_manifest(const std::filesystem::path& path) {
    const auto lines = detail::split_lines(detail::read_text_file(path.string()));
    if (lines.empty() || lines.front() != kMorphManifestHeader) {
        throw Error(ErrorKind::ParseError, path.string() + ": expected header '" +
                                               std::string(kMorphManifestHeader) + "'");
    }
    std::vector<MorphRecord> out;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const auto f = detail::split_csv_line(lines[ln]);
        if (f.size() != 11) {
            throw Error(ErrorKind::ParseError, path.string() + ": line " + std::to_string(ln + 1) +
                                                   " has " + std::to_string(f.size()) + " fields");
        }
        MorphRecord r;
        r.first_subject = f[0];
        r.second_subject = f[1];
        const auto gp = parse_gender_pair(f[2]);
        const auto factor = parse_factor(f[3]);
        if (!gp || !factor) {
            throw Error(ErrorKind::ParseError, path.string() + ": line " + std::to_string(ln + 1) +
                                                   ": bad gender_pair or factor");
        }
        r.gender_pair = *gp;
        r.factor = *factor;
        r.sentence_id = f[4];
        r.device = f[5];
        r.language = f[6];
        r.session = static_cast<int>(parse_size(f[7], "session", ln + 1));
        r.p = parse_size(f[8], "p", ln + 1);
        r.padded_len = parse_size(f[9], "padded_len", ln + 1);
        std::filesystem::path p = f[10];
        r.path = p.is_absolute() ? p : (path.parent_path() / p).lexically_normal();
        if (r.p > r.padded_len) {
            throw Error(ErrorKind::ParseError, path.string() + ": line " + std::to_string(ln + 1) +
                                                   ": p exceeds padded_len");
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace tdvim
