#include "tdvim/report.hpp"

#include "tdvim/error.hpp"
#include "detail/csv.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace tdvim {

namespace {

constexpr double kSvgWidth = 720.0;
constexpr double kSvgHeight = 420.0;
constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 160.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 50.0;

std::string_view series_colour(std::string_view name) {
    if (name == "genuine") return "#2ca02c";
    if (name == "impostor") return "#6baed6";
    if (name == "M25") return "#ff7f0e";
    if (name == "M50") return "#d62728";
    if (name == "M75") return "#9467bd";
    if (name == "M100") return "#8c564b";
    return "#7f7f7f";
}

std::string fmt(double v) {
    return detail::format_fixed(v, 2);
}

// Case-insensitive, so "iPhone11" sorts before "SamsungS8".
bool device_less(const std::string& a, const std::string& b) {
    const auto lower = [](std::string s) {
        for (auto& c : s) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
        return s;
    };
    const auto la = lower(a);
    const auto lb = lower(b);
    return la != lb ? la < lb : a < b;
}

std::optional<PairColumn> parse_pair_column(std::string_view s) {
    if (s == "FF") return PairColumn::FF;
    if (s == "MM") return PairColumn::MM;
    if (s == "Combined") return PairColumn::Combined;
    return std::nullopt;
}

}  // namespace

std::string_view to_string(PairColumn c) noexcept {
    switch (c) {
        case PairColumn::FF: return "FF";
        case PairColumn::MM: return "MM";
        case PairColumn::Combined: return "Combined";
    }
    return "Combined";
}

void ResultGrid::set(MorphFactor factor, const std::string& language, const std::string& device, PairColumn pair,
                     double value) {
    if (!(value >= 0.0 && value <= 100.0)) {
        throw Error(ErrorKind::InvalidArgument, "grid values must lie in [0, 100], got " + fmt(value));
    }
    if (std::find(languages_.begin(), languages_.end(), language) == languages_.end()) {
        languages_.push_back(language);
    }
    values_[{factor, language, device, pair}] = value;
}

std::optional<double> ResultGrid::get(MorphFactor factor, const std::string& language, const std::string& device,
                                      PairColumn pair) const {
    const auto it = values_.find({factor, language, device, pair});
    if (it == values_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<MorphFactor> ResultGrid::factors() const {
    std::set<MorphFactor> out;
    for (const auto& [key, v] : values_) {
        out.insert(std::get<0>(key));
    }
    return {out.begin(), out.end()};
}

std::vector<std::string> ResultGrid::devices() const {
    std::set<std::string> unique;
    for (const auto& [key, v] : values_) {
        unique.insert(std::get<2>(key));
    }
    std::vector<std::string> out(unique.begin(), unique.end());
    std::sort(out.begin(), out.end(), device_less);
    return out;
}

std::string render_grid(const ResultGrid& g, GridFormat format) {
    const auto devices = g.devices();
    std::vector<std::string> header;
    for (const auto& d : devices) {
        for (const auto c : kPairColumns) {
            header.push_back(d + (format == GridFormat::Csv ? "/" : " ") + std::string(to_string(c)));
        }
    }

    std::ostringstream out;
    if (format == GridFormat::Csv) {
        out << "factor,language";
        for (const auto& h : header) {
            out << ',' << detail::csv_field(h);
        }
        out << '\n';
    } else {
        out << "| Morphing factor | Language |";
        for (const auto& h : header) {
            out << ' ' << h << " |";
        }
        out << "\n|---|---|";
        for (std::size_t i = 0; i < header.size(); ++i) {
            out << "---:|";
        }
        out << '\n';
    }

    for (const auto f : g.factors()) {
        for (const auto& lang : g.languages()) {
            bool any = false;
            for (const auto& d : devices) {
                for (const auto c : kPairColumns) {
                    any = any || g.get(f, lang, d, c).has_value();
                }
            }
            if (!any) {
                continue;
            }
            std::vector<std::string> cells;
            for (const auto& d : devices) {
                for (const auto c : kPairColumns) {
                    const auto v = g.get(f, lang, d, c);
                    cells.push_back(v ? fmt(*v) : std::string(kAbsentCell));
                }
            }
            if (format == GridFormat::Csv) {
                out << to_string(f) << ',' << detail::csv_field(lang);
                for (const auto& c : cells) {
                    out << ',' << c;
                }
                out << '\n';
            } else {
                out << "| " << to_string(f) << " | " << lang << " |";
                for (const auto& c : cells) {
                    out << ' ' << c << " |";
                }
                out << '\n';
            }
        }
    }
    return out.str();
}

ResultGrid parse_grid_csv(std::string_view text) {
    const auto lines = detail::split_lines(text);
    if (lines.empty()) {
        throw Error(ErrorKind::ParseError, "grid CSV is empty");
    }
    const auto header = detail::split_csv_line(lines.front());
    if (header.size() < 2 || header[0] != "factor" || header[1] != "language") {
        throw Error(ErrorKind::ParseError, "grid CSV must start with factor,language");
    }
    std::vector<std::pair<std::string, PairColumn>> columns;
    for (std::size_t i = 2; i < header.size(); ++i) {
        const auto slash = header[i].rfind('/');
        const auto pair = slash == std::string::npos ? std::nullopt : parse_pair_column(header[i].substr(slash + 1));
        if (!pair) {
            throw Error(ErrorKind::ParseError, "bad grid column '" + header[i] + "'");
        }
        columns.emplace_back(header[i].substr(0, slash), *pair);
    }
    ResultGrid g;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const auto f = detail::split_csv_line(lines[ln]);
        const auto factor = f.empty() ? std::nullopt : parse_factor(f[0]);
        if (f.size() != header.size() || !factor) {
            throw Error(ErrorKind::ParseError, "bad grid row " + std::to_string(ln + 1));
        }
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto& cell = f[c + 2];
            if (cell == kAbsentCell) {
                continue;
            }
            try {
                g.set(*factor, f[1], columns[c].first, columns[c].second, std::stod(cell));
            } catch (const std::invalid_argument&) {
                throw Error(ErrorKind::ParseError, "bad grid value '" + cell + "'");
            }
        }
    }
    return g;
}

FullGmapSummary summarize_full_gmap(const std::map<std::string, double>& per_device) {
    FullGmapSummary s;
    for (const auto& [device, value] : per_device) {
        if (!(value >= 0.0 && value <= 100.0)) {
            throw Error(ErrorKind::InvalidArgument, "G-MAP for " + device + " outside [0, 100]");
        }
        s.devices.emplace_back(device, value);
    }
    std::sort(s.devices.begin(), s.devices.end(),
              [](const auto& a, const auto& b) { return device_less(a.first, b.first); });
    return s;
}

std::string render_summary(const FullGmapSummary& s, GridFormat format) {
    std::ostringstream out;
    if (format == GridFormat::Csv) {
        for (std::size_t i = 0; i < s.devices.size(); ++i) {
            out << (i ? "," : "") << detail::csv_field(s.devices[i].first);
        }
        out << '\n';
        for (std::size_t i = 0; i < s.devices.size(); ++i) {
            out << (i ? "," : "") << fmt(s.devices[i].second);
        }
        out << '\n';
        return out.str();
    }
    out << "| G-MAP (%) |";
    for (std::size_t i = 1; i < s.devices.size(); ++i) {
        out << " |";
    }
    out << "\n|";
    for (std::size_t i = 0; i < std::max<std::size_t>(1, s.devices.size()); ++i) {
        out << "---:|";
    }
    out << "\n|";
    for (const auto& [device, v] : s.devices) {
        out << ' ' << device << " |";
    }
    out << "\n|";
    for (const auto& [device, v] : s.devices) {
        out << ' ' << fmt(v) << " |";
    }
    out << '\n';
    return out.str();
}

std::string histogram_svg(const Histogram& h) {
    if (h.series.empty() || h.edges.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "histogram needs at least one series and one bin");
    }
    const std::size_t bins = h.edges.size() - 1;
    const double plot_w = kSvgWidth - kMarginLeft - kMarginRight;
    const double plot_h = kSvgHeight - kMarginTop - kMarginBottom;
    const double x0 = kMarginLeft;
    const double y0 = kMarginTop + plot_h;
    const double lo = h.edges.front();
    const double hi = h.edges.back();
    auto xpos = [&](double v) { return x0 + plot_w * (v - lo) / (hi - lo); };

    double peak = 0.0;
    for (const auto& s : h.series) {
        const auto total = s.total();
        for (const auto c : s.counts) {
            if (total > 0) {
                peak = std::max(peak, static_cast<double>(c) / static_cast<double>(total));
            }
        }
    }

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(kSvgWidth) << "\" height=\""
        << fmt(kSvgHeight) << "\" viewBox=\"0 0 " << fmt(kSvgWidth) << ' ' << fmt(kSvgHeight) << "\">\n"
        << "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" << fmt(kSvgWidth) << "\" height=\""
        << fmt(kSvgHeight) << "\" fill=\"#ffffff\"/>\n"
        << "<g class=\"axes\" stroke=\"#000000\" stroke-width=\"1\">\n"
        << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0 + plot_w) << "\" y2=\""
        << fmt(y0) << "\"/>\n"
        << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0) << "\" y2=\""
        << fmt(kMarginTop) << "\"/>\n"
        << "</g>\n"
        << "<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        out << "<text x=\"" << fmt(xpos(v)) << "\" y=\"" << fmt(y0 + 16.0) << "\">" << fmt(v) << "</text>\n";
    }
    out << "</g>\n"
        << "<text x=\"" << fmt(x0 + plot_w / 2.0) << "\" y=\"" << fmt(kSvgHeight - 10.0)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">cosine similarity</text>\n"
        << "<text x=\"16\" y=\"" << fmt(kMarginTop + plot_h / 2.0)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << fmt(kMarginTop + plot_h / 2.0) << ")\">relative frequency</text>\n";

    for (const auto& s : h.series) {
        const auto total = s.total();
        out << "<g class=\"series\" data-name=\"" << s.name << "\" fill=\"" << series_colour(s.name)
            << "\" fill-opacity=\"0.45\">\n";
        if (total > 0 && peak > 0.0) {
            for (std::size_t b = 0; b < bins && b < s.counts.size(); ++b) {
                if (s.counts[b] == 0) {
                    continue;
                }
                const double freq = static_cast<double>(s.counts[b]) / static_cast<double>(total);
                const double bar_h = plot_h * freq / peak;
                const double x = xpos(h.edges[b]);
                const double w = xpos(h.edges[b + 1]) - x;
                out << "<rect class=\"bar\" x=\"" << fmt(x) << "\" y=\"" << fmt(y0 - bar_h) << "\" width=\""
                    << fmt(w) << "\" height=\"" << fmt(bar_h) << "\"/>\n";
            }
        }
        out << "</g>\n";
    }

    out << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t i = 0; i < h.series.size(); ++i) {
        const double ly = kMarginTop + 10.0 + 20.0 * static_cast<double>(i);
        const double lx = kSvgWidth - kMarginRight + 20.0;
        out << "<rect class=\"swatch\" x=\"" << fmt(lx) << "\" y=\"" << fmt(ly - 10.0)
            << "\" width=\"12\" height=\"12\" fill=\"" << series_colour(h.series[i].name)
            << "\" fill-opacity=\"0.45\"/>\n"
            << "<text x=\"" << fmt(lx + 18.0) << "\" y=\"" << fmt(ly) << "\">" << h.series[i].name << "</text>\n";
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
    }
}

void render_histogram_svg(const Histogram& h, const std::filesystem::path& path) {
    write_text_file(path, histogram_svg(h));
}

}  // namespace tdvim
