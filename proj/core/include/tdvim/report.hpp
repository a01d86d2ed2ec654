#pragma once

#include "tdvim/evaluation.hpp"
#include "tdvim/morph.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tdvim {

enum class PairColumn { FF, MM, Combined };

inline constexpr std::array<PairColumn, 3> kPairColumns{PairColumn::FF, PairColumn::MM, PairColumn::Combined};

std::string_view to_string(PairColumn c) noexcept;

/// Percentages laid out as (attack type, language) rows against
/// (device, gender pair) columns. Missing cells render as an em dash.
class ResultGrid {
public:
    /// Throws Error(InvalidArgument) unless 0 <= value <= 100.
    void set(MorphFactor factor, const std::string& language, const std::string& device, PairColumn pair,
             double value);

    std::optional<double> get(MorphFactor factor, const std::string& language, const std::string& device,
                              PairColumn pair) const;

    /// Languages in first-insertion order.
    const std::vector<std::string>& languages() const noexcept { return languages_; }
    /// Factors present, ascending.
    std::vector<MorphFactor> factors() const;
    /// Devices present, sorted case-insensitively.
    std::vector<std::string> devices() const;
    bool empty() const noexcept { return values_.empty(); }

private:
    using Key = std::tuple<MorphFactor, std::string, std::string, PairColumn>;
    std::map<Key, double> values_;
    std::vector<std::string> languages_;
};

enum class GridFormat { Csv, Markdown };

inline constexpr std::string_view kAbsentCell = "\xE2\x80\x94";  // U+2014

std::string render_grid(const ResultGrid& g, GridFormat format);

/// Reads the CSV produced by render_grid back into a grid.
ResultGrid parse_grid_csv(std::string_view text);

/// Device -> full-capacity G-MAP, one value per device.
struct FullGmapSummary {
    std::vector<std::pair<std::string, double>> devices;  // sorted case-insensitively
};

/// Throws Error(InvalidArgument) for values outside [0, 100].
FullGmapSummary summarize_full_gmap(const std::map<std::string, double>& per_device);

std::string render_summary(const FullGmapSummary& s, GridFormat format);

/// Standalone SVG 1.1 with one translucent bar layer per series, heights
/// scaled to each series' relative frequency, and a legend.
std::string histogram_svg(const Histogram& h);
void render_histogram_svg(const Histogram& h, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace tdvim
