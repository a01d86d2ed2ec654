#pragma once

#include "tdvim/report.hpp"

#include <array>

namespace tdvim::testing {

struct PublishedRow {
    MorphFactor factor;
    const char* language;
    std::array<double, 6> values;  // iPhone11 FF/MM/Combined, SamsungS8 FF/MM/Combined
};

// x-vector G-MAP with multiple probe attempts, as published.
inline constexpr PublishedRow kXvector[] = {
    {MorphFactor::M25, "English", {23.76, 24.74, 48.54, 67.36, 68.16, 67.76}},
    {MorphFactor::M25, "Hindi", {23.78, 24.80, 48.58, 69.73, 69.36, 69.54}},
    {MorphFactor::M25, "Bengali", {22.20, 23.69, 45.89, 67.37, 68.26, 67.81}},
    {MorphFactor::M50, "English", {25.79, 26.78, 52.57, 68.34, 69.87, 69.10}},
    {MorphFactor::M50, "Hindi", {24.67, 25.69, 50.36, 69.44, 69.35, 69.39}},
    {MorphFactor::M50, "Bengali", {23.59, 25.45, 49.04, 69.87, 68.36, 69.11}},
    {MorphFactor::M75, "English", {27.17, 28.62, 52.57, 68.19, 68.25, 68.57}},
    {MorphFactor::M75, "Hindi", {26.79, 26.58, 53.37, 68.69, 68.45, 68.57}},
    {MorphFactor::M75, "Bengali", {24.02, 26.58, 50.60, 69.20, 69.12, 69.16}},
    {MorphFactor::M100, "English", {29.12, 29.34, 58.46, 56.14, 56.74, 56.44}},
    {MorphFactor::M100, "Hindi", {27.79, 28.67, 56.34, 57.64, 57.99, 57.81}},
    {MorphFactor::M100, "Bengali", {25.78, 27.96, 53.71, 59.85, 59.14, 59.49}},
};

inline ResultGrid xvector_grid() {
    ResultGrid g;
    for (const auto& r : kXvector) {
        for (std::size_t i = 0; i < 6; ++i) {
            g.set(r.factor, r.language, i < 3 ? "iPhone11" : "SamsungS8", kPairColumns[i % 3], r.values[i]);
        }
    }
    return g;
}

}  // namespace tdvim::testing
