#pragma once

#include <string>
#include <vector>

#include "uma/mc.hpp"
#include "uma/optimizer.hpp"

// Flat key-value configuration with sectioned namespaces (system., scenario.,
// mc.). dB-valued keys carry a _db suffix. Parsing never throws: problems
// come back as an aggregated error list with the offending key named.

namespace uma {

enum class FigurePreset { fig3, fig4, fig5, fig6, fig7, fig8, custom };

struct ExperimentSpec {
    SystemConfig system;
    ScenarioConfig scenario;
    McSettings mc;
    std::string output_dir = "out";
    std::string cache_dir;
    FigurePreset figure = FigurePreset::custom;
};

struct ConfigParseResult {
    ExperimentSpec spec;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

// Parse + validate raw configuration text.
ConfigParseResult validate_config(const std::string& raw);

// Round-trip emission in the same flat format (stable key order).
std::string serialize_config(const ExperimentSpec& spec);

// Built-in preset text for a figure (the paper-scale sweep grids).
std::string preset_config_text(FigurePreset preset);

const char* figure_name(FigurePreset p);

}  // namespace uma
