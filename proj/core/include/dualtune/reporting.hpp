#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualtune/analysis.hpp"

namespace dualtune {

enum class TableFormat { Markdown, Tsv };
enum class Palette { Default, ColorblindSafe };

std::optional<Palette> parse_palette(std::string_view name);

// Renders the metrics table. Markdown output marks the sign of the derived
// columns (GAP_B, Gain_DA, Gain_CoT, GAP_DT); the delimiter-separated form
// carries plain values. Rows follow task_order when given (unlisted tasks
// keep name order after the listed ones).
std::string render_metrics_table(std::span<const TaskAnalysis> rows, TableFormat format,
                                 std::span<const std::string> task_order = {});

struct ScatterSeries {
    std::string dataset_id;  // marker shape key: first series circles, second triangles
    std::vector<GainMapPoint> points;
};

// Gain map: x = Gain_DA, y = Gain_CoT, axes crossing at zero, one labeled
// marker per task colored by region. Self-contained SVG, no renderer
// dependency.
std::string render_gain_scatter_svg(std::span<const ScatterSeries> series,
                                    Palette palette = Palette::Default);

struct GapBar {
    std::string task;
    double gap_b = 0.0;
    std::string group;  // optional discipline group
};

std::string render_gap_bars_svg(std::span<const GapBar> bars, Palette palette = Palette::Default);

struct TokenGainSeries {
    std::string dataset_id;
    std::vector<TokenGainRow> rows;
};

struct ReportBundle {
    std::vector<TaskAnalysis> metrics;
    std::vector<ScatterSeries> gain_maps;
    std::vector<GapBar> gap_bars;
    std::vector<TokenGainSeries> token_gains;
    std::vector<std::string> task_order;
    std::map<std::string, std::string> provenance;
};

struct ReportPaths {
    std::filesystem::path root;
    std::filesystem::path tables;
    std::filesystem::path figures;
    std::filesystem::path data;
};

// reports/<run-id>/{tables/, figures/, data/} under output_root.
ReportPaths make_report_dirs(const std::filesystem::path& output_root, std::string_view run_id);

// Writes the whole bundle. Every figure gets a sibling data file carrying
// the exact numbers; rendering never recomputes, it only formats what the
// bundle holds.
void write_report(const ReportBundle& bundle, const ReportPaths& paths,
                  Palette palette = Palette::Default);

}  // namespace dualtune
