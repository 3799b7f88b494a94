#include "dualtune/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "io_util.hpp"

namespace dualtune {

using nlohmann::json;

std::optional<Palette> parse_palette(std::string_view name) {
    if (name == "default") return Palette::Default;
    if (name == "colorblind") return Palette::ColorblindSafe;
    return std::nullopt;
}

namespace {

struct RegionColors {
    std::string_view cot_advantage;
    std::string_view da_advantage;
    std::string_view both_beneficial;
    std::string_view ineffective;
    std::string_view neutral;
    std::string_view positive;
    std::string_view negative;
};

constexpr RegionColors kDefaultColors{"#2e8b57", "#e75480", "#4682b4",
                                      "#d4a017", "#808080", "#2e8b57", "#c0392b"};
constexpr RegionColors kColorblindColors{"#009E73", "#CC79A7", "#0072B2",
                                         "#E69F00", "#999999", "#009E73", "#D55E00"};

const RegionColors& colors_for(Palette palette) {
    return palette == Palette::ColorblindSafe ? kColorblindColors : kDefaultColors;
}

std::string_view region_color(Region region, const RegionColors& colors) {
    switch (region) {
        case Region::CoTAdvantage: return colors.cot_advantage;
        case Region::DAAdvantage: return colors.da_advantage;
        case Region::BothBeneficial: return colors.both_beneficial;
        case Region::Ineffective: return colors.ineffective;
        case Region::Neutral: return colors.neutral;
    }
    return colors.neutral;
}

std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string md_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '|') out += "\\|";
        else out.push_back(c);
    }
    return out;
}

std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

// Maps data values into pixel space.
struct LinearScale {
    double d0 = 0.0, d1 = 1.0;  // data range
    double p0 = 0.0, p1 = 1.0;  // pixel range

    double operator()(double v) const {
        if (d1 == d0) return (p0 + p1) / 2.0;
        return p0 + (v - d0) * (p1 - p0) / (d1 - d0);
    }
};

struct Extent {
    double lo = 0.0;
    double hi = 0.0;
    bool any = false;

    void add(double v) {
        if (!any) {
            lo = hi = v;
            any = true;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }

    // always spans zero, padded so points never sit on the frame
    void finish() {
        if (!any) {
            lo = -1.0;
            hi = 1.0;
        }
        lo = std::min(lo, 0.0);
        hi = std::max(hi, 0.0);
        double pad = (hi - lo) * 0.10;
        if (pad == 0.0) pad = 1.0;
        lo -= pad;
        hi += pad;
    }
};

std::vector<const TaskAnalysis*> ordered_rows(std::span<const TaskAnalysis> rows,
                                              std::span<const std::string> task_order) {
    std::vector<const TaskAnalysis*> out;
    out.reserve(rows.size());
    std::set<const TaskAnalysis*> used;
    for (const auto& name : task_order) {
        for (const auto& row : rows) {
            if (row.task == name && !used.contains(&row)) {
                out.push_back(&row);
                used.insert(&row);
            }
        }
    }
    std::vector<const TaskAnalysis*> rest;
    for (const auto& row : rows) {
        if (!used.contains(&row)) rest.push_back(&row);
    }
    std::sort(rest.begin(), rest.end(),
              [](const TaskAnalysis* a, const TaskAnalysis* b) { return a->task < b->task; });
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

std::string boundary_label(const TaskAnalysis& row) {
    if (!row.verdict) return "indeterminate";
    return row.verdict->thinking_suitable ? "suitable" : "not_suitable";
}

std::string region_label(const TaskAnalysis& row) {
    if (!row.verdict) return "indeterminate";
    return std::string(region_name(row.verdict->region));
}

}  // namespace

std::string render_metrics_table(std::span<const TaskAnalysis> rows, TableFormat format,
                                 std::span<const std::string> task_order) {
    auto ordered = ordered_rows(rows, task_order);
    const bool markdown = format == TableFormat::Markdown;

    std::string out;
    if (markdown) {
        out += "| task | B_S | B_L | GAP_B | DT_S | DT_L | Gain_DA | Gain_CoT | GAP_DT | boundary "
               "| region |\n";
        out += "| --- | --- | --- | --- | --- | --- | --- | --- | --- | --- | --- |\n";
    } else {
        out += "task\tB_S\tB_L\tGAP_B\tDT_S\tDT_L\tGain_DA\tGain_CoT\tGAP_DT\tboundary\tregion\n";
    }

    for (const TaskAnalysis* row : ordered) {
        std::vector<std::string> fields(11, "-");
        fields[0] = markdown ? md_escape(row->task) : row->task;
        if (row->scores) {
            const auto& s = *row->scores;
            const auto& m = row->metrics;
            auto derived = [&](double v) { return markdown ? format_signed_2dp(v) : format_2dp(v); };
            fields[1] = format_2dp(s.b_s);
            fields[2] = format_2dp(s.b_l);
            fields[3] = derived(m.gap_b);
            fields[4] = format_2dp(s.dt_s);
            fields[5] = format_2dp(s.dt_l);
            if (m.gain_da) fields[6] = derived(*m.gain_da);
            if (m.gain_cot) fields[7] = derived(*m.gain_cot);
            fields[8] = derived(m.gap_dt);
        }
        fields[9] = boundary_label(*row);
        fields[10] = region_label(*row);
        if (markdown) {
            out += "| ";
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (i) out += " | ";
                out += fields[i];
            }
            out += " |\n";
        } else {
            out += io::join_tsv(fields);
            out.push_back('\n');
        }
    }
    return out;
}

std::string render_gain_scatter_svg(std::span<const ScatterSeries> series, Palette palette) {
    const RegionColors& colors = colors_for(palette);
    const double width = 760, height = 560;
    const double ml = 64, mr = 24, mt = 28, mb = 52;

    Extent xe, ye;
    for (const auto& s : series) {
        for (const auto& p : s.points) {
            xe.add(p.gain_da);
            ye.add(p.gain_cot);
        }
    }
    xe.finish();
    ye.finish();
    LinearScale xs{xe.lo, xe.hi, ml, width - mr};
    LinearScale ys{ye.lo, ye.hi, height - mb, mt};  // inverted pixel axis

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) +
           "\" height=\"" + svg_num(height) + "\" viewBox=\"0 0 " + svg_num(width) + " " +
           svg_num(height) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + svg_num(width) + "\" height=\"" + svg_num(height) +
           "\" fill=\"white\"/>\n";

    // quadrant tints relative to the zero lines
    double zx = xs(0.0), zy = ys(0.0);
    auto tint = [&](double x0, double y0, double x1, double y1, std::string_view fill) {
        svg += "<rect x=\"" + svg_num(x0) + "\" y=\"" + svg_num(y0) + "\" width=\"" +
               svg_num(x1 - x0) + "\" height=\"" + svg_num(y1 - y0) + "\" fill=\"" +
               std::string(fill) + "\" opacity=\"0.14\"/>\n";
    };
    tint(ml, mt, zx, zy, colors.cot_advantage);               // upper-left: CoT gains only
    tint(zx, zy, width - mr, height - mb, colors.da_advantage);  // lower-right: DA gains only
    tint(ml, zy, zx, height - mb, colors.ineffective);        // lower-left: both negative

    // zero-crossing axes
    svg += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(zy) + "\" x2=\"" +
           svg_num(width - mr) + "\" y2=\"" + svg_num(zy) +
           "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + svg_num(zx) + "\" y1=\"" + svg_num(mt) + "\" x2=\"" + svg_num(zx) +
           "\" y2=\"" + svg_num(height - mb) + "\" stroke=\"#444\" stroke-width=\"1\"/>\n";

    auto axis_label = [&](double px, double py, const std::string& text, const char* anchor) {
        svg += "<text x=\"" + svg_num(px) + "\" y=\"" + svg_num(py) +
               "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\" text-anchor=\"" +
               anchor + "\">" + xml_escape(text) + "</text>\n";
    };
    axis_label(width - mr, zy + 16, format_2dp(xe.hi), "end");
    axis_label(ml, zy + 16, format_2dp(xe.lo), "start");
    axis_label(zx + 4, mt + 10, format_2dp(ye.hi), "start");
    axis_label(zx + 4, height - mb, format_2dp(ye.lo), "start");
    axis_label(width / 2, height - 12, "Gain_DA", "middle");
    svg += "<text x=\"16\" y=\"" + svg_num(height / 2) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 16 " +
           svg_num(height / 2) + ")\">Gain_CoT</text>\n";

    auto marker = [&](std::size_t series_index, double px, double py, std::string_view fill) {
        if (series_index == 0) {
            svg += "<circle cx=\"" + svg_num(px) + "\" cy=\"" + svg_num(py) +
                   "\" r=\"5\" fill=\"" + std::string(fill) + "\" stroke=\"#333\" "
                   "stroke-width=\"0.6\"/>\n";
        } else if (series_index == 1) {
            svg += "<path d=\"M " + svg_num(px) + " " + svg_num(py - 6) + " L " +
                   svg_num(px - 5.5) + " " + svg_num(py + 4.5) + " L " + svg_num(px + 5.5) + " " +
                   svg_num(py + 4.5) + " Z\" fill=\"" + std::string(fill) +
                   "\" stroke=\"#333\" stroke-width=\"0.6\"/>\n";
        } else {
            svg += "<rect x=\"" + svg_num(px - 4.5) + "\" y=\"" + svg_num(py - 4.5) +
                   "\" width=\"9\" height=\"9\" fill=\"" + std::string(fill) +
                   "\" stroke=\"#333\" stroke-width=\"0.6\"/>\n";
        }
    };

    for (std::size_t si = 0; si < series.size(); ++si) {
        for (const auto& p : series[si].points) {
            double px = xs(p.gain_da), py = ys(p.gain_cot);
            marker(si, px, py, region_color(p.region, colors));
            svg += "<text x=\"" + svg_num(px + 7) + "\" y=\"" + svg_num(py - 5) +
                   "\" font-family=\"sans-serif\" font-size=\"9\" fill=\"#333\">" +
                   xml_escape(p.task) + "</text>\n";
        }
    }

    // region legend
    double lx = width - mr - 150, ly = mt + 6;
    const std::pair<Region, std::string_view> legend[] = {
        {Region::CoTAdvantage, "CoT advantage"}, {Region::DAAdvantage, "DA advantage"},
        {Region::BothBeneficial, "both beneficial"}, {Region::Ineffective, "ineffective"},
        {Region::Neutral, "neutral"},
    };
    for (const auto& [region, label] : legend) {
        svg += "<circle cx=\"" + svg_num(lx) + "\" cy=\"" + svg_num(ly - 3) + "\" r=\"4\" fill=\"" +
               std::string(region_color(region, colors)) + "\"/>\n";
        axis_label(lx + 9, ly, std::string(label), "start");
        ly += 14;
    }
    if (series.size() > 1) {
        ly += 4;
        for (std::size_t si = 0; si < series.size(); ++si) {
            marker(si, lx, ly - 3, "#ffffff");
            axis_label(lx + 9, ly, series[si].dataset_id, "start");
            ly += 14;
        }
    }

    svg += "</svg>\n";
    return svg;
}

std::string render_gap_bars_svg(std::span<const GapBar> bars, Palette palette) {
    const RegionColors& colors = colors_for(palette);
    const double height = 420;
    const double ml = 56, mr = 16, mt = 20, mb = 110;
    const double slot = 26;
    const double width = std::max(320.0, ml + mr + slot * static_cast<double>(bars.size()));

    Extent ye;
    for (const auto& b : bars) ye.add(b.gap_b);
    ye.finish();
    LinearScale ys{ye.lo, ye.hi, height - mb, mt};

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) +
           "\" height=\"" + svg_num(height) + "\" viewBox=\"0 0 " + svg_num(width) + " " +
           svg_num(height) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + svg_num(width) + "\" height=\"" + svg_num(height) +
           "\" fill=\"white\"/>\n";

    double zy = ys(0.0);
    svg += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(zy) + "\" x2=\"" +
           svg_num(width - mr) + "\" y2=\"" + svg_num(zy) +
           "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + svg_num(ml - 6) + "\" y=\"" + svg_num(zy + 4) +
           "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#333\" "
           "text-anchor=\"end\">0</text>\n";

    std::string last_group;
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const GapBar& bar = bars[i];
        double x = ml + slot * static_cast<double>(i) + 4;
        double w = slot - 8;
        double y_val = ys(bar.gap_b);
        double y0 = std::min(zy, y_val);
        double h = std::abs(y_val - zy);
        std::string_view fill = bar.gap_b >= 0.0 ? colors.positive : colors.negative;
        svg += "<rect x=\"" + svg_num(x) + "\" y=\"" + svg_num(y0) + "\" width=\"" + svg_num(w) +
               "\" height=\"" + svg_num(h) + "\" fill=\"" + std::string(fill) + "\"/>\n";
        double cx = x + w / 2;
        svg += "<text x=\"" + svg_num(cx) + "\" y=\"" + svg_num(height - mb + 12) +
               "\" font-family=\"sans-serif\" font-size=\"9\" fill=\"#333\" text-anchor=\"end\" "
               "transform=\"rotate(-45 " +
               svg_num(cx) + " " + svg_num(height - mb + 12) + ")\">" + xml_escape(bar.task) +
               "</text>\n";
        if (!bar.group.empty() && bar.group != last_group) {
            if (!last_group.empty()) {
                svg += "<line x1=\"" + svg_num(x - 4) + "\" y1=\"" + svg_num(mt) + "\" x2=\"" +
                       svg_num(x - 4) + "\" y2=\"" + svg_num(height - mb) +
                       "\" stroke=\"#bbb\" stroke-width=\"0.8\" stroke-dasharray=\"3 3\"/>\n";
            }
            svg += "<text x=\"" + svg_num(x) + "\" y=\"" + svg_num(height - 8) +
                   "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#555\">" +
                   xml_escape(bar.group) + "</text>\n";
            last_group = bar.group;
        }
    }

    svg += "</svg>\n";
    return svg;
}

ReportPaths make_report_dirs(const std::filesystem::path& output_root, std::string_view run_id) {
    ReportPaths paths;
    paths.root = output_root / "reports" / std::string(run_id);
    paths.tables = paths.root / "tables";
    paths.figures = paths.root / "figures";
    paths.data = paths.root / "data";
    std::filesystem::create_directories(paths.tables);
    std::filesystem::create_directories(paths.figures);
    std::filesystem::create_directories(paths.data);
    return paths;
}

namespace {

std::string render_token_gain_svg(std::span<const TokenGainSeries> series, Palette palette) {
    const RegionColors& colors = colors_for(palette);
    std::set<std::string> task_set;
    for (const auto& s : series) {
        for (const auto& row : s.rows) task_set.insert(row.task);
    }
    std::vector<std::string> tasks(task_set.begin(), task_set.end());

    const double height = 380;
    const double ml = 56, mr = 16, mt = 20, mb = 100;
    const double group_w = std::max<double>(30.0, 18.0 * static_cast<double>(series.size()) + 14);
    const double width = std::max(320.0, ml + mr + group_w * static_cast<double>(tasks.size()));

    Extent ye;
    for (const auto& s : series) {
        for (const auto& row : s.rows) ye.add(row.gain_token);
    }
    ye.finish();
    LinearScale ys{ye.lo, ye.hi, height - mb, mt};

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) +
           "\" height=\"" + svg_num(height) + "\" viewBox=\"0 0 " + svg_num(width) + " " +
           svg_num(height) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + svg_num(width) + "\" height=\"" + svg_num(height) +
           "\" fill=\"white\"/>\n";
    double zy = ys(0.0);
    svg += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(zy) + "\" x2=\"" +
           svg_num(width - mr) + "\" y2=\"" + svg_num(zy) +
           "\" stroke=\"#444\" stroke-width=\"1\"/>\n";

    const std::string_view series_fill[] = {colors.cot_advantage, colors.da_advantage,
                                            colors.both_beneficial, colors.neutral};
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        double gx = ml + group_w * static_cast<double>(ti) + 6;
        for (std::size_t si = 0; si < series.size(); ++si) {
            const auto& rows = series[si].rows;
            auto it = std::find_if(rows.begin(), rows.end(),
                                   [&](const TokenGainRow& r) { return r.task == tasks[ti]; });
            if (it == rows.end()) continue;
            double x = gx + 18.0 * static_cast<double>(si);
            double y_val = ys(it->gain_token);
            svg += "<rect x=\"" + svg_num(x) + "\" y=\"" + svg_num(std::min(zy, y_val)) +
                   "\" width=\"14\" height=\"" + svg_num(std::abs(y_val - zy)) + "\" fill=\"" +
                   std::string(series_fill[si % 4]) + "\"/>\n";
        }
        double cx = gx + group_w / 2 - 6;
        svg += "<text x=\"" + svg_num(cx) + "\" y=\"" + svg_num(height - mb + 12) +
               "\" font-family=\"sans-serif\" font-size=\"9\" fill=\"#333\" text-anchor=\"end\" "
               "transform=\"rotate(-45 " +
               svg_num(cx) + " " + svg_num(height - mb + 12) + ")\">" + xml_escape(tasks[ti]) +
               "</text>\n";
    }
    double ly = mt + 6;
    for (std::size_t si = 0; si < series.size(); ++si) {
        svg += "<rect x=\"" + svg_num(width - mr - 150) + "\" y=\"" + svg_num(ly - 8) +
               "\" width=\"10\" height=\"10\" fill=\"" + std::string(series_fill[si % 4]) +
               "\"/>\n";
        svg += "<text x=\"" + svg_num(width - mr - 136) + "\" y=\"" + svg_num(ly) +
               "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">" +
               xml_escape(series[si].dataset_id) + "</text>\n";
        ly += 14;
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace

void write_report(const ReportBundle& bundle, const ReportPaths& paths, Palette palette) {
    io::write_file_atomic(paths.tables / "metrics.md",
                          render_metrics_table(bundle.metrics, TableFormat::Markdown,
                                               bundle.task_order));
    io::write_file_atomic(paths.tables / "metrics.tsv",
                          render_metrics_table(bundle.metrics, TableFormat::Tsv,
                                               bundle.task_order));

    if (!bundle.gain_maps.empty()) {
        io::write_file_atomic(paths.figures / "gain_map.svg",
                              render_gain_scatter_svg(bundle.gain_maps, palette));
        std::string data = "dataset\ttask\tGain_DA\tGain_CoT\tregion\n";
        for (const auto& s : bundle.gain_maps) {
            for (const auto& p : s.points) {
                data += io::join_tsv({s.dataset_id, p.task, format_shortest(p.gain_da),
                                      format_shortest(p.gain_cot),
                                      std::string(region_name(p.region))});
                data.push_back('\n');
            }
        }
        io::write_file_atomic(paths.data / "gain_map.tsv", data);
    }

    if (!bundle.gap_bars.empty()) {
        io::write_file_atomic(paths.figures / "gap_b.svg",
                              render_gap_bars_svg(bundle.gap_bars, palette));
        std::string data = "task\tGAP_B\tgroup\n";
        for (const auto& b : bundle.gap_bars) {
            data += io::join_tsv({b.task, format_shortest(b.gap_b), b.group});
            data.push_back('\n');
        }
        io::write_file_atomic(paths.data / "gap_b.tsv", data);
    }

    if (!bundle.token_gains.empty()) {
        io::write_file_atomic(paths.figures / "token_gain.svg",
                              render_token_gain_svg(bundle.token_gains, palette));
        std::string data = "dataset\ttask\tN_token\tGain_token\n";
        for (const auto& s : bundle.token_gains) {
            for (const auto& row : s.rows) {
                data += io::join_tsv({s.dataset_id, row.task, format_shortest(row.n_token),
                                      format_shortest(row.gain_token)});
                data.push_back('\n');
            }
        }
        io::write_file_atomic(paths.data / "token_gain.tsv", data);
    }

    json provenance = json::object();
    for (const auto& [key, value] : bundle.provenance) provenance[key] = value;
    io::write_file_atomic(paths.root / "provenance.json", provenance.dump(2) + "\n");
}

}  // namespace dualtune
