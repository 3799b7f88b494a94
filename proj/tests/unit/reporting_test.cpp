#include <doctest.h>

#include "dualtune/reporting.hpp"
#include "test_util.hpp"

using namespace dualtune;

namespace {

std::vector<TaskAnalysis> mathvista_rows() {
    auto cells = testutil::cells_to_task_scores(
        testutil::load_reference_cells(testutil::reference_dir() / "mathvista_cells.tsv"));
    return analyze_tasks(cells, 0.0);
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

}  // namespace

TEST_CASE("markdown metrics table has one row per task with sign markers") {
    auto rows = mathvista_rows();
    auto md = render_metrics_table(rows, TableFormat::Markdown);
    // header + separator + benchmark summary + 7 tasks
    CHECK(count_occurrences(md, "\n") == 10);
    CHECK(md.find("| MathVista | 69.80 | 69.83 | +0.03 | 67.37 | 72.87 | -3.52 | +4.35 | +5.50 | "
                  "suitable | cot_advantage |") != std::string::npos);
    CHECK(md.find("+10.49") != std::string::npos);  // geometry gap
    CHECK(md.find("| 0.00 |") != std::string::npos);  // zero cells carry no sign marker

    // deterministic
    CHECK(render_metrics_table(rows, TableFormat::Markdown) == md);
}

TEST_CASE("tsv rendering carries plain values") {
    auto rows = mathvista_rows();
    auto tsv = render_metrics_table(rows, TableFormat::Tsv);
    CHECK(tsv.find("+") == std::string::npos);
    CHECK(tsv.find("MathVista\t69.80\t69.83\t0.03\t") != std::string::npos);
}

TEST_CASE("empty metrics render a header-only document") {
    auto md = render_metrics_table({}, TableFormat::Markdown);
    CHECK(count_occurrences(md, "\n") == 2);
    auto tsv = render_metrics_table({}, TableFormat::Tsv);
    CHECK(count_occurrences(tsv, "\n") == 1);
}

TEST_CASE("task order file controls row order") {
    auto rows = mathvista_rows();
    std::vector<std::string> order = {"MathVista", "Comm.", "Scientific", "Geometry"};
    auto md = render_metrics_table(rows, TableFormat::Markdown, order);
    auto pos_mv = md.find("| MathVista |");
    auto pos_comm = md.find("| Comm. |");
    auto pos_alg = md.find("| Algebraic |");
    CHECK(pos_mv < pos_comm);
    CHECK(pos_comm < pos_alg);  // unlisted tasks follow in name order

    // default order is alphabetical
    auto unordered = render_metrics_table(rows, TableFormat::Markdown);
    CHECK(unordered.find("| Algebraic |") < unordered.find("| MathVista |"));
}

TEST_CASE("gain scatter renders labeled points with region colors") {
    auto rows = mathvista_rows();
    GainMap map = gain_map(metrics_by_task(rows), 0.0);
    ScatterSeries series{"joint", map.points};
    auto svg = render_gain_scatter_svg(std::vector<ScatterSeries>{series});

    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count_occurrences(svg, "<circle") >= map.points.size());
    CHECK(svg.find(">Geometry</text>") != std::string::npos);
    CHECK(svg.find("Gain_DA") != std::string::npos);
    CHECK(svg.find("Gain_CoT") != std::string::npos);

    // determinism
    CHECK(render_gain_scatter_svg(std::vector<ScatterSeries>{series}) == svg);
}

TEST_CASE("gain scatter draws a single origin point on the axis crossing") {
    ScatterSeries series{"joint", {{"origin-task", 0.0, 0.0, Region::Neutral}}};
    auto svg = render_gain_scatter_svg(std::vector<ScatterSeries>{series});
    // the zero lines and the point share coordinates
    auto cx = svg.find("<circle cx=\"");
    REQUIRE(cx != std::string::npos);
    std::string x = svg.substr(cx + 12, svg.find('"', cx + 12) - cx - 12);
    CHECK(svg.find("<line x1=\"" + x + "\"") != std::string::npos);  // vertical zero axis
    CHECK(svg.find("origin-task") != std::string::npos);
}

TEST_CASE("two overlaid datasets use distinct marker shapes") {
    ScatterSeries circles{"baseline", {{"t1", 5.0, 2.0, Region::BothBeneficial}}};
    ScatterSeries triangles{"retuned", {{"t1", -3.0, 7.0, Region::CoTAdvantage}}};
    auto svg =
        render_gain_scatter_svg(std::vector<ScatterSeries>{circles, triangles});
    CHECK(svg.find("<path d=\"M ") != std::string::npos);  // triangle marker
    CHECK(svg.find("baseline") != std::string::npos);
    CHECK(svg.find("retuned") != std::string::npos);
}

TEST_CASE("gap bars are signed and grouped") {
    std::vector<GapBar> bars = {
        {"Accounting", 10.00, "Business"},
        {"Finance", 3.33, "Business"},
        {"Pharmacy", -16.66, "Health"},
    };
    auto svg = render_gap_bars_svg(bars);
    CHECK(count_occurrences(svg, "<rect") >= 4);  // background + 3 bars
    CHECK(svg.find("Accounting") != std::string::npos);
    CHECK(svg.find("Business") != std::string::npos);
    CHECK(svg.find("Health") != std::string::npos);

    // all-zero input still renders one rect per bar with zero height
    std::vector<GapBar> zeros = {{"a", 0.0, ""}, {"b", 0.0, ""}};
    auto flat = render_gap_bars_svg(zeros);
    CHECK(count_occurrences(flat, "height=\"0.00\"") == 2);

    // colorblind palette swaps the fill colors
    auto cb = render_gap_bars_svg(bars, Palette::ColorblindSafe);
    CHECK(cb.find("#009E73") != std::string::npos);
    CHECK(cb.find("#D55E00") != std::string::npos);
    CHECK(parse_palette("colorblind") == Palette::ColorblindSafe);
    CHECK_FALSE(parse_palette("neon").has_value());
}

TEST_CASE("write_report emits the documented tree with sibling data files") {
    testutil::TempDir tmp;
    auto rows = mathvista_rows();

    ReportBundle bundle;
    bundle.metrics = rows;
    GainMap map = gain_map(metrics_by_task(rows), 0.0);
    bundle.gain_maps.push_back({"joint", map.points});
    for (const auto& row : rows) {
        bundle.gap_bars.push_back({row.task, row.metrics.gap_b, ""});
    }
    bundle.token_gains.push_back(
        {"joint", {{"Geometry", 512.0, 1.11}, {"Algebraic", 480.0, 1.84}}});
    bundle.provenance["run_id"] = "test-run";

    auto paths = make_report_dirs(tmp.path(), "test-run");
    write_report(bundle, paths);

    CHECK(paths.root == tmp.path() / "reports" / "test-run");
    for (const char* rel : {"tables/metrics.md", "tables/metrics.tsv", "figures/gain_map.svg",
                            "data/gain_map.tsv", "figures/gap_b.svg", "data/gap_b.tsv",
                            "figures/token_gain.svg", "data/token_gain.tsv", "provenance.json"}) {
        CAPTURE(rel);
        CHECK(std::filesystem::exists(paths.root / rel));
    }

    // the data file carries the exact unrounded numbers
    auto data = testutil::read_file(paths.data / "gain_map.tsv");
    bool found = false;
    for (const auto& p : map.points) {
        if (p.task == "Geometry") {
            CHECK(data.find(format_shortest(p.gain_cot)) != std::string::npos);
            found = true;
        }
    }
    CHECK(found);

    // no recomputation inside rendering: every rendered 2dp value equals the
    // shared formatter applied to the bundle's numbers
    auto table = testutil::read_file(paths.tables / "metrics.tsv");
    for (const auto& row : rows) {
        CHECK(table.find(row.task + "\t" + format_2dp(row.scores->b_s) + "\t" +
                         format_2dp(row.scores->b_l)) != std::string::npos);
    }

    // byte-identical on rerun
    testutil::TempDir tmp2;
    auto paths2 = make_report_dirs(tmp2.path(), "test-run");
    write_report(bundle, paths2);
    CHECK_FALSE(testutil::first_tree_difference(paths.root, paths2.root).has_value());
}
