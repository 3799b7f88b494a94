#include <doctest.h>

#include <set>

#include "dualtune/refinement.hpp"
#include "test_util.hpp"

using namespace dualtune;

namespace {

std::map<std::string, DualTuningMetrics> mmmu_task_metrics() {
    auto cells =
        testutil::load_reference_cells(testutil::reference_dir() / "mmmu_cells.tsv");
    std::map<std::string, DualTuningMetrics> out;
    for (const auto& row : cells) {
        if (row.is_benchmark_summary) continue;
        out.emplace(row.task, compute_metrics(row.cells));
    }
    return out;
}

DualTuningMetrics fake_metrics(double gain_cot, double gain_da, double gap_dt = 0.0) {
    DualTuningMetrics m;
    m.gain_cot = gain_cot;
    m.gain_da = gain_da;
    m.gap_dt = gap_dt;
    return m;
}

}  // namespace

TEST_CASE("partition_by_gain over the discipline reference table") {
    auto metrics = mmmu_task_metrics();

    auto by_da = partition_by_gain(metrics, PartitionAxis::GainDaSign, 0.0);
    const auto& da_pos = by_da.groups.at(std::string(kGroupPositive));
    const auto& da_non = by_da.groups.at(std::string(kGroupNonPositive));
    for (const char* task : {"Music", "Agriculture", "Energy & Power"}) {
        CAPTURE(task);
        CHECK(da_pos.contains(task));
    }
    for (const char* task : {"Accounting", "Mech. Eng."}) {
        CAPTURE(task);
        CHECK(da_non.contains(task));
    }

    auto by_cot = partition_by_gain(metrics, PartitionAxis::GainCotSign, 0.0);
    const auto& cot_pos = by_cot.groups.at(std::string(kGroupPositive));
    const auto& cot_non = by_cot.groups.at(std::string(kGroupNonPositive));
    for (const char* task : {"Physics", "Sociology"}) CHECK(cot_pos.contains(task));
    CHECK(cot_non.contains("Geography"));

    // partition totality: every task lands in exactly one group
    CHECK(da_pos.size() + da_non.size() == metrics.size());
    for (const auto& [task, m] : metrics) {
        CHECK(da_pos.contains(task) != da_non.contains(task));
    }
}

TEST_CASE("all-zero gains land in the non-positive group") {
    std::map<std::string, DualTuningMetrics> metrics;
    metrics["a"] = fake_metrics(0.0, 0.0);
    metrics["b"] = fake_metrics(0.0, 0.0);
    auto spec = partition_by_gain(metrics, PartitionAxis::GainDaSign, 0.0);
    CHECK(spec.groups.at(std::string(kGroupPositive)).empty());
    CHECK(spec.groups.at(std::string(kGroupNonPositive)).size() == 2);
}

TEST_CASE("partition_by_quadrant isolates the lower-left region") {
    auto metrics = mmmu_task_metrics();
    auto spec = partition_by_quadrant(metrics, 0.0);
    const auto& negative = spec.groups.at(std::string(kGroupNegativeRegion));
    const auto& positive = spec.groups.at(std::string(kGroupPositiveRegions));

    for (const char* task : {"Accounting", "Diag. & Lab. Med.", "Mech. Eng.", "Public Health"}) {
        CAPTURE(task);
        CHECK(negative.contains(task));
    }
    // membership is exactly the both-non-positive predicate
    for (const auto& [task, m] : metrics) {
        bool both_non_positive = *m.gain_cot <= 0.0 && *m.gain_da <= 0.0;
        CHECK(negative.contains(task) == both_non_positive);
        CHECK(positive.contains(task) == !both_non_positive);
    }

    std::map<std::string, DualTuningMetrics> mixed;
    mixed["x"] = fake_metrics(5.0, -3.0);
    auto one = partition_by_quadrant(mixed, 0.0);
    CHECK(one.groups.at(std::string(kGroupPositiveRegions)).contains("x"));

    auto empty = partition_by_quadrant({}, 0.0);
    CHECK(empty.groups.at(std::string(kGroupNegativeRegion)).empty());
    CHECK(empty.groups.at(std::string(kGroupPositiveRegions)).empty());

    CHECK_THROWS_AS(partition_by_gain(metrics, PartitionAxis::Quadrant, 0.0),
                    std::invalid_argument);
}

TEST_CASE("emit_partition_manifests applies the per-group mode policy") {
    auto traces = testutil::fixture_corpus(2);
    std::vector<PairedSample> pairs;
    for (const auto& t : traces) pairs.push_back(strip_thinking(t));
    DatasetManifest manifest = build_dual_mixture(pairs);

    PartitionSpec spec;
    spec.axis = PartitionAxis::GainDaSign;
    spec.groups[std::string(kGroupPositive)] = {"Recognition", "GhostTask"};
    spec.groups[std::string(kGroupNonPositive)] = {"Estimation", "Captioning"};

    auto policy = uniform_mode_policy(spec, EvalMode::DirectAnswer);
    auto result = emit_partition_manifests(spec, manifest, policy);

    const auto& positive = result.by_group.at(std::string(kGroupPositive));
    CHECK(positive.entries.size() == 2);  // DA entries of Recognition only
    for (const auto& e : positive.entries) {
        CHECK(e.mode == EvalMode::DirectAnswer);
        CHECK(e.trace.task_label == "Recognition");
    }
    REQUIRE(result.missing_labels.contains(std::string(kGroupPositive)));
    CHECK(result.missing_labels.at(std::string(kGroupPositive)).contains("GhostTask"));

    const auto& non_positive = result.by_group.at(std::string(kGroupNonPositive));
    CHECK(non_positive.entries.size() == 4);

    // dual policy keeps both modes and conserves the source manifest
    auto dual = emit_partition_manifests(spec, manifest, uniform_mode_policy(spec, std::nullopt));
    std::size_t total = 0;
    std::set<std::string> seen;
    for (const auto& [group, group_manifest] : dual.by_group) {
        for (const auto& e : group_manifest.entries) {
            ++total;
            seen.insert(e.trace.id + "/" + std::string(mode_data_tag(e.mode)));
        }
    }
    CHECK(total == manifest.entries.size());
    CHECK(seen.size() == manifest.entries.size());  // no duplicates across groups
}

TEST_CASE("compare_gains flags sign agreement per task") {
    std::map<std::string, DualTuningMetrics> before;
    std::map<std::string, DualTuningMetrics> after;
    before["keeps-negative"] = fake_metrics(0.0, -10.0);
    after["keeps-negative"] = fake_metrics(0.0, -4.0);
    before["flips"] = fake_metrics(0.0, 12.0);
    after["flips"] = fake_metrics(0.0, -1.0);
    before["only-before"] = fake_metrics(0.0, 3.0);

    auto report = compare_gains(before, after, GainDef::GainDa, 0.0);
    REQUIRE(report.rows.size() == 2);  // overlap only
    CHECK(report.rows[0].task == "flips");
    CHECK_FALSE(report.rows[0].sign_agreement);
    CHECK(report.rows[0].group == std::string(kGroupPositive));
    CHECK(report.rows[1].task == "keeps-negative");
    CHECK(report.rows[1].sign_agreement);
    CHECK(report.rows[1].group == std::string(kGroupNonPositive));
    CHECK(report.agreement_rate == doctest::Approx(0.5));
}

TEST_CASE("compare_gains max-of-both definition") {
    std::map<std::string, DualTuningMetrics> before;
    std::map<std::string, DualTuningMetrics> after;
    before["t"] = fake_metrics(-5.0, 3.0);
    after["t"] = fake_metrics(2.0, -1.0);
    auto report = compare_gains(before, after, GainDef::MaxOfBoth, 0.0);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].before == doctest::Approx(3.0));  // max(-5, 3)
    CHECK(report.rows[0].after == doctest::Approx(2.0));   // max(2, -1)
    CHECK(report.rows[0].sign_agreement);
    CHECK(report.rows[0].group == std::string(kGroupPositiveRegions));
}

TEST_CASE("compare_gains rejects an empty overlap") {
    std::map<std::string, DualTuningMetrics> before;
    std::map<std::string, DualTuningMetrics> after;
    before["a"] = fake_metrics(1.0, 1.0);
    after["b"] = fake_metrics(1.0, 1.0);
    CHECK_THROWS_AS(compare_gains(before, after, GainDef::GainDa, 0.0), std::invalid_argument);
}

TEST_CASE("refinement reports are deterministic") {
    testutil::TempDir tmp;
    std::map<std::string, DualTuningMetrics> before;
    std::map<std::string, DualTuningMetrics> after;
    before["alpha"] = fake_metrics(4.0, -2.0);
    after["alpha"] = fake_metrics(1.5, -0.5);
    before["beta"] = fake_metrics(-3.0, 6.0);
    after["beta"] = fake_metrics(-2.0, 4.5);
    auto report = compare_gains(before, after, GainDef::GainCot, 0.0);

    write_refinement_report(report, tmp.path() / "r1.tsv", tmp.path() / "s1.txt");
    write_refinement_report(report, tmp.path() / "r2.tsv", tmp.path() / "s2.txt");
    CHECK(testutil::read_file(tmp.path() / "r1.tsv") == testutil::read_file(tmp.path() / "r2.tsv"));
    CHECK(testutil::read_file(tmp.path() / "s1.txt") == testutil::read_file(tmp.path() / "s2.txt"));
    CHECK(testutil::read_file(tmp.path() / "r1.tsv")
              .rfind("task\tgroup\tgain_before\tgain_after\tsign_agreement\n", 0) == 0);

    auto spec = partition_by_gain(before, PartitionAxis::GainCotSign, 0.0);
    write_partition_spec(spec, tmp.path() / "spec.json");
    auto body = testutil::read_file(tmp.path() / "spec.json");
    CHECK(body.find("\"axis\": \"gain_cot\"") != std::string::npos);
    CHECK(body.find("alpha") != std::string::npos);
}
