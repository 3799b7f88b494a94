#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dualtune/analysis.hpp"
#include "dualtune/corpus.hpp"

namespace dualtune {

enum class PartitionAxis { GainDaSign, GainCotSign, Quadrant };

std::string_view partition_axis_name(PartitionAxis a);
std::optional<PartitionAxis> parse_partition_axis(std::string_view name);

inline constexpr std::string_view kGroupPositive = "positive";
inline constexpr std::string_view kGroupNonPositive = "non_positive";
inline constexpr std::string_view kGroupNegativeRegion = "negative_region";
inline constexpr std::string_view kGroupPositiveRegions = "positive_regions";

struct PartitionSpec {
    PartitionAxis axis = PartitionAxis::GainDaSign;
    double epsilon = 0.0;
    std::map<std::string, std::set<std::string>> groups;
    std::vector<std::string> skipped;  // tasks with undefined gains
};

// Splits tasks into a positive (> epsilon) and a non-positive group along
// one gain axis. Zero gains land in the non-positive group.
PartitionSpec partition_by_gain(const std::map<std::string, DualTuningMetrics>& per_task,
                                PartitionAxis axis, double epsilon = 0.0);

// Splits tasks into the lower-left negative region (both gains <= epsilon)
// and everything else.
PartitionSpec partition_by_quadrant(const std::map<std::string, DualTuningMetrics>& per_task,
                                    double epsilon = 0.0);

struct PartitionManifests {
    std::map<std::string, DatasetManifest> by_group;
    // tasks of the spec that the manifest has no entries for
    std::map<std::string, std::set<std::string>> missing_labels;
};

// One manifest per group under the group's mode filter (e.g. DA-only for a
// Gain_DA experiment, both modes for the quadrant experiment).
PartitionManifests emit_partition_manifests(
    const PartitionSpec& spec, const DatasetManifest& manifest,
    const std::map<std::string, std::optional<EvalMode>>& mode_policy);

std::map<std::string, std::optional<EvalMode>> uniform_mode_policy(
    const PartitionSpec& spec, std::optional<EvalMode> filter);

enum class GainDef { GainDa, GainCot, MaxOfBoth };

std::string_view gain_def_name(GainDef d);
std::optional<GainDef> parse_gain_def(std::string_view name);

struct RefinementRow {
    std::string task;
    std::string group;    // partition group under the chosen definition
    double before = 0.0;  // gain in the joint run
    double after = 0.0;   // gain after standalone training
    bool sign_agreement = false;
};

struct RefinementReport {
    GainDef def = GainDef::GainDa;
    double epsilon = 0.0;
    std::vector<RefinementRow> rows;  // ordered by task
    double agreement_rate = 0.0;
};

// Compares joint-run gains against standalone-run gains over the
// overlapping tasks; throws std::invalid_argument when no task overlaps.
// Sign agreement uses the same positive-vs-non-positive convention as the
// partitions.
RefinementReport compare_gains(const std::map<std::string, DualTuningMetrics>& before,
                               const std::map<std::string, DualTuningMetrics>& after,
                               GainDef def, double epsilon = 0.0);

void write_partition_spec(const PartitionSpec& spec, const std::filesystem::path& json_path);
void write_refinement_report(const RefinementReport& report, const std::filesystem::path& tsv_path,
                             const std::filesystem::path& summary_path);

}  // namespace dualtune
