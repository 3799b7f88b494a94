#include "dualtune/refinement.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "io_util.hpp"

namespace dualtune {

using nlohmann::json;

std::string_view partition_axis_name(PartitionAxis a) {
    switch (a) {
        case PartitionAxis::GainDaSign: return "gain_da";
        case PartitionAxis::GainCotSign: return "gain_cot";
        case PartitionAxis::Quadrant: return "quadrant";
    }
    return "gain_da";
}

std::optional<PartitionAxis> parse_partition_axis(std::string_view name) {
    if (name == "gain_da") return PartitionAxis::GainDaSign;
    if (name == "gain_cot") return PartitionAxis::GainCotSign;
    if (name == "quadrant") return PartitionAxis::Quadrant;
    return std::nullopt;
}

PartitionSpec partition_by_gain(const std::map<std::string, DualTuningMetrics>& per_task,
                                PartitionAxis axis, double epsilon) {
    if (axis == PartitionAxis::Quadrant) {
        throw std::invalid_argument("partition_by_gain takes a single-gain axis");
    }
    PartitionSpec spec;
    spec.axis = axis;
    spec.epsilon = epsilon;
    spec.groups[std::string(kGroupPositive)];
    spec.groups[std::string(kGroupNonPositive)];
    for (const auto& [task, metrics] : per_task) {
        if (!metrics.defined()) {
            spec.skipped.push_back(task);
            continue;
        }
        double gain = axis == PartitionAxis::GainDaSign ? *metrics.gain_da : *metrics.gain_cot;
        auto& group = gain > epsilon ? spec.groups[std::string(kGroupPositive)]
                                     : spec.groups[std::string(kGroupNonPositive)];
        group.insert(task);
    }
    return spec;
}

PartitionSpec partition_by_quadrant(const std::map<std::string, DualTuningMetrics>& per_task,
                                    double epsilon) {
    PartitionSpec spec;
    spec.axis = PartitionAxis::Quadrant;
    spec.epsilon = epsilon;
    spec.groups[std::string(kGroupNegativeRegion)];
    spec.groups[std::string(kGroupPositiveRegions)];
    for (const auto& [task, metrics] : per_task) {
        if (!metrics.defined()) {
            spec.skipped.push_back(task);
            continue;
        }
        bool negative = *metrics.gain_cot <= epsilon && *metrics.gain_da <= epsilon;
        auto& group = negative ? spec.groups[std::string(kGroupNegativeRegion)]
                               : spec.groups[std::string(kGroupPositiveRegions)];
        group.insert(task);
    }
    return spec;
}

PartitionManifests emit_partition_manifests(
    const PartitionSpec& spec, const DatasetManifest& manifest,
    const std::map<std::string, std::optional<EvalMode>>& mode_policy) {
    PartitionManifests out;
    std::set<std::string> available = manifest.task_labels();
    for (const auto& [group, tasks] : spec.groups) {
        std::optional<EvalMode> filter;
        if (auto it = mode_policy.find(group); it != mode_policy.end()) {
            filter = it->second;
        }
        DatasetManifest group_manifest;
        group_manifest.provenance = manifest.provenance;
        std::set<std::string>& missing = out.missing_labels[group];
        std::set<std::string> present;
        for (const auto& task : tasks) {
            if (available.contains(task)) {
                present.insert(task);
            } else {
                missing.insert(task);
            }
        }
        if (!present.empty()) {
            group_manifest = emit_subset(manifest, present, filter);
        }
        group_manifest.provenance["partition_axis"] = std::string(partition_axis_name(spec.axis));
        group_manifest.provenance["partition_group"] = group;
        out.by_group.emplace(group, std::move(group_manifest));
        if (missing.empty()) {
            out.missing_labels.erase(group);
        }
    }
    return out;
}

std::map<std::string, std::optional<EvalMode>> uniform_mode_policy(
    const PartitionSpec& spec, std::optional<EvalMode> filter) {
    std::map<std::string, std::optional<EvalMode>> policy;
    for (const auto& [group, tasks] : spec.groups) {
        policy[group] = filter;
    }
    return policy;
}

std::string_view gain_def_name(GainDef d) {
    switch (d) {
        case GainDef::GainDa: return "gain_da";
        case GainDef::GainCot: return "gain_cot";
        case GainDef::MaxOfBoth: return "max";
    }
    return "gain_da";
}

std::optional<GainDef> parse_gain_def(std::string_view name) {
    if (name == "gain_da") return GainDef::GainDa;
    if (name == "gain_cot") return GainDef::GainCot;
    if (name == "max") return GainDef::MaxOfBoth;
    return std::nullopt;
}

namespace {

std::optional<double> gain_under(const DualTuningMetrics& metrics, GainDef def) {
    if (!metrics.defined()) return std::nullopt;
    switch (def) {
        case GainDef::GainDa: return metrics.gain_da;
        case GainDef::GainCot: return metrics.gain_cot;
        case GainDef::MaxOfBoth: return std::max(*metrics.gain_cot, *metrics.gain_da);
    }
    return std::nullopt;
}

std::string group_under(const DualTuningMetrics& metrics, GainDef def, double epsilon) {
    if (def == GainDef::MaxOfBoth) {
        bool negative = *metrics.gain_cot <= epsilon && *metrics.gain_da <= epsilon;
        return std::string(negative ? kGroupNegativeRegion : kGroupPositiveRegions);
    }
    double gain = def == GainDef::GainDa ? *metrics.gain_da : *metrics.gain_cot;
    return std::string(gain > epsilon ? kGroupPositive : kGroupNonPositive);
}

}  // namespace

RefinementReport compare_gains(const std::map<std::string, DualTuningMetrics>& before,
                               const std::map<std::string, DualTuningMetrics>& after,
                               GainDef def, double epsilon) {
    RefinementReport report;
    report.def = def;
    report.epsilon = epsilon;
    std::size_t agreements = 0;
    for (const auto& [task, before_metrics] : before) {
        auto it = after.find(task);
        if (it == after.end()) continue;  // only tasks with added training data
        auto gain_before = gain_under(before_metrics, def);
        auto gain_after = gain_under(it->second, def);
        if (!gain_before || !gain_after) continue;
        RefinementRow row;
        row.task = task;
        row.group = group_under(before_metrics, def, epsilon);
        row.before = *gain_before;
        row.after = *gain_after;
        row.sign_agreement = (*gain_before > epsilon) == (*gain_after > epsilon);
        agreements += row.sign_agreement ? 1 : 0;
        report.rows.push_back(std::move(row));
    }
    if (report.rows.empty()) {
        throw std::invalid_argument("no overlapping tasks between the two gain tables");
    }
    report.agreement_rate =
        static_cast<double>(agreements) / static_cast<double>(report.rows.size());
    return report;
}

void write_partition_spec(const PartitionSpec& spec, const std::filesystem::path& json_path) {
    json groups = json::object();
    for (const auto& [group, tasks] : spec.groups) {
        groups[group] = tasks;
    }
    json j{
        {"axis", std::string(partition_axis_name(spec.axis))},
        {"epsilon", spec.epsilon},
        {"groups", std::move(groups)},
        {"skipped", spec.skipped},
    };
    io::write_file_atomic(json_path, j.dump(2) + "\n");
}

void write_refinement_report(const RefinementReport& report, const std::filesystem::path& tsv_path,
                             const std::filesystem::path& summary_path) {
    std::string body = "task\tgroup\tgain_before\tgain_after\tsign_agreement\n";
    for (const auto& row : report.rows) {
        body += io::join_tsv({row.task, row.group, format_shortest(row.before),
                              format_shortest(row.after), row.sign_agreement ? "true" : "false"});
        body.push_back('\n');
    }
    io::write_file_atomic(tsv_path, body);

    std::size_t agreements = 0;
    for (const auto& row : report.rows) agreements += row.sign_agreement ? 1 : 0;
    std::string summary;
    summary += "gain definition: " + std::string(gain_def_name(report.def)) + "\n";
    summary += "epsilon: " + format_shortest(report.epsilon) + "\n";
    summary += "tasks compared: " + std::to_string(report.rows.size()) + "\n";
    summary += "sign agreements: " + std::to_string(agreements) + "\n";
    summary += "agreement rate: " + format_2dp(100.0 * report.agreement_rate) + "%\n";
    std::string disagreeing;
    for (const auto& row : report.rows) {
        if (!row.sign_agreement) {
            disagreeing += "  " + row.task + " (before " + format_2dp(row.before) + ", after " +
                           format_2dp(row.after) + ")\n";
        }
    }
    if (!disagreeing.empty()) {
        summary += "disagreements:\n" + disagreeing;
    }
    io::write_file_atomic(summary_path, summary);
}

}  // namespace dualtune
