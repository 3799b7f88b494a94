// dualtune: build paired CoT/DA datasets, evaluate chat endpoints in both
// inference modes, score the responses, derive the dual-tuning metrics and
// boundary verdicts, and emit refinement partitions and reports.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dualtune/analysis.hpp"
#include "dualtune/config.hpp"
#include "dualtune/corpus.hpp"
#include "dualtune/endpoint.hpp"
#include "dualtune/extraction.hpp"
#include "dualtune/numfmt.hpp"
#include "dualtune/prompting.hpp"
#include "dualtune/refinement.hpp"
#include "dualtune/reporting.hpp"
#include "dualtune/scoring.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dualtune;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitTransportErrors = 2;

struct GlobalOptions {
    std::string config_path;
    std::string run_id_override;
    std::string output_root_override;
    bool strict = false;
    std::optional<double> epsilon_override;
    std::string transport = "live";
    std::string replay_dir;
};

struct Context {
    RunConfig config;
    GlobalOptions opts;

    double epsilon() const { return opts.epsilon_override.value_or(config.epsilon); }
    fs::path run_dir() const { return config.run_dir(); }
};

Context make_context(const GlobalOptions& opts) {
    if (opts.config_path.empty()) {
        throw std::runtime_error("--config is required for this command");
    }
    Context ctx{load_run_config(opts.config_path), opts};
    if (!opts.output_root_override.empty()) {
        ctx.config.output_root = opts.output_root_override;
    }
    if (!opts.run_id_override.empty()) {
        ctx.config.run_id = opts.run_id_override;
    }
    return ctx;
}

std::unique_ptr<Transport> make_transport(const Context& ctx) {
    if (ctx.opts.transport == "replay") {
        if (ctx.opts.replay_dir.empty()) {
            throw std::runtime_error("--transport replay requires --replay-dir");
        }
        return std::make_unique<ReplayTransport>(ctx.opts.replay_dir);
    }
    return std::make_unique<HttpTransport>();
}

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string joined_paths(const std::vector<fs::path>& paths) {
    std::string out;
    for (const auto& p : paths) {
        if (!out.empty()) out += ", ";
        out += p.string();
    }
    return out;
}

std::vector<RawTrace> load_eval_set(const Context& ctx, const std::string& override_path) {
    fs::path path;
    if (!override_path.empty()) {
        path = override_path;
    } else if (ctx.config.eval_set) {
        path = *ctx.config.eval_set;
    } else {
        throw std::runtime_error("no evaluation set: set eval_set in the config or pass --eval-set");
    }
    auto loaded = load_corpus(path, kCorpusSchemaId, ctx.opts.strict);
    for (const auto& warning : loaded.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    if (!loaded.rejects.empty()) {
        std::cerr << "warning: " << loaded.rejects.size() << " rejected line(s) in "
                  << path.string() << "\n";
    }
    return std::move(loaded.traces);
}

// ---------------------------------------------------------------- pair ---

int cmd_pair(const Context& ctx, const std::string& mixture) {
    fs::path run_dir = ctx.run_dir();
    fs::create_directories(run_dir);

    std::vector<RawTrace> traces;
    json rejects = json::array();
    if (ctx.config.corpus_paths.empty()) {
        throw std::runtime_error("config has no corpus paths");
    }
    for (const auto& path : ctx.config.corpus_paths) {
        auto loaded = load_corpus(path, kCorpusSchemaId, ctx.opts.strict);
        for (const auto& warning : loaded.warnings) {
            std::cerr << "warning: " << warning << "\n";
        }
        for (const auto& reject : loaded.rejects) {
            rejects.push_back(
                {{"file", path.string()}, {"line", reject.line}, {"reason", reject.reason}});
        }
        traces.insert(traces.end(), loaded.traces.begin(), loaded.traces.end());
    }

    json excluded = json::array();
    auto exclude = [&](const RawTrace& trace, const std::string& reason, int wait_count = -1) {
        json entry{{"id", trace.id}, {"task_label", trace.task_label}, {"reason", reason}};
        if (wait_count >= 0) entry["marker_count"] = wait_count;
        excluded.push_back(std::move(entry));
    };

    DatasetManifest manifest;
    if (mixture == "da") {
        // direct-answer manifests take every trace; no reasoning to filter
        manifest = build_single_mode_manifest(traces, EvalMode::DirectAnswer);
    } else {
        std::vector<PairedSample> pairs;
        for (const auto& trace : traces) {
            PairBlocker blocker = pairability(trace);
            if (blocker != PairBlocker::None) {
                exclude(trace, std::string(pair_blocker_name(blocker)));
                continue;
            }
            auto decision = filter_wait_repetition(trace, ctx.config.wait_filter);
            if (!decision.keep) {
                exclude(trace, "wait_repetition", decision.count);
                continue;
            }
            pairs.push_back(strip_thinking(trace));
        }
        if (mixture == "cot") {
            std::vector<RawTrace> kept;
            kept.reserve(pairs.size());
            for (const auto& pair : pairs) kept.push_back(pair.base);
            manifest = build_single_mode_manifest(kept, EvalMode::Thinking);
        } else {
            manifest = build_dual_mixture(pairs);
        }
    }

    manifest.provenance["source"] = joined_paths(ctx.config.corpus_paths);
    manifest.provenance["schema"] = std::string(kCorpusSchemaId);
    manifest.provenance["wait_filter_max_repeats"] =
        std::to_string(ctx.config.wait_filter.max_repeats);
    std::string markers;
    for (const auto& m : ctx.config.wait_filter.markers) {
        if (!markers.empty()) markers += ",";
        markers += m;
    }
    manifest.provenance["wait_filter_markers"] = markers;

    write_manifest(manifest, run_dir / "manifest.jsonl");
    write_manifest_summary(manifest, run_dir / "manifest_summary.json");
    write_json(run_dir / "rejects.json", rejects);
    write_json(run_dir / "excluded.json", excluded);

    std::cout << "pair: " << manifest.entries.size() << " manifest entries, " << rejects.size()
              << " rejected lines, " << excluded.size() << " excluded traces\n"
              << "pair: wrote " << (run_dir / "manifest.jsonl").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- eval ---

int cmd_eval(const Context& ctx, const std::string& role_name_str, const std::string& mode_name_str,
             const std::string& eval_set_override, const std::string& base_url_override,
             std::size_t limit) {
    auto role = parse_role(role_name_str);
    auto mode = parse_mode(mode_name_str);
    if (!role || !mode) {
        throw std::runtime_error("unknown role or mode");
    }
    auto traces = load_eval_set(ctx, eval_set_override);
    if (limit > 0 && traces.size() > limit) {
        traces.resize(limit);
    }

    EndpointConfig endpoint = ctx.config.endpoint_for(*role);
    if (!base_url_override.empty()) {
        endpoint.base_url = base_url_override;
    }
    const SamplingConfig& sampling = *mode == EvalMode::Thinking
                                         ? ctx.config.thinking_sampling
                                         : ctx.config.direct_answer_sampling;

    auto transport = make_transport(ctx);
    auto result = run_eval(traces, *role, *mode, endpoint, sampling,
                           ctx.config.resolved_cache_dir(), *transport,
                           ctx.config.options_style);

    fs::path records_path = ctx.run_dir() / "records" /
                            (role_name_str + "_" + mode_name_str + ".jsonl");
    write_records(result.records, records_path);

    std::cout << "eval " << role_name_str << "/" << mode_name_str << ": total "
              << result.summary.total << ", live " << result.summary.live << ", cache "
              << result.summary.cache << ", replay " << result.summary.replay << ", errors "
              << result.summary.errors << "\n"
              << "eval: wrote " << records_path.string() << "\n";
    return result.summary.errors > 0 ? kExitTransportErrors : kExitOk;
}

// --------------------------------------------------------------- score ---

int cmd_score(const Context& ctx, const std::string& records_dir_override,
              const std::string& eval_set_override) {
    auto traces = load_eval_set(ctx, eval_set_override);
    std::map<std::string, const RawTrace*> by_id;
    for (const auto& trace : traces) by_id.emplace(trace.id, &trace);

    // the grader endpoint must exist before scoring starts, not mid-run
    std::unique_ptr<Transport> grader_transport;
    std::unique_ptr<GraderClient> grader;
    if (ctx.config.scoring.needs_grader(traces)) {
        if (!ctx.config.grader_endpoint) {
            throw std::runtime_error(
                "a task is configured with the grader rule but endpoints.grader is missing");
        }
        grader_transport = make_transport(ctx);
        grader = std::make_unique<GraderClient>(GraderConfig{*ctx.config.grader_endpoint},
                                                *grader_transport,
                                                ctx.config.resolved_cache_dir());
    }

    fs::path records_dir = records_dir_override.empty() ? ctx.run_dir() / "records"
                                                        : fs::path(records_dir_override);
    if (!fs::exists(records_dir)) {
        throw std::runtime_error("no records directory: " + records_dir.string());
    }
    std::vector<fs::path> record_files;
    for (const auto& entry : fs::directory_iterator(records_dir)) {
        if (entry.path().extension() == ".jsonl") record_files.push_back(entry.path());
    }
    std::sort(record_files.begin(), record_files.end());
    if (record_files.empty()) {
        throw std::runtime_error("no record files under " + records_dir.string());
    }

    std::vector<SampleScore> samples;
    ViolationSummary violations;
    json excluded = json::array();
    for (const auto& file : record_files) {
        for (const auto& record : read_records(file)) {
            auto it = by_id.find(record.sample_id);
            if (it == by_id.end()) {
                excluded.push_back({{"sample_id", record.sample_id},
                                    {"role", std::string(role_name(record.role))},
                                    {"mode", std::string(mode_name(record.mode))},
                                    {"reason", "unknown_sample"}});
                continue;
            }
            ScoredSample outcome = score_sample(*it->second, record, ctx.config.scoring,
                                                grader.get());
            if (outcome.score) {
                samples.push_back(*outcome.score);
                violations.add(it->second->task_label, record.mode, outcome.parsed.violations);
            } else {
                excluded.push_back({{"sample_id", record.sample_id},
                                    {"role", std::string(role_name(record.role))},
                                    {"mode", std::string(mode_name(record.mode))},
                                    {"reason", *outcome.exclusion}});
            }
        }
    }

    auto tasks = aggregate_task(samples);
    fs::path scores_dir = ctx.run_dir() / "scores";
    write_sample_scores(samples, scores_dir / "sample_scores.jsonl");
    write_task_scores(tasks, scores_dir / "task_scores.tsv");
    write_violation_summary(violations, scores_dir / "violations.json");
    write_json(scores_dir / "excluded.json", excluded);

    json approx = json::array();
    for (const auto& t : tasks) {
        if (t.tokens_approximate) {
            approx.push_back({{"task", t.task_label},
                              {"role", std::string(role_name(t.role))},
                              {"mode", std::string(mode_name(t.mode))}});
        }
    }
    write_json(scores_dir / "scores_summary.json",
               json{{"samples_scored", samples.size()},
                    {"samples_excluded", excluded.size()},
                    {"task_cells", tasks.size()},
                    {"approximate_token_cells", std::move(approx)}});

    std::cout << "score: " << samples.size() << " samples scored, " << excluded.size()
              << " excluded, " << tasks.size() << " task cells\n"
              << "score: wrote " << (scores_dir / "task_scores.tsv").string() << "\n";
    return kExitOk;
}

// ------------------------------------------------------------- analyze ---

std::vector<TaskAnalysis> analyzed_rows(const Context& ctx, const std::string& score_table) {
    fs::path path = score_table.empty() ? ctx.run_dir() / "scores" / "task_scores.tsv"
                                        : fs::path(score_table);
    auto cells = read_task_scores(path);
    return analyze_tasks(cells, ctx.epsilon(), ctx.config.token_policy);
}

int cmd_analyze(const Context& ctx, const std::string& score_table) {
    auto rows = analyzed_rows(ctx, score_table);

    fs::path analysis_dir = ctx.run_dir() / "analysis";
    fs::create_directories(analysis_dir);
    write_metrics_table(rows, analysis_dir / "metrics.tsv");
    GainMap map = gain_map(metrics_by_task(rows), ctx.epsilon());
    write_gain_map(map, analysis_dir / "gain_map.tsv");
    auto token_rows = token_gain_rows(rows);
    write_token_gains(token_rows, analysis_dir / "token_gain.tsv");

    json suitable = json::array();
    json indeterminate = json::array();
    json notes = json::object();
    for (const auto& row : rows) {
        if (!row.notes.empty()) {
            notes[row.task] = row.notes;
        }
        if (row.indeterminate()) {
            indeterminate.push_back(row.task);
        } else if (row.verdict->thinking_suitable) {
            suitable.push_back(row.task);
        }
    }
    std::size_t suitable_count = suitable.size();
    std::size_t indeterminate_count = indeterminate.size();
    write_json(analysis_dir / "analysis.json",
               json{{"epsilon", ctx.epsilon()},
                    {"token_policy", std::string(token_policy_name(ctx.config.token_policy))},
                    {"tasks", rows.size()},
                    {"thinking_suitable", std::move(suitable)},
                    {"indeterminate", std::move(indeterminate)},
                    {"notes", std::move(notes)}});

    std::cout << "analyze: " << rows.size() << " tasks, " << suitable_count
              << " inside the thinking boundary, " << indeterminate_count << " indeterminate\n"
              << "analyze: wrote " << (analysis_dir / "metrics.tsv").string() << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- refine ---

int cmd_refine(const Context& ctx, const std::string& axis_name, const std::string& mode_policy,
               const std::string& after_table, const std::string& gain_def_name_str,
               const std::string& score_table, const std::string& manifest_override) {
    auto axis = parse_partition_axis(axis_name);
    if (!axis) throw std::runtime_error("unknown partition axis: " + axis_name);

    auto rows = analyzed_rows(ctx, score_table);
    auto metrics = metrics_by_task(rows);

    PartitionSpec spec = *axis == PartitionAxis::Quadrant
                             ? partition_by_quadrant(metrics, ctx.epsilon())
                             : partition_by_gain(metrics, *axis, ctx.epsilon());

    std::optional<EvalMode> filter;
    std::string policy = mode_policy;
    if (policy.empty()) {
        policy = *axis == PartitionAxis::GainDaSign    ? "da"
                 : *axis == PartitionAxis::GainCotSign ? "cot"
                                                       : "dual";
    }
    if (policy == "da") {
        filter = EvalMode::DirectAnswer;
    } else if (policy == "cot") {
        filter = EvalMode::Thinking;
    } else if (policy != "dual") {
        throw std::runtime_error("unknown mode policy: " + policy);
    }

    fs::path refine_dir = ctx.run_dir() / "refine" / axis_name;
    fs::create_directories(refine_dir);
    write_partition_spec(spec, refine_dir / "partition.json");

    fs::path manifest_path = manifest_override.empty() ? ctx.run_dir() / "manifest.jsonl"
                                                       : fs::path(manifest_override);
    if (fs::exists(manifest_path)) {
        DatasetManifest manifest = read_manifest(manifest_path);
        auto result = emit_partition_manifests(spec, manifest, uniform_mode_policy(spec, filter));
        for (const auto& [group, group_manifest] : result.by_group) {
            write_manifest(group_manifest, refine_dir / (group + ".jsonl"));
            if (group_manifest.entries.empty()) {
                std::cerr << "warning: partition group '" << group << "' matched no entries\n";
            }
        }
        json missing = json::object();
        for (const auto& [group, labels] : result.missing_labels) {
            missing[group] = labels;
        }
        write_json(refine_dir / "missing_labels.json", missing);
    } else {
        std::cerr << "note: no manifest at " << manifest_path.string()
                  << "; partition listed but no group manifests emitted\n";
    }

    if (!after_table.empty()) {
        auto after_rows = analyze_tasks(read_task_scores(after_table), ctx.epsilon(),
                                        ctx.config.token_policy);
        auto def = gain_def_name_str.empty()
                       ? (*axis == PartitionAxis::GainDaSign    ? GainDef::GainDa
                          : *axis == PartitionAxis::GainCotSign ? GainDef::GainCot
                                                                : GainDef::MaxOfBoth)
                       : *parse_gain_def(gain_def_name_str);
        auto report = compare_gains(metrics, metrics_by_task(after_rows), def, ctx.epsilon());
        write_refinement_report(report, refine_dir / "refinement_report.tsv",
                                refine_dir / "refinement_summary.txt");
        std::cout << "refine: sign agreement " << format_2dp(100.0 * report.agreement_rate)
                  << "% over " << report.rows.size() << " tasks\n";
    }

    std::cout << "refine: wrote " << (refine_dir / "partition.json").string() << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- report ---

std::vector<GainMapPoint> read_gain_map_tsv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<GainMapPoint> points;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() != 4) throw std::runtime_error("bad gain map row in " + path.string());
        auto gain_da = parse_double(fields[1]);
        auto gain_cot = parse_double(fields[2]);
        auto region = parse_region(fields[3]);
        if (!gain_da || !gain_cot || !region) {
            throw std::runtime_error("bad gain map row in " + path.string());
        }
        points.push_back({fields[0], *gain_da, *gain_cot, *region});
    }
    return points;
}

int cmd_report(const Context& ctx, const std::string& score_table, const std::string& overlay,
               const std::string& palette_name) {
    auto palette = parse_palette(palette_name.empty() ? "default" : palette_name);
    if (!palette) throw std::runtime_error("unknown palette: " + palette_name);

    auto rows = analyzed_rows(ctx, score_table);

    ReportBundle bundle;
    bundle.metrics = rows;
    if (ctx.config.task_order_path) {
        bundle.task_order = read_task_list(*ctx.config.task_order_path);
    }

    GainMap map = gain_map(metrics_by_task(rows), ctx.epsilon());
    bundle.gain_maps.push_back({ctx.config.run_id, map.points});
    if (!overlay.empty()) {
        bundle.gain_maps.push_back(
            {fs::path(overlay).stem().string(), read_gain_map_tsv(overlay)});
    }

    std::map<std::string, std::string> groups;
    if (ctx.config.task_groups_path) {
        groups = read_task_groups(*ctx.config.task_groups_path);
    }
    std::vector<const TaskAnalysis*> bar_rows;
    for (const auto& row : rows) {
        if (row.scores) bar_rows.push_back(&row);
    }
    std::stable_sort(bar_rows.begin(), bar_rows.end(),
                     [&](const TaskAnalysis* a, const TaskAnalysis* b) {
                         auto ga = groups.count(a->task) ? groups.at(a->task) : std::string();
                         auto gb = groups.count(b->task) ? groups.at(b->task) : std::string();
                         return std::tie(ga, a->task) < std::tie(gb, b->task);
                     });
    for (const TaskAnalysis* row : bar_rows) {
        std::string group = groups.count(row->task) ? groups.at(row->task) : std::string();
        bundle.gap_bars.push_back({row->task, row->metrics.gap_b, group});
    }

    auto token_rows = token_gain_rows(rows);
    if (!token_rows.empty()) {
        bundle.token_gains.push_back({ctx.config.run_id, token_rows});
    }

    bundle.provenance["run_id"] = ctx.config.run_id;
    bundle.provenance["epsilon"] = format_shortest(ctx.epsilon());
    bundle.provenance["prompt_digest_thinking"] = prompt_digest(EvalMode::Thinking);
    bundle.provenance["prompt_digest_direct_answer"] = prompt_digest(EvalMode::DirectAnswer);
    if (ctx.config.base_endpoint) {
        bundle.provenance["endpoint_base"] =
            ctx.config.base_endpoint->base_url + " (" + ctx.config.base_endpoint->model + ")";
    }
    if (ctx.config.dual_tuned_endpoint) {
        bundle.provenance["endpoint_dual_tuned"] = ctx.config.dual_tuned_endpoint->base_url +
                                                   " (" + ctx.config.dual_tuned_endpoint->model +
                                                   ")";
    }

    ReportPaths paths = make_report_dirs(ctx.config.output_root, ctx.config.run_id);
    write_report(bundle, paths, *palette);
    std::cout << "report: wrote " << paths.root.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    if (!verify_registered_prompts()) {
        std::cerr << "fatal: registered system prompts failed their digest self-test\n";
        return kExitFatal;
    }

    CLI::App app{"Paired CoT/DA dataset curation, dual-mode evaluation and "
                 "thinking-boundary analysis"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "Run configuration file (JSON)");
    app.add_option("--run-id", opts.run_id_override, "Override the computed run id");
    app.add_option("--output-root", opts.output_root_override, "Override the output root");
    app.add_flag("--strict", opts.strict, "Treat data-quality rejects as fatal");
    app.add_option("--epsilon", opts.epsilon_override,
                   "Boundary/region tolerance (overrides the config)");
    app.add_option("--transport", opts.transport, "Transport: live or replay")
        ->check(CLI::IsMember({"live", "replay"}));
    app.add_option("--replay-dir", opts.replay_dir, "Fixture directory for --transport replay");

    std::string pair_mixture = "dual";
    auto* pair = app.add_subcommand("pair", "Build paired CoT/DA manifests from raw corpora");
    pair->add_option("--mode", pair_mixture, "Mixture: dual, da or cot")
        ->check(CLI::IsMember({"dual", "da", "cot"}));

    std::string eval_role, eval_mode, eval_set_override, base_url_override;
    std::size_t eval_limit = 0;
    auto* eval = app.add_subcommand("eval", "Run one (role, mode) evaluation against an endpoint");
    eval->add_option("--role", eval_role, "Model role: base or dual_tuned")
        ->required()
        ->check(CLI::IsMember({"base", "dual_tuned"}));
    eval->add_option("--mode", eval_mode, "Inference mode: thinking or direct_answer")
        ->required()
        ->check(CLI::IsMember({"thinking", "direct_answer"}));
    eval->add_option("--eval-set", eval_set_override, "Evaluation corpus (overrides the config)");
    eval->add_option("--base-url", base_url_override, "Endpoint base URL override for this role");
    eval->add_option("--limit", eval_limit, "Evaluate only the first N samples");

    std::string score_records_dir, score_eval_set;
    auto* score = app.add_subcommand("score", "Score response records into sample and task tables");
    score->add_option("--records-dir", score_records_dir, "Directory of record files");
    score->add_option("--eval-set", score_eval_set, "Evaluation corpus (overrides the config)");

    std::string analyze_table;
    auto* analyze = app.add_subcommand("analyze",
                                       "Derive dual-tuning metrics, boundary verdicts and regions");
    analyze->add_option("--score-table", analyze_table,
                        "External task score table (bypasses eval/score outputs)");

    std::string refine_axis, refine_policy, refine_after, refine_gain_def, refine_table,
        refine_manifest;
    auto* refine = app.add_subcommand("refine", "Partition tasks by gain sign and compare reruns");
    refine->add_option("--axis", refine_axis, "Partition axis: gain_da, gain_cot or quadrant")
        ->required()
        ->check(CLI::IsMember({"gain_da", "gain_cot", "quadrant"}));
    refine->add_option("--mode-policy", refine_policy, "Group manifests: da, cot or dual")
        ->check(CLI::IsMember({"da", "cot", "dual"}));
    refine->add_option("--after", refine_after, "Task score table of the standalone reruns");
    refine->add_option("--gain-def", refine_gain_def, "Gain for sign comparison")
        ->check(CLI::IsMember({"gain_da", "gain_cot", "max"}));
    refine->add_option("--score-table", refine_table, "External task score table");
    refine->add_option("--manifest", refine_manifest, "Manifest to slice into group manifests");

    std::string report_table, report_overlay, report_palette;
    auto* report = app.add_subcommand("report", "Render tables, gain-map and gap-bar figures");
    report->add_option("--score-table", report_table, "External task score table");
    report->add_option("--overlay", report_overlay, "Second gain-map data file to overlay");
    report->add_option("--palette", report_palette, "Figure palette: default or colorblind")
        ->check(CLI::IsMember({"default", "colorblind"}));

    CLI11_PARSE(app, argc, argv);

    try {
        Context ctx = make_context(opts);
        if (pair->parsed()) return cmd_pair(ctx, pair_mixture);
        if (eval->parsed()) {
            return cmd_eval(ctx, eval_role, eval_mode, eval_set_override, base_url_override,
                            eval_limit);
        }
        if (score->parsed()) return cmd_score(ctx, score_records_dir, score_eval_set);
        if (analyze->parsed()) return cmd_analyze(ctx, analyze_table);
        if (refine->parsed()) {
            return cmd_refine(ctx, refine_axis, refine_policy, refine_after, refine_gain_def,
                              refine_table, refine_manifest);
        }
        if (report->parsed()) return cmd_report(ctx, report_table, report_overlay, report_palette);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitFatal;
}
