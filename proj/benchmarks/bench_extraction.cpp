#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "dualtune/extraction.hpp"

using namespace dualtune;

namespace {

std::string make_cot_response(std::size_t reasoning_words) {
    std::string raw = "<think>";
    for (std::size_t i = 0; i < reasoning_words; ++i) {
        raw += "step " + std::to_string(i) + " compares the visible objects; ";
    }
    raw += "</think><answer>B</answer>";
    return raw;
}

RawTrace numeric_trace() {
    RawTrace t;
    t.id = "bench";
    t.task_label = "Estimation";
    t.question = "size?";
    t.answer = "23.5";
    t.answer_kind = AnswerKind::Numeric;
    return t;
}

}  // namespace

static void BM_ExtractTagsWellFormed(benchmark::State& state) {
    std::string raw = make_cot_response(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto parsed = extract_tags(raw, EvalMode::Thinking);
        benchmark::DoNotOptimize(parsed.answer_text);
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * raw.size()));
}
BENCHMARK(BM_ExtractTagsWellFormed)->Arg(16)->Arg(256)->Arg(2048);

static void BM_ExtractTagsFallback(benchmark::State& state) {
    std::string raw = "The final answer, after much deliberation across every option, is 42.";
    for (auto _ : state) {
        auto parsed = extract_tags(raw, EvalMode::Thinking);
        benchmark::DoNotOptimize(parsed.violations);
    }
}
BENCHMARK(BM_ExtractTagsFallback);

static void BM_NormalizeNumeric(benchmark::State& state) {
    RawTrace trace = numeric_trace();
    std::string text = "The room measures roughly 1,234.56 square meters end to end.";
    for (auto _ : state) {
        auto norm = normalize_answer(text, trace);
        benchmark::DoNotOptimize(norm.value);
    }
}
BENCHMARK(BM_NormalizeNumeric);

static void BM_CountMarkerWords(benchmark::State& state) {
    std::vector<std::string> markers = {"wait"};
    std::string thinking;
    for (int i = 0; i < 200; ++i) {
        thinking += i % 9 == 0 ? "wait, reconsider the layout. " : "the shelf holds two cups. ";
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(count_marker_words(thinking, markers));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * thinking.size()));
}
BENCHMARK(BM_CountMarkerWords);
