#include <doctest.h>

#include <cctype>
#include <random>
#include <regex>

#include "dualtune/extraction.hpp"
#include "test_util.hpp"

using namespace dualtune;

namespace {

std::vector<Violation> sorted(std::vector<Violation> v) {
    std::sort(v.begin(), v.end());
    return v;
}

RawTrace numeric_trace() {
    RawTrace t;
    t.id = "n";
    t.task_label = "Estimation";
    t.question = "size?";
    t.answer = "23.5";
    t.answer_kind = AnswerKind::Numeric;
    return t;
}

RawTrace mcq_trace() {
    RawTrace t;
    t.id = "m";
    t.task_label = "Recognition";
    t.question = "which?";
    t.answer = "C";
    t.answer_kind = AnswerKind::MultipleChoice;
    t.choices = {{"A", "a cup"}, {"B", "a book"}, {"C", "a lamp"}, {"D", "a plant"}};
    return t;
}

// Independent reference for the numeric grammar, built on std::regex.
struct RefNumber {
    double value;
    bool percent;
    std::size_t pos;
    std::size_t end;
};

std::optional<RefNumber> reference_first_number(const std::string& s) {
    static const std::regex re(
        R"(([+-]?(?:\d{1,3}(?:,\d{3})+(?!\d)|\d+(?:\.\d+)?|\d+|\.\d+)(?:\.\d+)?)(%?))");
    auto word_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator();
         ++it) {
        auto pos = static_cast<std::size_t>(it->position());
        if (pos > 0 && word_char(s[pos - 1])) continue;
        std::string number = (*it)[1].str();
        std::string no_commas;
        for (char c : number) {
            if (c != ',') no_commas.push_back(c);
        }
        RefNumber ref;
        ref.value = std::stod(no_commas);
        ref.percent = (*it)[2].length() > 0;
        ref.pos = pos;
        ref.end = pos + static_cast<std::size_t>(it->length());
        return ref;
    }
    return std::nullopt;
}

}  // namespace

TEST_CASE("extract_tags parses a well-formed thinking response") {
    auto parsed = extract_tags("<think>reason</think><answer>B</answer>", EvalMode::Thinking);
    CHECK(parsed.format_ok);
    CHECK(parsed.violations.empty());
    REQUIRE(parsed.thinking.has_value());
    CHECK(*parsed.thinking == "reason");
    CHECK(parsed.answer_text == "B");
}

TEST_CASE("extract_tags falls back to raw text when tags are missing") {
    auto parsed = extract_tags("The answer is 4.", EvalMode::Thinking);
    CHECK_FALSE(parsed.format_ok);
    CHECK(sorted(parsed.violations) ==
          std::vector<Violation>{Violation::MissingThink, Violation::MissingAnswer});
    CHECK(parsed.answer_text == "The answer is 4.");
    CHECK_FALSE(parsed.thinking.has_value());
}

TEST_CASE("extract_tags keeps the last answer block") {
    auto parsed = extract_tags("<answer>7</answer><answer>9</answer>", EvalMode::Thinking);
    CHECK(parsed.answer_text == "9");
    CHECK(sorted(parsed.violations) ==
          std::vector<Violation>{Violation::MissingThink, Violation::MultipleAnswerTags});
}

TEST_CASE("extract_tags thinking-mode fallbacks and flags") {
    SUBCASE("answer text after the think block when no answer tag") {
        auto parsed = extract_tags("<think>hm</think>  it is 42  ", EvalMode::Thinking);
        CHECK(parsed.answer_text == "it is 42");
        CHECK(sorted(parsed.violations) == std::vector<Violation>{Violation::MissingAnswer});
    }
    SUBCASE("whole raw text when nothing follows the think block") {
        auto parsed = extract_tags("<think>only thought</think>", EvalMode::Thinking);
        CHECK(parsed.answer_text == "<think>only thought</think>");
        CHECK(sorted(parsed.violations) == std::vector<Violation>{Violation::MissingAnswer});
    }
    SUBCASE("text outside tags is flagged") {
        auto parsed =
            extract_tags("<think>t</think> stray <answer>A</answer>", EvalMode::Thinking);
        CHECK(parsed.answer_text == "A");
        CHECK(sorted(parsed.violations) == std::vector<Violation>{Violation::TextOutsideTags});
    }
    SUBCASE("nested answer tag") {
        auto parsed =
            extract_tags("<think>t</think><answer>x<answer>y</answer>", EvalMode::Thinking);
        CHECK(parsed.answer_text == "x<answer>y");
        CHECK(sorted(parsed.violations) == std::vector<Violation>{Violation::NestedTags});
    }
    SUBCASE("answer tags inside thinking do not hijack extraction") {
        auto parsed = extract_tags(
            "<think>wrap in <answer> then close </answer> húh</think><answer>B</answer>",
            EvalMode::Thinking);
        CHECK(parsed.format_ok);
        CHECK(parsed.answer_text == "B");
    }
    SUBCASE("first think block wins") {
        auto parsed = extract_tags(
            "<think>first</think><think>second</think><answer>A</answer>", EvalMode::Thinking);
        CHECK(*parsed.thinking == "first");
        CHECK(parsed.answer_text == "A");
    }
}

TEST_CASE("extract_tags in direct-answer mode") {
    SUBCASE("bare text is format-ok") {
        auto parsed = extract_tags("42 meters", EvalMode::DirectAnswer);
        CHECK(parsed.format_ok);
        CHECK(parsed.answer_text == "42 meters");
    }
    SUBCASE("leaked tags are flagged and the answer block is used") {
        auto parsed = extract_tags("<think>leak</think><answer>B</answer>", EvalMode::DirectAnswer);
        CHECK_FALSE(parsed.format_ok);
        CHECK(parsed.answer_text == "B");
        CHECK(sorted(parsed.violations) == std::vector<Violation>{Violation::TextOutsideTags});
    }
    SUBCASE("leaked think block without answer tags") {
        auto parsed = extract_tags("<think>leak</think>verbose tail", EvalMode::DirectAnswer);
        CHECK(parsed.answer_text == "verbose tail");
        CHECK_FALSE(parsed.format_ok);
    }
}

TEST_CASE("extract_tags is total on arbitrary input") {
    std::mt19937_64 rng(7);
    const std::string alphabet = "<>/answerthink ABC123.%-";
    std::uniform_int_distribution<std::size_t> len(1, 60);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int trial = 0; trial < 500; ++trial) {
        std::string raw;
        std::size_t n = len(rng);
        for (std::size_t i = 0; i < n; ++i) raw.push_back(alphabet[pick(rng)]);
        for (EvalMode mode : {EvalMode::Thinking, EvalMode::DirectAnswer}) {
            auto parsed = extract_tags(raw, mode);
            bool only_space = true;
            for (char c : raw) {
                if (!std::isspace(static_cast<unsigned char>(c))) only_space = false;
            }
            if (!only_space) {
                CHECK_FALSE(parsed.answer_text.empty());
            }
            CHECK(parsed.format_ok == parsed.violations.empty());
        }
    }
}

TEST_CASE("normalize_answer choice priority") {
    RawTrace mcq = mcq_trace();

    auto standalone = normalize_answer("B", mcq);
    CHECK(standalone.kind == NormalKind::Choice);
    CHECK(*standalone.choice_letter == "B");

    auto parenthesized = normalize_answer("(c) because the light ...", mcq);
    CHECK(parenthesized.kind == NormalKind::Choice);
    CHECK(*parenthesized.choice_letter == "C");

    auto leading = normalize_answer("D. a plant", mcq);
    CHECK(*leading.choice_letter == "D");

    auto full_text = normalize_answer("  A Book ", mcq);
    CHECK(*full_text.choice_letter == "B");

    auto unmatched = normalize_answer("definitely the lamp", mcq);
    CHECK(unmatched.kind == NormalKind::Text);
    CHECK_FALSE(unmatched.choice_letter.has_value());
    CHECK(unmatched.text == "definitely the lamp");

    // letters outside the choice set stay unmatched
    auto invalid = normalize_answer("Z", mcq);
    CHECK(invalid.kind == NormalKind::Text);
}

TEST_CASE("normalize_answer lenient choice matching") {
    RawTrace mcq = mcq_trace();
    auto strict = normalize_answer("The answer is B", mcq, ChoiceMatching::Strict);
    CHECK(strict.kind == NormalKind::Text);

    auto lenient = normalize_answer("The answer is B", mcq, ChoiceMatching::Lenient);
    CHECK(lenient.kind == NormalKind::Choice);
    CHECK(*lenient.choice_letter == "B");

    // ambiguous letters stay unmatched even leniently
    auto ambiguous = normalize_answer("either B or C", mcq, ChoiceMatching::Lenient);
    CHECK(ambiguous.kind == NormalKind::Text);
}

TEST_CASE("normalize_answer numeric parsing") {
    RawTrace num = numeric_trace();

    auto measured = normalize_answer("The room is about 23.5 square meters", num);
    CHECK(measured.kind == NormalKind::Number);
    CHECK(*measured.value == doctest::Approx(23.5));
    CHECK(*measured.unit == "square");  // single token after the number

    auto thousands = normalize_answer("roughly 1,234 steps", num);
    CHECK(*thousands.value == doctest::Approx(1234.0));
    CHECK(*thousands.unit == "steps");

    auto negative = normalize_answer("-12.25", num);
    CHECK(*negative.value == doctest::Approx(-12.25));
    CHECK_FALSE(negative.unit.has_value());

    auto percent = normalize_answer("about 45% of the frame", num);
    CHECK(*percent.value == doctest::Approx(45.0));
    CHECK(*percent.unit == "%");

    auto fraction = normalize_answer(".5 m", num);
    CHECK(*fraction.value == doctest::Approx(0.5));

    auto none = normalize_answer("no number here", num);
    CHECK(none.kind == NormalKind::Text);

    auto glued = normalize_answer("see v2 of the spec sheet", num);
    CHECK(glued.kind == NormalKind::Text);
}

TEST_CASE("numeric grammar agrees with the regex reference parser") {
    std::vector<std::string> corpus = {
        "The room is about 23.5 square meters",
        "distance 4 m",
        "1,234,567 ants",
        "around -8 degrees",
        "+3.25 liters",
        "45% done",
        "no digits at all",
        "v2 has 7 knobs",
        "area: .75 units",
        "12,34 is not a thousands group",
        "1,2345 is not one either",
        "1,234,5678 keeps only full groups",
        "count = 10",
    };
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> value(-5000, 5000);
    std::uniform_int_distribution<int> frac(0, 99);
    const char* units[] = {"meters", "cm", "steps", "chairs", "percent"};
    for (int i = 0; i < 200; ++i) {
        std::string text = "the measurement is ";
        text += std::to_string(value(rng));
        if (rng() % 2) {
            text += "." + std::to_string(frac(rng));
        }
        text += " ";
        text += units[rng() % 5];
        corpus.push_back(text);
    }

    RawTrace num = numeric_trace();
    for (const auto& text : corpus) {
        CAPTURE(text);
        auto ours = normalize_answer(text, num);
        auto ref = reference_first_number(text);
        if (!ref.has_value()) {
            CHECK(ours.kind == NormalKind::Text);
        } else {
            REQUIRE(ours.kind == NormalKind::Number);
            CHECK(*ours.value == doctest::Approx(ref->value).epsilon(1e-12));
            if (ref->percent) {
                CHECK(*ours.unit == "%");
            }
        }
    }
}

TEST_CASE("free text normalization is idempotent") {
    RawTrace text_trace;
    text_trace.id = "t";
    text_trace.task_label = "Captioning";
    text_trace.question = "q";
    text_trace.answer = "Paris";
    text_trace.answer_kind = AnswerKind::FreeText;

    std::mt19937_64 rng(23);
    const std::string alphabet = "AbC  \t dE\nf.,;x ";
    std::uniform_int_distribution<std::size_t> len(0, 40);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int trial = 0; trial < 300; ++trial) {
        std::string raw;
        std::size_t n = len(rng);
        for (std::size_t i = 0; i < n; ++i) raw.push_back(alphabet[pick(rng)]);
        auto once = normalize_answer(raw, text_trace);
        auto twice = normalize_answer(once.text, text_trace);
        CHECK(once.text == twice.text);
    }
    CHECK(clean_text("  Mixed   CASE \n text ") == "mixed case text");
}

TEST_CASE("normalize_answer is total over arbitrary bytes") {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<int> len(0, 50);
    std::uniform_int_distribution<int> byte(1, 255);
    RawTrace kinds[3] = {mcq_trace(), numeric_trace(), RawTrace{}};
    kinds[2].id = "t";
    kinds[2].task_label = "T";
    kinds[2].question = "q";
    kinds[2].answer = "x";
    kinds[2].answer_kind = AnswerKind::FreeText;

    for (int trial = 0; trial < 400; ++trial) {
        std::string raw;
        int n = len(rng);
        for (int i = 0; i < n; ++i) raw.push_back(static_cast<char>(byte(rng)));
        for (const auto& trace : kinds) {
            auto norm = normalize_answer(raw, trace);
            if (norm.kind == NormalKind::Choice) CHECK(norm.choice_letter.has_value());
            if (norm.kind == NormalKind::Number) CHECK(std::isfinite(*norm.value));
            // cleaned text never carries runs of whitespace or uppercase ASCII
            CHECK(norm.text.find("  ") == std::string::npos);
        }
    }
}

TEST_CASE("count_output_tokens prefers the endpoint-reported count") {
    ResponseRecord record;
    record.raw_text = "one two three four five six seven";
    record.completion_tokens = 512;
    auto reported = count_output_tokens(record);
    CHECK(reported.count == 512);
    CHECK_FALSE(reported.approximate);

    record.completion_tokens.reset();
    auto approx = count_output_tokens(record);
    CHECK(approx.count == 7);
    CHECK(approx.approximate);

    record.raw_text.clear();
    auto empty = count_output_tokens(record);
    CHECK(empty.count == 0);
    CHECK(empty.approximate);
}

TEST_CASE("violation summary counts per task and mode") {
    ViolationSummary summary;
    summary.add("Recognition", EvalMode::Thinking,
                {Violation::MissingThink, Violation::MissingAnswer});
    summary.add("Recognition", EvalMode::Thinking, {Violation::MissingThink});
    summary.add("Estimation", EvalMode::DirectAnswer, {Violation::TextOutsideTags});

    CHECK(summary.counts.at("Recognition").at(EvalMode::Thinking).at(Violation::MissingThink) == 2);
    CHECK(summary.counts.at("Recognition").at(EvalMode::Thinking).at(Violation::MissingAnswer) == 1);

    testutil::TempDir tmp;
    write_violation_summary(summary, tmp.path() / "violations.json");
    auto body = testutil::read_file(tmp.path() / "violations.json");
    CHECK(body.find("\"missing_think\": 2") != std::string::npos);
    CHECK(body.find("\"direct_answer\"") != std::string::npos);
}
