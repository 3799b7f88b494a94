#include <doctest.h>

#include "dualtune/digest.hpp"
#include "dualtune/prompting.hpp"
#include "test_util.hpp"

using namespace dualtune;

TEST_CASE("registered prompts are bit-exact") {
    CHECK(system_prompt(EvalMode::Thinking) ==
          "When the user asks a question, your response must include two parts: first, the "
          "reasoning process enclosed in <think>...</think> tags, then the final answer enclosed "
          "in <answer>...</answer> tags.");
    CHECK(system_prompt(EvalMode::DirectAnswer) == "Please directly answer the following question.");

    // pure function: repeated calls return the identical string
    CHECK(system_prompt(EvalMode::Thinking).data() == system_prompt(EvalMode::Thinking).data());

    // no trailing whitespace
    for (EvalMode mode : {EvalMode::Thinking, EvalMode::DirectAnswer}) {
        auto prompt = system_prompt(mode);
        CHECK_FALSE(prompt.empty());
        CHECK_FALSE(std::isspace(static_cast<unsigned char>(prompt.back())));
    }
}

TEST_CASE("prompt digests are frozen") {
    CHECK(prompt_digest(EvalMode::Thinking) ==
          "b9cf6e7364cf0a0c0e87ae0324e83326dfdffd7265fc8f9f5536dd2bc484dc89");
    CHECK(prompt_digest(EvalMode::DirectAnswer) ==
          "9d79501627cc51a92f0cb4e1d196cc08972e12ed1bccd606ab8487fd063c1264");
    CHECK(verify_registered_prompts());
}

TEST_CASE("sha256 reference vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(short_digest("abc") == "ba7816bf8f01cfea");
}

TEST_CASE("assemble_request puts media first and options last") {
    auto traces = testutil::fixture_corpus(1);
    const RawTrace& mcq = traces[0];

    ChatRequest request =
        assemble_request(mcq, EvalMode::Thinking, SamplingConfig::defaults_for(EvalMode::Thinking));
    CHECK(request.system == system_prompt(EvalMode::Thinking));
    CHECK(request.sample_id == mcq.id);
    REQUIRE(request.user_parts.size() == 2);
    CHECK(std::holds_alternative<MediaPart>(request.user_parts[0]));
    const auto& text = std::get<TextPart>(request.user_parts[1]);
    CHECK(text.text ==
          "Which object sits on the table in image 0?\nA. a cup\nB. a book\nC. a lamp\nD. a plant");
}

TEST_CASE("parenthesized options style") {
    auto traces = testutil::fixture_corpus(1);
    const RawTrace& mcq = traces[0];
    CHECK(render_question_text(mcq, OptionsStyle::Parenthesized) ==
          "Which object sits on the table in image 0?\n(A) a cup\n(B) a book\n(C) a lamp\n(D) a "
          "plant");
    ChatRequest request = assemble_request(mcq, EvalMode::Thinking, SamplingConfig{},
                                           OptionsStyle::Parenthesized);
    CHECK(std::get<TextPart>(request.user_parts.back()).text.find("(A) a cup") !=
          std::string::npos);
    CHECK(parse_options_style("parenthesized") == OptionsStyle::Parenthesized);
    CHECK(parse_options_style("letter_dot") == OptionsStyle::LetterDot);
    CHECK_FALSE(parse_options_style("roman").has_value());
}

TEST_CASE("assemble_request omits the options block for numeric samples") {
    auto traces = testutil::fixture_corpus(1);
    const RawTrace& numeric = traces[1];
    ChatRequest request = assemble_request(numeric, EvalMode::DirectAnswer,
                                           SamplingConfig::defaults_for(EvalMode::DirectAnswer));
    const auto& text = std::get<TextPart>(request.user_parts.back());
    CHECK(text.text == numeric.question);
    CHECK(text.text.find("\nA.") == std::string::npos);
}

TEST_CASE("mode isolation: requests differ only in the system prompt") {
    auto traces = testutil::fixture_corpus(1);
    SamplingConfig sampling;
    sampling.temperature = 0.0;
    sampling.max_output_tokens = 128;
    for (const auto& trace : traces) {
        ChatRequest thinking = assemble_request(trace, EvalMode::Thinking, sampling);
        ChatRequest direct = assemble_request(trace, EvalMode::DirectAnswer, sampling);
        CHECK(thinking.system != direct.system);
        CHECK(thinking.sample_id == direct.sample_id);
        REQUIRE(thinking.user_parts.size() == direct.user_parts.size());
        for (std::size_t i = 0; i < thinking.user_parts.size(); ++i) {
            if (const auto* a = std::get_if<TextPart>(&thinking.user_parts[i])) {
                CHECK(a->text == std::get<TextPart>(direct.user_parts[i]).text);
            } else {
                CHECK(std::get<MediaPart>(thinking.user_parts[i]).uri ==
                      std::get<MediaPart>(direct.user_parts[i]).uri);
            }
        }
    }
}

TEST_CASE("assemble_request validates its inputs") {
    RawTrace bad;
    bad.id = "x";
    bad.task_label = "T";
    bad.question = "pick one";
    bad.answer = "A";
    bad.answer_kind = AnswerKind::MultipleChoice;  // no choices
    CHECK_THROWS_AS(assemble_request(bad, EvalMode::Thinking, SamplingConfig{}),
                    std::invalid_argument);

    bad.question.clear();
    CHECK_THROWS_AS(assemble_request(bad, EvalMode::Thinking, SamplingConfig{}),
                    std::invalid_argument);
}

TEST_CASE("sampling defaults give thinking mode more headroom") {
    auto thinking = SamplingConfig::defaults_for(EvalMode::Thinking);
    auto direct = SamplingConfig::defaults_for(EvalMode::DirectAnswer);
    CHECK(thinking.temperature == 0.0);
    CHECK(direct.temperature == 0.0);
    CHECK(*thinking.max_output_tokens > *direct.max_output_tokens);
}
