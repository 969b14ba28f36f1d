#include "mathforge/template.hpp"

#include "mathforge/error.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <set>

using namespace mathforge;

namespace {

const std::string kEggs =
    "def solution(n1, n2):\n"
    "    \"\"\"Compute the money earned from selling eggs.\n"
    "\n"
    "    :param n1: eggs laid per day\n"
    "    :param n2: price per egg in dollars\n"
    "    :return: int, dollars earned per day\n"
    "    \"\"\"\n"
    "    eggs = n1  # eggs available, n1 in comment\n"
    "    label = \"n2 dollars\"\n"
    "    return eggs * n2  # revenue\n";

ErrorCode code_of(const std::string& src) {
    try {
        validate_program(src);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a validation error for:\n" << src);
    return ErrorCode::UsageError;
}

MaskedQuestion eggs_question() {
    std::string q = "A hen lays 16 eggs a day and each sells for $2.";
    return mask_question(q, extract_numbers(q));
}

} // namespace

TEST_CASE("golden template validates") {
    auto prog = validate_program(kEggs);
    CHECK(prog.function_name == "solution");
    CHECK(prog.parameters == std::vector<std::string>{"n1", "n2"});
    CHECK(prog.returns_integer);
    CHECK_FALSE(prog.returns_nonnegative);
    CHECK(prog.source == kEggs);
    CHECK(prog.digest().size() == 64);
    CHECK(prog.docstring.find(":param n1:") != std::string::npos);
}

TEST_CASE("validation errors") {
    std::string missing = kEggs;
    missing.erase(missing.find("    :param n2:"), std::string("    :param n2: price per egg in dollars\n").size());
    try {
        validate_program(missing);
        FAIL("expected DOCSTRING_PARAM_MISSING");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DocstringParamMissing);
        CHECK(e.detail() == "n2");
    }
    CHECK(code_of(kEggs + "print(solution(16, 2))\n") == ErrorCode::NotFunctionForm);
    CHECK(code_of("x = 1\n") == ErrorCode::NotFunctionForm);
    CHECK(code_of("def solution(n1):\n    \"\"\"P.\n\n    :param n1: a\n    :return: b\n    \"\"\"\n    return 3\n") ==
          ErrorCode::UnusedParameter);
    CHECK(code_of("def solution(n1):\n    \"\"\"P.\n\n    :param n1: a\n    :return: b\n    \"\"\"\n    n1 = 3\n    return n1\n") ==
          ErrorCode::ParameterRebound);
    CHECK(code_of("def solution(n1):\n    \"\"\"P.\n\n    :param n1: a\n    :return: b\n    \"\"\"\n    import random\n    return n1\n") ==
          ErrorCode::DeniedIdentifier);
    CHECK(code_of("def solution(n1):\n    return n1\n") == ErrorCode::DocstringInvalid);
    CHECK(code_of("def solution(n1):\n    s = 'abc\n    return n1\n") == ErrorCode::LexError);
    CHECK(code_of("def solution():\n    \"\"\"P.\n\n    :return: b\n    \"\"\"\n    return 1\n") ==
          ErrorCode::NotFunctionForm);
    CHECK(code_of("def helper(n1):\n    \"\"\"P.\n\n    :param n1: a\n    :return: b\n    \"\"\"\n    return n1\n") ==
          ErrorCode::NotFunctionForm);
}

TEST_CASE("selector enumeration") {
    CHECK(enumerate_selectors(1).size() == 1);
    CHECK(enumerate_selectors(3).size() == 7);
    auto five = enumerate_selectors(5);
    CHECK(five.size() == 31);
    CHECK(std::set<SelectorMask>(five.begin(), five.end()).size() == 31);
    CHECK(five.front().bits() == 1);
    CHECK(five.back().bits() == 31);
    CHECK_THROWS_AS(enumerate_selectors(0), Error);
    CHECK_THROWS_AS(enumerate_selectors(17), Error);
    CHECK(enumerate_selectors(17, 20).size() == (1u << 17) - 1);
}

TEST_CASE("number formatting") {
    CHECK(format_number(Number::integer(5), NumberKind::Int) == "5");
    CHECK(format_number(Number::integer(20), NumberKind::Percent) == "0.2");
    CHECK(format_number(*Number::parse("2.5"), NumberKind::Float) == "2.5");
    CHECK(format_number(Number::rational(3, 4), NumberKind::Fraction) == "(3/4)");
    CHECK_THROWS_AS(format_number(*Number::parse("2.5"), NumberKind::Int), Error);
}

TEST_CASE("toy partial instantiation") {
    std::string src =
        "def solution(a, b):\n"
        "    \"\"\"Add two numbers.\n\n    :param a: first\n    :param b: second\n    :return: the sum\n    \"\"\"\n"
        "    return a + b\n";
    auto prog = validate_program(src);
    auto masked = mask_question("Add 1 and 2.", extract_numbers("Add 1 and 2."), NamingPolicy{{"a", "b"}});
    auto sample = instantiate(prog, masked, {{"a", Number::integer(5)}}, {"a"}, "toy-0");
    CHECK(sample.program.find("def solution(b):") != std::string::npos);
    CHECK(sample.program.find("return 5 + b") != std::string::npos);
    CHECK(sample.program.find(":param a:") == std::string::npos);
    CHECK(sample.program.find(":param b:") != std::string::npos);
    CHECK_FALSE(sample.full);
    CHECK_FALSE(sample.expected_answer);
    CHECK(sample.question == "Add 5 and b.");
    CHECK(sample.provenance.selector == std::vector<std::string>{"a"});
    CHECK(sample.provenance.assignment.at("a") == "5");

    auto full = instantiate(prog, masked, {{"a", Number::integer(5)}, {"b", Number::integer(-2)}}, {"a", "b"});
    CHECK(full.full);
    CHECK(full.program.find("def solution():") != std::string::npos);
    CHECK(full.program.find("return 5 + (-2)") != std::string::npos);
    CHECK(full.program.ends_with("print(solution())\n"));

    CHECK_THROWS_AS(instantiate(prog, masked, {}, {}), Error);
    CHECK_THROWS_AS(instantiate(prog, masked, {{"z", Number::integer(1)}}, {"z"}), Error);
    try {
        instantiate(prog, masked, {}, {"a"});
        FAIL("expected MISSING_VALUE");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingValue);
    }
}

TEST_CASE("substitution leaves strings and comments alone") {
    auto prog = validate_program(kEggs);
    auto masked = eggs_question();
    auto sample = instantiate(prog, masked, {{"n1", Number::integer(20)}, {"n2", Number::integer(3)}}, {"n1", "n2"});
    CHECK(sample.program.find("# eggs available, n1 in comment") != std::string::npos);
    CHECK(sample.program.find("label = \"n2 dollars\"") != std::string::npos);
    CHECK(sample.program.find("eggs = 20") != std::string::npos);
    CHECK(sample.program.find("return eggs * 3") != std::string::npos);
    CHECK(sample.question == "A hen lays 20 eggs a day and each sells for $3.");
}

TEST_CASE("percent literals and executions agree") {
    std::string src =
        "def solution(n1, n2):\n"
        "    \"\"\"Price after a discount.\n\n    :param n1: discount rate\n    :param n2: list price\n"
        "    :return: the sale price\n    \"\"\"\n"
        "    return n2 * (1 - n1)  # pay the remainder\n";
    auto prog = validate_program(src);
    std::string q = "An item costs $150 with a 20% discount.";
    auto spans = extract_numbers(q);
    auto masked = mask_question(q, spans, NamingPolicy{{"n2", "n1"}});
    auto sample = instantiate(prog, masked, {{"n1", Number::integer(20)}, {"n2", Number::integer(150)}}, {"n1", "n2"});
    CHECK(sample.program.find("150 * (1 - 0.2)") != std::string::npos);
    CHECK(sample.question == q);
    mathforge::Executor ex(testing_support::stub_runner_config());
    auto r = ex.execute(sample.program);
    REQUIRE(r.status == ExecStatus::Ok);
    CHECK(Number::parse(*r.value_line)->to_double() == doctest::Approx(120.0));
}

TEST_CASE("strip docstring") {
    auto prog = validate_program(kEggs);
    std::string stripped = strip_docstring(kEggs);
    std::string expected =
        "def solution(n1, n2):\n"
        "    eggs = n1  # eggs available, n1 in comment\n"
        "    label = \"n2 dollars\"\n"
        "    return eggs * n2  # revenue\n";
    CHECK(stripped == expected);
    CHECK(strip_docstring(stripped) == stripped);
    CHECK(strip_docstring("def f(a):\n    'doc'\n") == "def f(a):\n    pass\n");

    auto masked = eggs_question();
    auto sample = instantiate(prog, masked, {{"n1", Number::integer(16)}, {"n2", Number::integer(2)}}, {"n1", "n2"});
    auto plain = strip_docstring(sample);
    mathforge::Executor ex(testing_support::stub_runner_config());
    auto a = ex.execute(sample.program);
    auto b = ex.execute(plain.program);
    REQUIRE(a.status == ExecStatus::Ok);
    CHECK(a.value_line == b.value_line);
    CHECK(*a.value_line == "32");
}
