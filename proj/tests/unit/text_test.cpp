#include <doctest.h>

#include "pgagent/error.hpp"
#include "pgagent/text.hpp"

using namespace pgagent;

TEST_SUITE("text") {
  TEST_CASE("whitespace helpers") {
    CHECK(text::trim("  a b \n") == "a b");
    CHECK(text::collapse_whitespace(" a\t\tb \n c ") == "a b c");
    CHECK(text::lower("AbC") == "abc");
    CHECK(text::split("a,b,,c", ",") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(text::join({"a", "b"}, "; ") == "a; b");
    CHECK(text::iequals("Yes", "yES"));
    CHECK(text::starts_with_icase("ACTION: x", "action:"));
  }

  TEST_CASE("quote and tokenize are inverses") {
    const std::string tricky = "say \"hi\"\\ there\n";
    const auto tokens = text::tokenize("TYPE " + text::quote(tricky) + " tail");
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[1] == tricky);
    CHECK_THROWS_AS(text::tokenize("TYPE \"open"), Error);
  }

  TEST_CASE("truncate keeps the limit including the ellipsis") {
    CHECK(text::truncate("abcdef", 10) == "abcdef");
    CHECK(text::truncate("abcdefghij", 6) == "abc...");
  }
}
