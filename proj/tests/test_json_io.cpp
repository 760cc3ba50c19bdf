#include <doctest.h>

#include "helpers.hpp"
#include "trajmeta/errors.hpp"
#include "trajmeta/json_io.hpp"

using namespace trajmeta;

namespace {

Trajectory sample() {
    Trajectory t = test::make_trajectory(
        "traj-9", "fw", "model-x", Outcome::resolved,
        {test::bash_turn(1, "grep -r foo .", "match", 0), test::bash_turn(2, "ls", "", 2)});
    t.config.framework_version = "3.1";
    t.turns[0].thought = "search first";
    Turn tool;
    tool.index = 3;
    tool.action.kind = ActionKind::tool_call;
    tool.action.tool_name = "editor";
    tool.action.arguments = nlohmann::json{{"path", "a.py"}, {"mode", "view"}};
    tool.observation.text = "contents";
    tool.observation.exit_code = std::nullopt;
    t.turns.push_back(tool);
    return t;
}

}  // namespace

TEST_CASE("canonical JSONL round-trips exactly") {
    const Trajectory t = sample();
    const std::string text = to_canonical_jsonl(t);
    const auto back = parse_canonical_jsonl(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == t);

    const std::vector<Trajectory> corpus{t, test::make_trajectory("traj-10", "fw2", "m2",
                                                                  Outcome::failed,
                                                                  {test::bash_turn(1, "pwd")})};
    const auto corpus_back = parse_canonical_jsonl(to_canonical_jsonl(corpus));
    REQUIRE(corpus_back.size() == 2);
    CHECK(corpus_back[0] == corpus[0]);
    CHECK(corpus_back[1] == corpus[1]);
}

TEST_CASE("serialization is byte-stable with sorted keys") {
    const Trajectory t = sample();
    CHECK(to_canonical_jsonl(t) == to_canonical_jsonl(t));
    const std::string text = to_canonical_jsonl(t);
    const std::string header = text.substr(0, text.find('\n'));
    const auto pos_framework = header.find("\"framework\"");
    const auto pos_llm = header.find("\"llm\"");
    const auto pos_outcome = header.find("\"outcome\"");
    const auto pos_id = header.find("\"trajectory_id\"");
    REQUIRE(pos_framework != std::string::npos);
    CHECK(pos_framework < pos_llm);
    CHECK(pos_llm < pos_outcome);
    CHECK(pos_outcome < pos_id);
}

TEST_CASE("optional fields survive null encoding") {
    Trajectory t = test::make_trajectory("t", "fw", "m", Outcome::failed,
                                         {test::bash_turn(1, "ls", "out", std::nullopt)});
    t.config.framework_version = std::nullopt;
    t.turns[0].thought = std::nullopt;
    const auto back = parse_canonical_jsonl(to_canonical_jsonl(t));
    REQUIRE(back.size() == 1);
    CHECK_FALSE(back[0].config.framework_version.has_value());
    CHECK_FALSE(back[0].turns[0].thought.has_value());
    CHECK_FALSE(back[0].turns[0].observation.exit_code.has_value());
}

TEST_CASE("parse errors carry the line number") {
    const std::string bad = "{\"trajectory_id\":\"a\",\"framework\":\"f\",\"llm\":\"m\","
                            "\"llm_family\":\"fam\",\"outcome\":\"failed\"}\nnot json\n";
    CHECK_THROWS_WITH_AS(parse_canonical_jsonl(bad), doctest::Contains("line 2"), DataError);
}

TEST_CASE("a turn line before any header is rejected") {
    const std::string orphan = "{\"turn\":1,\"thought\":null,\"action\":{\"kind\":\"bash\","
                               "\"command\":\"ls\"},\"observation\":{\"text\":\"\","
                               "\"exit_code\":0}}\n";
    CHECK_THROWS_AS(parse_canonical_jsonl(orphan), DataError);
}

TEST_CASE("split_jsonl_lines skips blanks but keeps original numbering") {
    const auto lines = split_jsonl_lines("a\n\nb\n\nc");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0].first == 1);
    CHECK(lines[0].second == "a");
    CHECK(lines[1].first == 3);
    CHECK(lines[2].first == 5);
    CHECK(lines[2].second == "c");

    const auto crlf = split_jsonl_lines("a\r\nb\r\n");
    REQUIRE(crlf.size() == 2);
    CHECK(crlf[0].second == "a");
    CHECK(crlf[1].second == "b");
}
