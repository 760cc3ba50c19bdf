#include <doctest.h>

#include "helpers.hpp"
#include "trajmeta/model.hpp"

using namespace trajmeta;

TEST_CASE("outcome and category names round-trip") {
    CHECK(to_string(Outcome::resolved) == "resolved");
    CHECK(to_string(Outcome::failed) == "failed");
    CHECK(outcome_from_string("resolved") == Outcome::resolved);
    CHECK(outcome_from_string("failed") == Outcome::failed);
    CHECK_FALSE(outcome_from_string("maybe").has_value());

    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        const auto c = static_cast<ActionCategory>(i);
        CHECK(to_string(c) == kCategoryNames[i]);
        CHECK(category_from_string(kCategoryNames[i]) == c);
    }
    CHECK_FALSE(category_from_string("reasoning").has_value());
}

TEST_CASE("config_key groups by framework and llm only") {
    ConfigurationId a{"fw", "1.0", "m", "fam"};
    ConfigurationId b{"fw", "2.0", "m", "other-fam"};
    ConfigurationId c{"fw", "1.0", "m2", "fam"};
    CHECK(config_key(a) == config_key(b));
    CHECK(config_key(a) != config_key(c));
}

TEST_CASE("action_string separates kinds and payloads") {
    Action bash;
    bash.kind = ActionKind::bash;
    bash.command = "ls";
    Action tool;
    tool.kind = ActionKind::tool_call;
    tool.tool_name = "ls";
    CHECK(action_string(bash) != action_string(tool));

    Action tool2 = tool;
    tool2.arguments = nlohmann::json{{"path", "/tmp"}};
    CHECK(action_string(tool) != action_string(tool2));
    CHECK(action_string(tool2) == action_string(tool2));
}

TEST_CASE("validate_trajectory flags structural problems") {
    Trajectory ok = test::make_trajectory("t", "fw", "m", Outcome::resolved,
                                          {test::bash_turn(1, "ls"), test::bash_turn(2, "pwd")});
    CHECK(validate_trajectory(ok).empty());

    Trajectory gap = ok;
    gap.turns[1].index = 3;
    const auto violations = validate_trajectory(gap);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("turn 3") != std::string::npos);

    Trajectory no_id = ok;
    no_id.id.clear();
    CHECK_FALSE(validate_trajectory(no_id).empty());

    Trajectory empty_cmd = ok;
    empty_cmd.turns[0].action.command.clear();
    CHECK_FALSE(validate_trajectory(empty_cmd).empty());

    Trajectory empty = ok;
    empty.turns.clear();
    CHECK_FALSE(validate_trajectory(empty).empty());

    Trajectory bad_tool = ok;
    bad_tool.turns[0].action.kind = ActionKind::tool_call;
    bad_tool.turns[0].action.tool_name.clear();
    CHECK_FALSE(validate_trajectory(bad_tool).empty());
}
