#include <doctest.h>

#include <condition_variable>
#include <mutex>

#include "lama/mock_backend.hpp"
#include "lama/prompts.hpp"
#include "lama/recall_agents.hpp"
#include "scripted_backend.hpp"
#include "test_support.hpp"

using namespace lama;
using lama::test::ScriptedBackend;

namespace {

const LabelSpace& nats() { return lama::test::taxonomy99().nationalities(); }

std::string golden(const std::string& file) {
  return lama::test::read_file(lama::test::fixture_dir() / "golden" / file);
}

ChatResponse reply(std::string text) { return ChatResponse{std::move(text), {}, false}; }

}  // namespace

TEST_SUITE("prompts") {
  TEST_CASE("person and media system prompts match the golden text") {
    const auto labels = nats().joined();
    const auto person = build_recall_prompt(AgentKind::person, "Tanaka", nats());
    const auto media = build_recall_prompt(AgentKind::media, "Tanaka", nats());
    CHECK(person.system_prompt ==
          lama::test::replace_all(golden("person_recall_system.txt"), "{LABELS}", labels));
    CHECK(media.system_prompt ==
          lama::test::replace_all(golden("media_recall_system.txt"), "{LABELS}", labels));
    CHECK(person.system_prompt.starts_with("You are recalling real people based on a given name."));
    CHECK(media.system_prompt.starts_with(
        "You are recalling athletes and entertainers based on a given name."));
    CHECK(person.user_prompt == media.user_prompt);
    CHECK(person.user_prompt == lama::test::replace_all(golden("recall_user.txt"), "{NAME}", "Tanaka"));
    CHECK(person.temperature == 1.0);
  }

  TEST_CASE("label list is comma separated in set order") {
    const auto req = build_recall_prompt(AgentKind::person, "X", lama::test::mini5().nationalities());
    CHECK(req.system_prompt.find("Valid nationalities: Alpha, Beta, Gamma, Delta, Epsilon\n") !=
          std::string::npos);
  }

  TEST_CASE("empty name is rejected") {
    CHECK_THROWS_AS(build_recall_prompt(AgentKind::person, "", nats()), std::invalid_argument);
  }

  TEST_CASE("M is rendered into the recall prompt") {
    PromptBuilder p(nats(), Granularity::nationality, 6, 5);
    CHECK(p.recall_system(AgentKind::person).find("Output JSON array of up to 6 people:") !=
          std::string::npos);
  }

  TEST_CASE("region prompts swap the noun and the JSON field") {
    const auto& regions = lama::test::taxonomy99().regions();
    PromptBuilder p(regions, Granularity::region, 4, 3);
    const auto sys = p.recall_system(AgentKind::person);
    CHECK(sys.find("2. Region (from valid list only)") != std::string::npos);
    CHECK(sys.find("Valid regions: East Asia, ") != std::string::npos);
    CHECK(sys.find("\"region\": \"Region\"") != std::string::npos);
    CHECK(attribute_field_in(sys) == "region");
    CHECK(p.attribute_field() == "region");
    CHECK(p.direct_system().find("Predict the TOP 3 most likely regions") != std::string::npos);
    CHECK(p.completion_system().find("suggest 2 more regions") != std::string::npos);
  }

  TEST_CASE("prompt classification and name extraction") {
    PromptBuilder p(nats(), Granularity::nationality, 4, 5);
    CHECK(classify_system_prompt(p.recall_system(AgentKind::person)) == PromptKind::person_recall);
    CHECK(classify_system_prompt(p.recall_system(AgentKind::media)) == PromptKind::media_recall);
    CHECK(classify_system_prompt(p.completion_system()) == PromptKind::completion);
    CHECK(classify_system_prompt(p.direct_system()) == PromptKind::direct);
    CHECK_FALSE(classify_system_prompt("Hello").has_value());
    CHECK(name_from_user_prompt(PromptBuilder::recall_user("Jin Chao-chun")) == "Jin Chao-chun");
    CHECK(name_from_user_prompt(PromptBuilder::direct_user("A. A. Khan")) == "A. A. Khan");
    CHECK_FALSE(name_from_user_prompt("no name here").has_value());
    CHECK(attribute_field_in(p.recall_system(AgentKind::media)) == "nationality");
  }
}

TEST_SUITE("parse_recall_response") {
  TEST_CASE("single valid entry") {
    const auto r = parse_recall_response(reply(R"([{"name":"Natalie Cook","nationality":"Australian"}])"),
                                         AgentKind::person, nats(), 4);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].person == "Natalie Cook");
    CHECK(r.entries[0].nationality.str() == "Australian");
    CHECK(r.entries[0].source == AgentKind::person);
    CHECK(r.entries[0].emit_index == 0);
    CHECK(r.agent == AgentKind::person);
  }

  TEST_CASE("six valid entries with M = 4 keep the first four in order") {
    nlohmann::json arr = nlohmann::json::array();
    const char* labels[] = {"French", "German", "Dutch", "Belgian", "Swiss", "Austrian"};
    for (int i = 0; i < 6; ++i) arr.push_back({{"name", "P" + std::to_string(i)}, {"nationality", labels[i]}});
    const auto r = parse_recall_response(reply(arr.dump()), AgentKind::media, nats(), 4);
    REQUIRE(r.entries.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(r.entries[i].person == "P" + std::to_string(i));
      CHECK(r.entries[i].emit_index == i);
      CHECK(r.entries[i].source == AgentKind::media);
    }
  }

  TEST_CASE("invalid label and missing field are both excluded") {
    const auto r = parse_recall_response(
        reply(R"([{"name":"X","nationality":"Atlantean"},{"nationality":"French"}])"),
        AgentKind::person, nats(), 4);
    CHECK(r.entries.empty());
  }

  TEST_CASE("invalid entries do not consume M and emit_index keeps raw positions") {
    const auto r = parse_recall_response(
        reply(R"(Sure! [{"name":"","nationality":"French"}, 7, {"name":"A","nationality":" french "},
                 {"name":"B","nationality":"GERMAN"}, {"name":"C","nationality":"Dutch"}])"),
        AgentKind::person, nats(), 2);
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0].person == "A");
    CHECK(r.entries[0].nationality.str() == "French");
    CHECK(r.entries[0].emit_index == 2);
    CHECK(r.entries[1].nationality.str() == "German");
    CHECK(r.entries[1].emit_index == 3);
  }

  TEST_CASE("duplicate pairs within one agent are kept") {
    const auto r = parse_recall_response(
        reply(R"([{"name":"A","nationality":"Irish"},{"name":"A","nationality":"Irish"}])"),
        AgentKind::person, nats(), 4);
    CHECK(r.entries.size() == 2);
  }

  TEST_CASE("no array or non-string fields yield an empty recall") {
    CHECK(parse_recall_response(reply("I don't know anyone."), AgentKind::person, nats(), 4).empty());
    CHECK(parse_recall_response(reply(R"([{"name": 5, "nationality": "Irish"}])"), AgentKind::person,
                                nats(), 4)
              .empty());
    CHECK_THROWS_AS(parse_recall_response(reply("[]"), AgentKind::person, nats(), 0),
                    std::invalid_argument);
  }

  TEST_CASE("region field is read at region granularity") {
    const auto& regions = lama::test::taxonomy99().regions();
    const auto r = parse_recall_response(reply(R"([{"name":"A","region":"Oceania"}])"),
                                         AgentKind::person, regions, 4, "region");
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].nationality.str() == "Oceania");
  }
}

TEST_SUITE("run_agent and run_dual_recall") {
  const char* kKb = R"({
    "person_domain": {"natalie cook": [{"name": "Natalie Cook", "nationality": "Australian"}]},
    "media_domain": {"junior paulo": [{"name": "Junior Paulo", "nationality": "Samoan"}]}
  })";

  TEST_CASE("one-sided coverage") {
    MockChatBackend mock(MockKnowledgeBase::from_json(nlohmann::json::parse(kKb)));
    RecallContext ctx{mock, nats(), Granularity::nationality, "m", 4};
    const auto hit = run_dual_recall("Natalie Cook", ctx);
    CHECK(hit.person.recall.entries.size() == 1);
    CHECK(hit.media.recall.empty());
    CHECK(hit.person.calls == 1);
    CHECK(hit.media.calls == 1);

    const auto miss = run_dual_recall("Nobody Known", ctx);
    CHECK(miss.person.recall.empty());
    CHECK(miss.media.recall.empty());
  }

  TEST_CASE("repeated runs give identical pairs") {
    MockChatBackend mock(MockKnowledgeBase::from_json(nlohmann::json::parse(kKb)));
    RecallContext ctx{mock, nats(), Granularity::nationality, "m", 4};
    const auto first = run_dual_recall("Natalie Cook", ctx);
    for (int i = 0; i < 100; ++i) {
      const auto again = run_dual_recall("Natalie Cook", ctx);
      CHECK(again.person.recall == first.person.recall);
      CHECK(again.media.recall == first.media.recall);
    }
  }

  TEST_CASE("disabled agents make no call") {
    MockChatBackend mock(MockKnowledgeBase::from_json(nlohmann::json::parse(kKb)));
    RecallContext ctx{mock, nats(), Granularity::nationality, "m", 4};
    const auto only_media = run_dual_recall("Junior Paulo", ctx, false, true);
    CHECK(only_media.person.calls == 0);
    CHECK(only_media.media.recall.entries.size() == 1);
    CHECK(mock.calls() == 1);
  }

  TEST_CASE("both agent requests are in flight at the same time") {
    std::mutex m;
    std::condition_variable cv;
    int arrived = 0;
    bool overlapped = false;
    ScriptedBackend backend([&](const ChatRequest& req, const SendOptions&, std::size_t) {
      std::unique_lock lock(m);
      ++arrived;
      cv.notify_all();
      overlapped = cv.wait_for(lock, std::chrono::seconds(5), [&] { return arrived >= 2; }) || overlapped;
      return req.system_prompt.starts_with("You are recalling real")
                 ? std::string(R"([{"name":"P","nationality":"Irish"}])")
                 : std::string(R"([{"name":"M","nationality":"Welsh"}])");
    });
    RecallContext ctx{backend, nats(), Granularity::nationality, "m", 4};
    const auto r = run_dual_recall("Some Name", ctx);
    CHECK(overlapped);
    CHECK(r.person.recall.entries.at(0).nationality.str() == "Irish");
    CHECK(r.media.recall.entries.at(0).nationality.str() == "Welsh");
  }

  TEST_CASE("result does not depend on which agent finishes first") {
    for (int slow_person = 0; slow_person < 2; ++slow_person) {
      ScriptedBackend backend([&](const ChatRequest& req, const SendOptions&, std::size_t) {
        const bool person = req.system_prompt.starts_with("You are recalling real");
        if (person == (slow_person == 1)) std::this_thread::sleep_for(std::chrono::milliseconds(20));
        return person ? std::string(R"([{"name":"P","nationality":"Irish"}])")
                      : std::string(R"([{"name":"M","nationality":"Welsh"}])");
      });
      RecallContext ctx{backend, nats(), Granularity::nationality, "m", 4};
      const auto r = run_dual_recall("Some Name", ctx);
      CHECK(r.person.recall.entries.at(0).person == "P");
      CHECK(r.media.recall.entries.at(0).person == "M");
    }
  }

  TEST_CASE("unparseable output is re-asked once with the cache bypassed") {
    ScriptedBackend backend([](const ChatRequest&, const SendOptions&, std::size_t i) {
      return i == 0 ? std::string("sorry, no idea") : std::string(R"([{"name":"A","nationality":"Irish"}])");
    });
    RecallContext ctx{backend, nats(), Granularity::nationality, "m", 4};
    const auto out = run_agent(AgentKind::person, "A", ctx);
    CHECK(out.calls == 1);
    CHECK(out.reprompts == 1);
    CHECK(out.recall.entries.size() == 1);
    CHECK(backend.bypassed() == std::vector<bool>{false, true});
  }

  TEST_CASE("a second unparseable reply degrades to an empty recall") {
    ScriptedBackend backend([](const ChatRequest&, const SendOptions&, std::size_t) {
      return std::string("still nothing");
    });
    RecallContext ctx{backend, nats(), Granularity::nationality, "m", 4};
    const auto out = run_agent(AgentKind::media, "A", ctx);
    CHECK(out.recall.empty());
    CHECK(out.reprompts == 1);
    CHECK(backend.calls() == 2);
  }

  TEST_CASE("an empty array is parseable and not re-asked") {
    ScriptedBackend backend([](const ChatRequest&, const SendOptions&, std::size_t) { return std::string("[]"); });
    RecallContext ctx{backend, nats(), Granularity::nationality, "m", 4};
    const auto out = run_agent(AgentKind::person, "A", ctx);
    CHECK(out.reprompts == 0);
    CHECK(backend.calls() == 1);
  }

  TEST_CASE("backend errors degrade the failing agent only") {
    ScriptedBackend backend([](const ChatRequest& req, const SendOptions&, std::size_t) -> std::string {
      if (req.system_prompt.starts_with("You are recalling real")) {
        throw BackendError(BackendError::Kind::transport, "down");
      }
      return R"([{"name":"M","nationality":"Welsh"}])";
    });
    RecallContext ctx{backend, nats(), Granularity::nationality, "m", 4};
    const auto r = run_dual_recall("X", ctx);
    CHECK(r.person.failed);
    CHECK(r.person.recall.empty());
    CHECK_FALSE(r.media.failed);
    CHECK(r.media.recall.entries.size() == 1);
  }

  TEST_CASE("both agents failing gives two empty recalls") {
    ScriptedBackend backend([](const ChatRequest&, const SendOptions&, std::size_t) -> std::string {
      throw BackendError(BackendError::Kind::timeout, "slow");
    });
    RecallContext ctx{backend, nats(), Granularity::nationality, "m", 4};
    const auto r = run_dual_recall("X", ctx);
    CHECK(r.person.recall.empty());
    CHECK(r.media.recall.empty());
    CHECK_THROWS_AS(run_dual_recall("", ctx), std::invalid_argument);
  }

  TEST_CASE("recall entries serialize with source and emit index") {
    RecallEntry e{"Natalie Cook", nats().at("Australian"), AgentKind::media, 3};
    const auto j = to_json(e);
    CHECK(j["person"] == "Natalie Cook");
    CHECK(j["nationality"] == "Australian");
    CHECK(j["source"] == "media");
    CHECK(j["emit_index"] == 3);
  }
}
