// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <panosearch/action.hpp>
#include <panosearch/agent.hpp>
#include <panosearch/errors.hpp>
#include <panosearch/policies.hpp>
#include <panosearch/remote_agent.hpp>
#include <panosearch/scoring.hpp>

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

using namespace panosearch;
using pstest::Gen;
using pstest::make_task;

namespace
{

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path fixture(const std::string& name)
{
    char const* dir = std::getenv("PANOSEARCH_FIXTURES");
    REQUIRE(dir != nullptr);
    return std::filesystem::path(dir) / name;
}

ImageRef path_image(int turn)
{
    return {"turn_" + std::to_string(turn) + ".png", nullptr};
}

Panorama flat_pano()
{
    return Panorama(RgbImage(64, 32, {100, 100, 100}), "flat");
}

EpisodeConfig blind_config()
{
    EpisodeConfig cfg;
    cfg.render_observations = false;
    return cfg;
}

Action random_action(Gen& g)
{
    switch (g.integer(0, 1))
    {
        case 0: return Rotate {g.integer(-100000, 100000), g.integer(-1000, 1000)};
        default: return Submit {g.integer(-720, 720), g.integer(-90, 90)};
    }
}

} // namespace

TEST_CASE("render then parse is the identity")
{
    Gen g(40);
    std::string const thinkChars = "abc XYZ 0123,.()<>/\n\t";
    for (int i = 0; i < 10000; ++i)
    {
        auto const a = random_action(g);
        std::string think;
        for (int k = g.integer(0, 30); k > 0; --k)
            think += thinkChars[static_cast<std::size_t>(g.integer(0, int(thinkChars.size()) - 1))];
        // a think text that happens to contain a tag is not expressible
        if (think.find("<think>") != std::string::npos || think.find("</think>") != std::string::npos)
            continue;
        auto const parsed = parse_response(render_response(think, a));
        REQUIRE(parsed.well_formed);
        REQUIRE(parsed.action == a);
        REQUIRE(parsed.think_text == think);
    }
}

TEST_CASE("response grammar")
{
    auto ok = [](std::string_view s) { return parse_response(s).well_formed; };
    auto act = [](std::string_view s) { return parse_response(s).action; };

    CHECK(act("<think>x</think><answer>rotate(-45,0)</answer>") == Action {Rotate {-45, 0}});
    CHECK(act("<think>x</think><answer>submit(285,-5)</answer>") == Action {Submit {285, -5}});
    CHECK(act("  <think>x</think>\n<answer> rotate( 10 , -3 ) </answer>\n") == Action {Rotate {10, -3}});
    CHECK(act("<think></think><answer>rotate(+7,0)</answer>") == Action {Rotate {7, 0}});

    CHECK_FALSE(ok("<think>x</think><answer>rotate(10.5,0)</answer>"));
    CHECK_FALSE(ok("<think>x</think><answer>rotate(10)</answer>"));
    CHECK_FALSE(ok("<think>x</think><answer>rotate(1,2,3)</answer>"));
    CHECK_FALSE(ok("<think>x</think><answer>Rotate(1,2)</answer>"));
    CHECK_FALSE(ok("<think>x</think><answer>turn(1,2)</answer>"));
    CHECK_FALSE(ok("<answer>rotate(1,2)</answer>"));
    CHECK_FALSE(ok("<think>x<answer>rotate(1,2)</answer>"));
    CHECK_FALSE(ok("<think>x</think><answer>rotate(1,2)"));
    CHECK_FALSE(ok("<think>x</think><answer>rotate(1,2)</answer> trailing"));
    CHECK_FALSE(ok("<think>x</think><answer>rotate(99999999999,0)</answer>"));
    CHECK_FALSE(ok(""));
    // two actions in one answer
    CHECK_FALSE(ok("<think>x</think><answer>rotate(1,2) submit(1,2)</answer>"));
    // two answers
    CHECK_FALSE(ok("<think>x</think><answer>rotate(1,2)</answer><answer>submit(1,2)</answer>"));

    auto const bad = parse_response("no tags at all");
    CHECK(std::get<InvalidAction>(bad.action).raw_text == "no tags at all");
    CHECK(action_text(bad.action) == "None");
    CHECK(action_text(Rotate {-30, -5}) == "rotate(-30,-5)");
}

TEST_CASE("system prompts")
{
    auto const hos = make_prompt_bundle(TaskType::HOS);
    auto const hps = make_prompt_bundle(TaskType::HPS);
    CHECK(hos.system_text.find("object searching") != std::string::npos);
    CHECK(hps.system_text.find("navigation tasks") != std::string::npos);
    CHECK(hps.system_text.find("obstacles or gaps") != std::string::npos);
    for (auto const* b: {&hos, &hps})
    {
        CHECK(b->system_text.find("Yaw angle > 0 means rotate to the right, yaw angle < 0 means rotate to the left.") !=
              std::string::npos);
        CHECK_FALSE(b->few_shot.has_value());
        CHECK(b->full_system_text().ends_with("<answer>rotate(-45,0)</answer>"));
    }
    auto const typo = make_prompt_bundle(TaskType::HOS, {false, true});
    CHECK(typo.system_text.find("Yaw angle < 0 means rotate to the right") != std::string::npos);

    auto const fs = make_prompt_bundle(TaskType::HOS, {true, false});
    REQUIRE(fs.few_shot.has_value());
    CHECK(fs.few_shot->find("(315,0)") != std::string::npos);
    CHECK(fs.few_shot->find("(285,-5)") != std::string::npos);
    CHECK(fs.full_system_text().find(*fs.few_shot) != std::string::npos);

    auto const turn = render_user_turn(hos, "None", "Invalid action.", true, "Find it.");
    CHECK(turn.starts_with("After your answer, the extracted valid action is None.\nThe environment feedback is: "
                           "Invalid action.\ndone: True\nAfter that, the observation is:\n<image>\n"
                           "Human Instruction: Find it.\n"));
    // slot values are not re-expanded
    auto const literal = render_user_turn(hos, "{instruction}", "{done}", false, "x");
    CHECK(literal.find("valid action is {instruction}.") != std::string::npos);
    CHECK(literal.find("feedback is: {done}\n") != std::string::npos);
}

TEST_CASE("few-shot prompt matches the golden transcript")
{
    auto const pano = flat_pano();
    auto task = make_task(TaskType::HOS, AngularBox(Direction(285, -5), 10, 10));
    auto [state, obs] = reset(task, 0, blind_config(), pano);
    step(state, Rotate {-45, 0}, pano,
         "<think>I need to find the coffee machine. I can see a table on on my left, a couch in front of me, and a door "
         "to the right. The coffee machine is likely on the table, which is to my left.</think>"
         "<answer>rotate(-45,0)</answer>");
    step(state, Rotate {-30, -5}, pano,
         "<think>By turning left I see a kitchen table. The coffee machine is a bit lower and to the left.</think>\n"
         "<answer>rotate(-30,-5)</answer>");

    auto const prompt = build_prompt(state, path_image, {true, false});
    auto const text = render_transcript(prompt);
    auto const golden = fixture("prompt_hos_few_shot.txt");
    if (std::getenv("PANOSEARCH_UPDATE_GOLDEN") != nullptr)
        std::ofstream(golden, std::ios::binary) << text;
    CHECK(text == read_file(golden));

    REQUIRE(prompt.size() == 1 + 2 * 2 + 1);
    CHECK(prompt.back().text().find("(285,-5)") != std::string::npos);
    CHECK(prompt.back().image_count() == 1);
}

TEST_CASE("only the newest window of user messages keep their image")
{
    Gen g(41);
    auto const pano = flat_pano();
    for (int trial = 0; trial < 200; ++trial)
    {
        auto cfg = blind_config();
        cfg.history_window = g.integer(1, 8);
        cfg.max_turns = 12;
        auto const task = make_task(TaskType::HPS, AngularBox(Direction(200, 0), 5, 30));
        auto [state, obs] = reset(task, 0, cfg, pano);
        int const steps = g.integer(0, 11);
        for (int i = 0; i < steps; ++i)
            step(state, g.coin(0.2) ? Action {InvalidAction {"?"}} : Action {Rotate {g.integer(-5, 5), 0}}, pano);

        auto const prompt = build_prompt(state, path_image);
        std::size_t images = 0;
        std::size_t users = 0;
        for (auto const& m: prompt)
        {
            images += m.image_count();
            users += m.role == Role::User;
            REQUIRE(m.image_count() <= 1);
        }
        REQUIRE(images <= static_cast<std::size_t>(cfg.history_window));
        REQUIRE(users == std::min<std::size_t>(steps, cfg.history_window) + 1);
        REQUIRE(prompt.back().image_count() == 1);
        REQUIRE(prompt.back().parts[1].image.path == "turn_" + std::to_string(steps) + ".png");
        REQUIRE(prompt.front().role == Role::System);
    }
}

TEST_CASE("invalid actions show as None with the invalid feedback")
{
    auto const pano = flat_pano();
    auto const task = make_task(TaskType::HOS, AngularBox(Direction(200, 0), 10, 10));
    auto [state, obs] = reset(task, 0, blind_config(), pano);
    step(state, InvalidAction {"hmm"}, pano, "hmm");
    auto const prompt = build_prompt(state, path_image);
    REQUIRE(prompt.size() == 4);
    CHECK(prompt[2].text() == "hmm");
    CHECK(prompt[3].text().find("valid action is None.") != std::string::npos);
    CHECK(prompt[3].text().find(std::string(kInvalidActionFeedback)) != std::string::npos);
    CHECK(prompt[3].text().find("done: False") != std::string::npos);
}

TEST_CASE("scripted baselines")
{
    Gen g(42);
    auto const pano = flat_pano();

    SUBCASE("oracle reaches and submits within two turns")
    {
        for (int i = 0; i < 300; ++i)
        {
            auto const type = g.coin() ? TaskType::HOS : TaskType::HPS;
            auto const task = make_task(type, g.box());
            auto [state, obs] = reset(task, static_cast<std::size_t>(g.integer(0, 3)), blind_config(), pano);
            OracleAgent agent;
            while (!state.done())
            {
                auto const parsed = parse_response(agent.respond(state, {}));
                REQUIRE(parsed.well_formed);
                step(state, parsed.action, pano);
            }
            REQUIRE(state.success);
            REQUIRE(state.turn <= 2);
        }
    }

    SUBCASE("random agent is deterministic per seed")
    {
        auto const task = make_task(TaskType::HOS, AngularBox(Direction(200, 0), 10, 10));
        auto run = [&](std::uint64_t seed) {
            auto [state, obs] = reset(task, 0, blind_config(), pano);
            RandomAgent agent(seed);
            std::vector<std::string> out;
            while (!state.done())
            {
                out.push_back(agent.respond(state, {}));
                step(state, parse_response(out.back()).action, pano);
            }
            return out;
        };
        CHECK(run(7) == run(7));
        CHECK(run(7) != run(8));
        RandomPolicy p(3);
        auto [state, obs] = reset(task, 0, blind_config(), pano);
        int submits = 0;
        for (int i = 0; i < 20000; ++i)
        {
            auto const a = p.next(state);
            if (auto const* r = std::get_if<Rotate>(&a))
            {
                REQUIRE(r->dyaw_deg >= -180);
                REQUIRE(r->dyaw_deg < 180);
                REQUIRE(std::abs(r->dpitch_deg) <= RandomPolicy::kPitchRange);
            }
            else
            {
                ++submits;
            }
        }
        CHECK(std::fabs(submits / 20000.0 - RandomPolicy::kSubmitProbability) < 0.02);
    }

    SUBCASE("sweep")
    {
        CHECK(sweep_policy(ViewSpec::evaluation()) == Action {Rotate {81, 0}});
        CHECK(sweep_policy(ViewSpec(64, 64, 60), 0.5) == Action {Rotate {30, 0}});
        CHECK_THROWS_AS(sweep_policy(ViewSpec::evaluation(), 1.0), InvalidArgument);
        auto const task = make_task(TaskType::HOS, AngularBox(Direction(200, 0), 10, 10));
        auto [state, obs] = reset(task, 0, blind_config(), pano);
        SweepAgent agent;
        while (!state.done())
            step(state, parse_response(agent.respond(state, {})).action, pano);
        CHECK(state.reason == TerminationReason::TurnCap);
        CHECK(state.current.yaw_deg() == doctest::Approx(std::fmod(810.0, 360.0)));
    }

    SUBCASE("factory")
    {
        CHECK(make_baseline_agent("oracle", 1) != nullptr);
        CHECK(make_baseline_agent("random", 1) != nullptr);
        CHECK(make_baseline_agent("sweep", 1) != nullptr);
        CHECK_THROWS_AS(make_baseline_agent("gpt", 1), InvalidArgument);
        CHECK_FALSE(make_baseline_agent("random", 1)->wants_prompt());
        CHECK(episode_seed(1, "ep-a-0") == episode_seed(1, "ep-a-0"));
        CHECK(episode_seed(1, "ep-a-0") != episode_seed(2, "ep-a-0"));
        CHECK(episode_seed(1, "ep-a-0") != episode_seed(1, "ep-a-1"));
    }
}

namespace
{

// Minimal chat-completions endpoint driven by a handler.
class MockEndpoint
{
  public:
    explicit MockEndpoint(std::function<void(const httplib::Request&, httplib::Response&)> handler)
    {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockEndpoint()
    {
        server_.stop();
        thread_.join();
    }

    [[nodiscard]] EndpointConfig config() const
    {
        EndpointConfig c;
        c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/";
        c.model_name = "mock";
        c.backoff_initial_ms = 1;
        c.timeout_s = 5;
        return c;
    }

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

void reply(httplib::Response& res, const std::string& text)
{
    nlohmann::json j = {{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}};
    res.set_content(j.dump(), "application/json");
}

std::vector<ChatMessage> sample_prompt()
{
    auto const pano = flat_pano();
    auto const task = make_task(TaskType::HOS, AngularBox(Direction(200, 0), 10, 10));
    EpisodeConfig cfg;
    cfg.view = ViewSpec(16, 16, 90);
    auto [state, obs] = reset(task, 0, cfg, pano);
    auto const png = std::make_shared<std::vector<std::uint8_t>>(encode_png(obs.image.pixels));
    return build_prompt(state, [&](int t) { return ImageRef {"turn_" + std::to_string(t) + ".png", png}; });
}

} // namespace

TEST_CASE("chat request payload")
{
    auto const prompt = sample_prompt();
    EndpointConfig cfg;
    cfg.model_name = "m";
    cfg.temperature = 0.25;
    auto const j = build_chat_request(cfg, prompt);
    CHECK(j["model"] == "m");
    CHECK(j["temperature"] == 0.25);
    REQUIRE(j["messages"].size() == 2);
    CHECK(j["messages"][0]["role"] == "system");
    auto const& content = j["messages"][1]["content"];
    bool sawImage = false;
    for (auto const& part: content)
        if (part["type"] == "image_url")
        {
            sawImage = true;
            auto const url = part["image_url"]["url"].get<std::string>();
            CHECK(url.starts_with("data:image/png;base64,"));
            CHECK(decode_png(base64_decode(url.substr(22))).width() == 16);
        }
    CHECK(sawImage);

    auto noBytes = prompt;
    noBytes[1].parts[1].image.png.reset();
    CHECK_THROWS_AS(build_chat_request(cfg, noBytes), InvalidArgument);
}

TEST_CASE("remote agent over a mock endpoint")
{
    auto const prompt = sample_prompt();

    SUBCASE("verbatim text, auth header and body")
    {
        std::string seenAuth;
        nlohmann::json seenBody;
        MockEndpoint mock([&](const httplib::Request& req, httplib::Response& res) {
            seenAuth = req.get_header_value("Authorization");
            seenBody = nlohmann::json::parse(req.body);
            reply(res, "<think>ok</think><answer>rotate(5,0)</answer>");
        });
        ::setenv("PANOSEARCH_TEST_TOKEN", "sekrit", 1);
        auto cfg = mock.config();
        cfg.auth_token_env_var = "PANOSEARCH_TEST_TOKEN";
        RemoteAgent agent(std::make_shared<RemoteChatClient>(cfg));
        CHECK(agent.wants_prompt());
        EpisodeState dummy;
        CHECK(agent.respond(dummy, prompt) == "<think>ok</think><answer>rotate(5,0)</answer>");
        CHECK(seenAuth == "Bearer sekrit");
        CHECK(seenBody["model"] == "mock");
        CHECK(seenBody["messages"].size() == prompt.size());
    }

    SUBCASE("malformed model text is returned as is and parses to an invalid action")
    {
        MockEndpoint mock([&](const httplib::Request&, httplib::Response& res) { reply(res, "I would turn left"); });
        RemoteChatClient client(mock.config());
        auto const text = client.complete(prompt);
        CHECK(text == "I would turn left");
        CHECK_FALSE(parse_response(text).well_formed);
    }

    SUBCASE("transient failures are retried")
    {
        std::atomic<int> calls {0};
        MockEndpoint mock([&](const httplib::Request&, httplib::Response& res) {
            if (calls++ < 2)
            {
                res.status = calls == 1 ? 503 : 429;
                return;
            }
            reply(res, "fine");
        });
        auto cfg = mock.config();
        cfg.max_retries = 3;
        RemoteChatClient client(cfg);
        CHECK(client.complete(prompt) == "fine");
        CHECK(client.attempts_made() == 3);
    }

    SUBCASE("exhausted retries raise a transport error")
    {
        std::atomic<int> calls {0};
        MockEndpoint mock([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 500;
        });
        auto cfg = mock.config();
        cfg.max_retries = 2;
        RemoteChatClient client(cfg);
        CHECK_THROWS_AS(client.complete(prompt), TransportError);
        CHECK(calls == 3);
    }

    SUBCASE("client errors are not retried")
    {
        std::atomic<int> calls {0};
        MockEndpoint mock([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 400;
        });
        RemoteChatClient client(mock.config());
        CHECK_THROWS_AS(client.complete(prompt), TransportError);
        CHECK(calls == 1);
    }

    SUBCASE("garbage payload")
    {
        MockEndpoint mock([&](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
        RemoteChatClient client(mock.config());
        CHECK_THROWS_AS(client.complete(prompt), TransportError);
    }
}

TEST_CASE("unreachable endpoint and bad configuration")
{
    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:1/v1";
    cfg.model_name = "m";
    cfg.max_retries = 1;
    cfg.backoff_initial_ms = 1;
    cfg.timeout_s = 1;
    RemoteChatClient client(cfg);
    CHECK_THROWS_AS(client.complete(sample_prompt()), TransportError);
    CHECK(client.attempts_made() == 2);

    auto bad = cfg;
    ::unsetenv("PANOSEARCH_MISSING_TOKEN");
    bad.auth_token_env_var = "PANOSEARCH_MISSING_TOKEN";
    CHECK_THROWS_AS(RemoteChatClient {bad}, ConfigError);
    bad = cfg;
    bad.base_url = "ftp://x";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.model_name.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.max_concurrency = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
