#include <doctest.h>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include "neurotrack/server.hpp"
#include "neurotrack/service.hpp"

using namespace neurotrack;
using namespace neurotrack::service;

namespace {

json body(const Response& r) { return json::parse(r.body); }

std::shared_ptr<const TrainingResult> default_training(std::shared_ptr<const Simulator>& sim) {
    sim = std::make_shared<const Simulator>(SessionConfig{}, default_subject());
    return std::make_shared<const TrainingResult>(run_training(*sim));
}

std::vector<json> of_type(const std::vector<json>& msgs, const std::string& type) {
    std::vector<json> out;
    for (const auto& m : msgs) {
        if (m.value("type", "") == type) out.push_back(m);
    }
    return out;
}

}  // namespace

TEST_CASE("http api protocol and error codes") {
    SessionManager sessions;
    ApiHandler api(sessions);
    CHECK(api.handle("GET", "/sessions/none/state", "").status == 404);
    CHECK(api.handle("POST", "/sessions", R"({"config": {"bogus": 1}})").status == 422);
    CHECK(api.handle("POST", "/sessions", R"({"config": {"screen_width_px": -5}})").status == 422);
    CHECK(api.handle("POST", "/sessions", "{not json").status == 400);

    const auto created = api.handle("POST", "/sessions", R"({"subject": "default"})");
    REQUIRE(created.status == 201);
    const std::string id = body(created)["id"];
    CHECK(api.handle("POST", "/sessions/" + id + "/tasks", R"({"task": "fixed"})").status == 409);
    CHECK(api.handle("GET", "/sessions/" + id + "/export/model", "").status == 409);
    CHECK(api.handle("POST", "/sessions/" + id + "/tasks", R"({"task": "juggling"})").status == 422);

    const auto trained = api.handle("POST", "/sessions/" + id + "/train", "");
    REQUIRE(trained.status == 200);
    CHECK(body(trained)["filter_norms"].size() == 5);
    CHECK(body(trained).contains("regression_residual_rms"));

    REQUIRE(api.handle("POST", "/sessions/" + id + "/tasks", R"({"task": "fixed"})").status == 200);
    const auto trials = api.handle("GET", "/sessions/" + id + "/export/trials", "");
    CHECK(trials.content_type == "application/x-ndjson");
    CHECK(std::count(trials.body.begin(), trials.body.end(), '\n') == 96);
    const auto state = body(api.handle("GET", "/sessions/" + id + "/state", ""));
    CHECK(state["phase"] == "idle");
    CHECK(state["n_records"] == 96);
    CHECK(api.handle("GET", "/sessions/" + id + "/export/nothing", "").status == 404);
    CHECK(api.handle("GET", "/sessions/" + id + "/export/model", "").content_type == "application/octet-stream");
    CHECK(api.handle("DELETE", "/sessions/" + id + "/train", "").status == 405);
}

TEST_CASE("only one phase at a time") {
    SessionManager sessions;
    auto s = sessions.create(SessionConfig{}, subject_from_request(json("default")));
    s->train();
    auto stream = s->open_stream();
    CHECK(s->phase() == Phase::tracking);
    CHECK_THROWS_AS(s->run_task(TaskKind::fixed), HttpError);
    CHECK_THROWS_AS(s->open_stream(), HttpError);
    s->set_interactive_phase(Phase::idle);
    CHECK(s->run_task(TaskKind::random)["n_trials"] == 12);
}

TEST_CASE("sessions are isolated") {
    SessionManager sessions;
    auto a = sessions.create(SessionConfig{}, subject_from_request(json("default")));
    auto b = sessions.create(SessionConfig{}, subject_from_request(json("default")));
    CHECK(a->id() != b->id());
    a->train();
    CHECK(a->state()["trained"] == true);
    CHECK(b->state()["trained"] == false);
}

TEST_CASE("gaze held on a point: the cursor reaches it within 5 steps") {
    std::shared_ptr<const Simulator> sim;
    auto training = default_training(sim);
    for (const Vec2& goal : {Vec2(200, 150), Vec2(-250, -60), Vec2(0, 300), Vec2(200, 0)}) {
        InteractiveLoop loop(sim, training);
        loop.on_message(json{{"type", "command"}, {"name", "set_target"}, {"x", goal.x()}, {"y", goal.y()}}.dump(), 0.0);
        int hit_step = -1;
        for (int s = 0; s < 5 && hit_step < 0; ++s) {
            loop.on_message(json{{"type", "gaze"}, {"x", goal.x()}, {"y", goal.y()}, {"t", s + 0.5}}.dump(), s + 0.5);
            for (const auto& m : of_type(loop.step(s + 1.0), "trial_event")) hit_step = m["step_index"];
        }
        INFO("goal " << goal.transpose());
        CHECK(hit_step >= 0);
    }
}

TEST_CASE("no gaze holds the cursor; stale gaze holds too") {
    std::shared_ptr<const Simulator> sim;
    auto training = default_training(sim);
    InteractiveLoop loop(sim, training);
    for (int s = 0; s < 3; ++s) {
        const auto msgs = loop.step(s + 1.0);
        REQUIRE(msgs.size() == 1);
        CHECK(msgs[0]["held"] == true);
        CHECK(loop.cursor() == Vec2::Zero());
    }
    loop.on_message(R"({"type": "gaze", "x": 200, "y": 0, "t": 3.5})", 3.5);
    loop.step(4.0);
    const Vec2 moved = loop.cursor();
    CHECK(moved.norm() > 0.0);
    const auto stale = loop.step(6.6);  // gaze is 3.1 s old
    CHECK(stale[0]["held"] == true);
    CHECK(loop.cursor() == moved);
}

TEST_CASE("frames are coalesced to at most 30 per second and ordered") {
    std::shared_ptr<const Simulator> sim;
    auto training = default_training(sim);
    InteractiveLoop loop(sim, training);
    int last = -1;
    for (int s = 0; s < 3; ++s) {
        loop.on_message(R"({"type": "gaze", "x": -100, "y": 50})", s + 0.5);
        const auto frames = of_type(loop.step(s + 1.0), "frame");
        CHECK(frames.size() <= 30);
        CHECK(frames.size() >= 1);
        for (const auto& f : frames) {
            CHECK(f["step_index"].get<int>() >= last);
            last = f["step_index"];
            CHECK(f["rho"].size() == 8);
        }
        CHECK(frames.back()["cursor"][0].get<double>() == loop.cursor().x());
    }
}

TEST_CASE("malformed messages produce error frames") {
    std::shared_ptr<const Simulator> sim;
    auto training = default_training(sim);
    InteractiveLoop loop(sim, training);
    for (const char* text : {"{", "[1,2]", R"({"type": "gaze", "x": "a", "y": 1})", R"({"type": "dance"})",
                             R"({"type": "command", "name": "mode", "mode": "golf"})", R"({"type": "brush"})"}) {
        const auto out = loop.on_message(text, 0.0);
        REQUIRE(out.size() == 1);
        CHECK(out[0]["type"] == "error");
    }
}

TEST_CASE("snake mode: diagonal gaze leaves the snake unchanged") {
    std::shared_ptr<const Simulator> sim;
    auto training = default_training(sim);
    InteractiveLoop loop(sim, training);
    loop.on_message(R"({"type": "command", "name": "mode", "mode": "snake"})", 0.0);
    CHECK(loop.mode() == Phase::snake);
    const auto before = loop.snake().snake;
    for (int s = 0; s < 4; ++s) {
        loop.on_message(R"({"type": "gaze", "x": 250, "y": 250})", s + 0.5);
        const auto msgs = loop.step(s + 1.0);
        CHECK(of_type(msgs, "snake_state").size() == 1);
        CHECK(loop.snake().snake == before);
        CHECK(loop.cursor() == Vec2::Zero());
    }
}

TEST_CASE("painting mode streams paint state and records strokes") {
    std::shared_ptr<const Simulator> sim;
    auto training = default_training(sim);
    InteractiveLoop loop(sim, training);
    loop.on_message(R"({"type": "command", "name": "mode", "mode": "painting"})", 0.0);
    loop.on_message(R"({"type": "brush", "down": true})", 0.0);
    loop.on_message(R"({"type": "gaze", "x": 150, "y": 0})", 0.2);
    const auto msgs = loop.step(1.0);
    const auto paint = of_type(msgs, "paint_state");
    REQUIRE(paint.size() == 1);
    CHECK(paint[0]["points"].size() == 60);
    CHECK(loop.painting().strokes.size() == 1);
}

TEST_CASE("a trial event fires once per target") {
    std::shared_ptr<const Simulator> sim;
    auto training = default_training(sim);
    InteractiveLoop loop(sim, training);
    loop.on_message(R"({"type": "command", "name": "set_target", "x": 0, "y": 0, "radius": 400})", 0.0);
    loop.on_message(R"({"type": "gaze", "x": 0, "y": 0})", 0.5);
    const auto first = of_type(loop.step(1.0), "trial_event");
    REQUIRE(first.size() == 1);
    CHECK(first[0]["trial"] == 0);
    CHECK(first[0]["frame"] == 0);
    loop.on_message(R"({"type": "gaze", "x": 0, "y": 0})", 1.5);
    CHECK(of_type(loop.step(2.0), "trial_event").empty());
}

TEST_CASE("websocket stream end to end") {
    namespace beast = boost::beast;
    namespace asio = boost::asio;
    SessionManager sessions;
    auto s = sessions.create(SessionConfig{}, subject_from_request(json("default")));
    s->train();
    Server server({"127.0.0.1", 0, 2, 0.05}, sessions);
    const unsigned short port = server.start();

    asio::io_context ioc;
    asio::ip::tcp::resolver resolver(ioc);
    beast::websocket::stream<asio::ip::tcp::socket> ws(ioc);
    asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", "/sessions/" + s->id() + "/stream");
    CHECK(s->phase() == Phase::tracking);

    beast::flat_buffer buf;
    ws.read(buf);
    CHECK(json::parse(beast::buffers_to_string(buf.data()))["type"] == "state");
    buf.consume(buf.size());
    ws.write(asio::buffer(std::string(R"({"type": "gaze", "x": 180, "y": -90, "t": 0})")));
    ws.write(asio::buffer(std::string("garbage")));
    bool saw_error = false;
    int frames = 0, last_step = -1;
    bool ordered = true;
    while (frames < 40) {
        ws.read(buf);
        const json m = json::parse(beast::buffers_to_string(buf.data()));
        buf.consume(buf.size());
        if (m["type"] == "error") saw_error = true;
        if (m["type"] == "frame") {
            ++frames;
            ordered = ordered && m["step_index"].get<int>() >= last_step;
            last_step = m["step_index"];
            if (frames % 10 == 0) ws.write(asio::buffer(std::string(R"({"type": "gaze", "x": 180, "y": -90})")));
        }
    }
    CHECK(saw_error);
    CHECK(ordered);
    CHECK(last_step >= 1);
    ws.close(beast::websocket::close_code::normal);
    // the session returns to idle once the stream ends
    for (int i = 0; i < 100 && s->phase() != Phase::idle; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    CHECK(s->phase() == Phase::idle);

    // plain HTTP through the same server
    asio::ip::tcp::socket sock(ioc);
    asio::connect(sock, resolver.resolve("127.0.0.1", std::to_string(port)));
    beast::http::request<beast::http::string_body> req{beast::http::verb::get, "/sessions/" + s->id() + "/state", 11};
    req.set(beast::http::field::host, "127.0.0.1");
    beast::http::write(sock, req);
    beast::http::response<beast::http::string_body> res;
    beast::flat_buffer hb;
    beast::http::read(sock, hb, res);
    CHECK(res.result_int() == 200);
    CHECK(json::parse(res.body())["id"] == s->id());
    server.stop();
}
