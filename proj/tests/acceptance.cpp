// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <sys/wait.h>

#include "geoquiz/content.hpp"
#include "geoquiz/engine.hpp"
#include "geoquiz/geo.hpp"
#include "geoquiz/simulator.hpp"
#include "geoquiz/store.hpp"
#include "support.hpp"

#ifndef SIMULATE_EXE
#error "SIMULATE_EXE must be defined by the build"
#endif

namespace {

using namespace geoquiz;
using nlohmann::json;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void expect(bool ok, const std::string& what) {
        if (ok) return;
        if (!pass) detail << "; ";
        pass = false;
        detail << what;
    }
};

Outcome trigger_boundary() {
    Outcome o;
    const geo::GeoPoint center(41.12584, 16.86713);
    auto pack = std::make_shared<content::ContentPack>();
    pack->settings.languages = {"en"};
    pack->settings.topics = {"history"};
    pack->pois.push_back({"synthetic", "Synthetic", center, 200.0, "q", "history", {}});
    content::QuizQuestion q{"q.1", {{"en", "?"}}, {{{"en", "a"}}, {{"en", "b"}}}, 0, content::Difficulty::easy, "history"};
    pack->messages.quizzes.push_back({"q", {q}});

    const auto fires = [&](const geo::GeoPoint& p) {
        engine::Session s("u", content::Difficulty::easy, engine::vehicle_catalog().front(), "en", pack);
        return !s.update_position(p, 0).empty();
    };
    const auto edge = testsupport::bracket_north(center, 200.0);
    const double at_edge = geo::haversine_distance(center, edge.at_or_above);
    for (double bearing : {0.0, 45.0, 123.0, 270.0}) {
        o.expect(fires(geo::destination(center, bearing, 199.9)), "199.9 m did not fire");
        o.expect(!fires(geo::destination(center, bearing, 200.1)), "200.1 m fired");
    }
    o.expect(std::abs(at_edge - 200.0) < 1e-6, "boundary bracket is not at 200.0 m");
    o.expect(!fires(edge.at_or_above), "200.0 m fired");
    o.expect(fires(edge.below), "just under 200.0 m did not fire");
    o.expect(!geo::within_radius(edge.at_or_above, center, 200.0), "within_radius true at 200.0 m");
    if (o.pass) o.detail << "199.9 m fires; 200.0 m (" << at_edge << ") and 200.1 m do not";
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    const auto pack = testsupport::demo_pack();
    o.expect(pack->pois.size() >= 5, "demo pack has fewer than 5 POIs");
    o.expect(pack->settings.topics.size() == 3, "demo pack does not have 3 topics");

    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240501);
    std::uniform_real_distribution<double> lat(41.100, 41.140), lon(16.855, 16.895), speed(2.0, 12.0),
        noise(0.0, 15.0);
    int matched = 0, fired = 0;
    for (int i = 0; i < 500; ++i) {
        std::vector<geo::GeoPoint> wps;
        for (int k = 0, n = 2 + static_cast<int>(rng() % 5); k < n; ++k) wps.emplace_back(lat(rng), lon(rng));
        const auto trace = sim::generate_trace(wps, {speed(rng), 1.0, noise(rng), rng()});
        sim::Scenario scenario;
        scenario.difficulty = i % 2 ? content::Difficulty::hard : content::Difficulty::easy;
        scenario.policy = static_cast<sim::AnswerPolicy>(i % 3);
        scenario.seed = rng();
        const auto report = sim::replay(trace, scenario, pack);
        matched += report.match;
        fired += static_cast<int>(report.triggers_fired.size());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.expect(matched == 500, std::to_string(500 - matched) + " traces mismatched");
    o.expect(seconds < 60.0, "took " + std::to_string(seconds) + " s");
    o.expect(fired > 0, "no trace fired any trigger");
    if (o.pass) o.detail << "500/500 match, " << fired << " triggers, " << seconds << " s";
    return o;
}

Outcome geodesy() {
    Outcome o;
    std::mt19937_64 rng(4242);
    const double half = 25.0 / 111.195;
    std::uniform_real_distribution<double> lat(41.125 - half, 41.125 + half),
        lon(16.866 - half / std::cos(41.125 * std::numbers::pi / 180.0), 16.866 + half / std::cos(41.125 * std::numbers::pi / 180.0));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double a1 = lat(rng), o1 = lon(rng), a2 = lat(rng), o2 = lon(rng);
        const double d = geo::haversine_distance(geo::GeoPoint(a1, o1), geo::GeoPoint(a2, o2));
        worst = std::max(worst, std::abs(d - testsupport::law_of_cosines_m(a1, o1, a2, o2)));
    }
    const double equator = geo::haversine_distance(geo::GeoPoint(0, 0), geo::GeoPoint(0, 1));
    const double equator_err = std::abs(equator - 6'371'000.0 * std::numbers::pi / 180.0);
    o.expect(worst < 0.5, "max oracle deviation " + std::to_string(worst) + " m");
    o.expect(equator_err < 1e-3, "equatorial degree off by " + std::to_string(equator_err) + " m");
    if (o.pass) o.detail << "max deviation " << worst << " m over 1000 pairs; equator error " << equator_err << " m";
    return o;
}

Outcome result_semantics() {
    Outcome o;
    store::Store st({{}, store::HashCost::minimal, false, {}});
    const std::string user = st.register_user("r@x.it", "rita", "s3cretpw!");
    const auto pack = testsupport::demo_pack();
    const auto play = [&](int wrong) {
        engine::Session s(user, content::Difficulty::easy, engine::vehicle_catalog().front(), "en", pack);
        const auto ev = s.update_position(pack->find_poi("castello")->position, 0).at(0);
        const auto& quiz = s.begin_quiz(ev);
        for (std::size_t i = 0; i < quiz.questions.size(); ++i) {
            const auto& q = s.active_quiz()->questions[i];
            s.answer(static_cast<int>(i), static_cast<int>(i) < wrong ? (q.correct_index + 1) % 2 : q.correct_index);
        }
        return s.complete_quiz();
    };
    const std::string key = "q_castello::" + user;
    o.expect(engine::save_result(user, play(2), false, st, 1.0) == SaveOutcome::stored, "first save not stored");
    const auto first = st.get_result(key);
    o.expect(first && first->score == 20, "first save not readable under " + key);
    o.expect(engine::save_result(user, play(0), false, st, 2.0) == SaveOutcome::rejected_exists,
             "repeat without overwrite not rejected");
    o.expect(st.get_result(key) == first, "rejected save changed the stored record");
    o.expect(engine::save_result(user, play(0), true, st, 3.0) == SaveOutcome::stored, "overwrite not stored");
    o.expect(st.get_result(key) && st.get_result(key)->score == 40, "overwrite not visible");
    const auto split = split_result_key(result_key("q_castello", user));
    o.expect(result_key("q_castello", user) == key, "key is not questionnaire::user");
    o.expect(split && split->first == "q_castello" && split->second == user, "key does not round-trip");
    if (o.pass) o.detail << "stored 20, rejected 40 (record unchanged), overwrite 40; key " << key;
    return o;
}

Outcome your_results() {
    Outcome o;
    testsupport::ServerFixture fx;
    auto c = fx.client();
    const std::string token = testsupport::signup(c, "fresh");
    const auto r = testsupport::get(c, "/api/results", token);
    const auto names = testsupport::demo_pack()->questionnaire_names();
    o.expect(r.status == 200, "GET /api/results returned " + std::to_string(r.status));
    const auto& rows = r.json["rows"];
    o.expect(rows.is_array() && rows.size() == names.size(), "expected one row per questionnaire");
    for (std::size_t i = 0; o.pass && i < names.size(); ++i) {
        o.expect(rows[i]["questionnaire"] == names[i], "row " + std::to_string(i) + " out of pack order");
        o.expect(rows[i]["score"].is_null(), "row " + std::to_string(i) + " has a score");
    }
    if (o.pass) o.detail << rows.size() << " rows, all empty, pack order";
    return o;
}

Outcome validation_corpus() {
    Outcome o;
    const auto base = content::read_pack_directory(testsupport::demo_pack_dir());
    const auto entries_of = [](const content::PackDocuments& docs) {
        auto parsed = content::parse_content_pack(docs);
        const auto* report = std::get_if<content::ValidationReport>(&parsed);
        return report ? report->entries : std::vector<content::ValidationEntry>{};
    };
    o.expect(entries_of(base).empty(), "demo pack has validation entries");
    const auto mutations = testsupport::demo_mutations();
    o.expect(mutations.size() == 10, "corpus does not have 10 packs");
    for (const auto& m : mutations) {
        auto docs = base;
        m.apply(docs);
        const auto entries = entries_of(docs);
        o.expect(entries.size() == 1 && entries[0].rule == m.rule,
                 m.name + ": " + std::to_string(entries.size()) + " entries");
    }
    if (o.pass) o.detail << "10 mutated packs x 1 entry; demo pack 0 entries";
    return o;
}

Outcome security_floor() {
    Outcome o;
    const auto dir = testsupport::temp_dir("acceptance-security");
    const std::string password = "Plaintext-Canary-77";
    {
        testsupport::ServerFixture fx(testsupport::demo_pack(), dir / "store.log");
        auto c = fx.client();
        std::vector<std::string> bodies;
        const auto keep = [&](const testsupport::HttpReply& r) {
            bodies.push_back(r.body);
            return r;
        };
        keep(testsupport::post(c, "/api/register",
                               {{"email", "sec@x.it"}, {"username", "secure"}, {"password", password}}));
        const std::string token =
            keep(testsupport::post(c, "/api/login", {{"identifier", "secure"}, {"password", password}})).json["token"];
        keep(testsupport::get(c, "/api/pack"));
        keep(testsupport::get(c, "/api/me", token));
        const std::string sid = keep(testsupport::post(c, "/api/session", {{"difficulty", "easy"}}, token)).json["session_id"];
        const auto& pack = *testsupport::demo_pack();
        double t = 0;
        for (const auto& poi : pack.pois) {
            auto view = keep(testsupport::post(c, "/api/session/" + sid + "/position",
                                               {{"lat", poi.position.lat()}, {"lon", poi.position.lon()}, {"t", t++}},
                                               token))
                            .json["active_quiz"];
            while (!view.is_null()) {
                const std::string qname = view["questionnaire"];
                json last;
                for (int i = view["next_question"].get<int>(); i < view["question_count"].get<int>(); ++i)
                    last = keep(testsupport::post(c, "/api/session/" + sid + "/quiz/" + qname + "/answer",
                                                  {{"question_index", i}, {"choice_index", 0}}, token))
                               .json;
                keep(testsupport::post(c, "/api/results/" + qname, json::object(), token));
                view = last["active_quiz"];
            }
        }
        keep(testsupport::get(c, "/api/results", token));
        keep(testsupport::get(c, "/api/leaderboard", token));
        for (const auto& b : bodies) o.expect(b.find("correct_index") == std::string::npos, "correct_index in response");

        const std::vector<std::pair<std::string, std::string>> authed{
            {"GET", "/api/me"},
            {"GET", "/api/results"},
            {"GET", "/api/leaderboard"},
            {"POST", "/api/logout"},
            {"POST", "/api/session"},
            {"POST", "/api/session/" + sid + "/position"},
            {"POST", "/api/session/" + sid + "/quiz/q_castello/answer"},
            {"POST", "/api/results/q_castello"},
        };
        for (const auto& [method, path] : authed) {
            const auto r = method == "GET" ? testsupport::get(c, path) : testsupport::post(c, path, json::object());
            o.expect(r.status == 401, method + " " + path + " -> " + std::to_string(r.status));
        }
        std::ifstream in(dir / "store.log", std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        o.expect(!bytes.str().empty(), "store file empty");
        o.expect(bytes.str().find(password) == std::string::npos, "plaintext password in store file");
        o.expect(bytes.str().find(token) == std::string::npos, "raw token in store file");
        if (o.pass)
            o.detail << bytes.str().size() << " store bytes clean; " << bodies.size() << " responses clean; "
                     << authed.size() << " authed routes 401";
    }
    std::filesystem::remove_all(dir);
    return o;
}

int run_command(const std::string& command) {
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome end_to_end() {
    Outcome o;
    const auto dir = testsupport::temp_dir("acceptance-e2e");
    testsupport::ServerFixture fx;
    const auto report_path = dir / "report.json";
    const std::string command = std::string(SIMULATE_EXE) + " --pack " + testsupport::demo_pack_dir().string() +
                                " --route " + testsupport::demo_route().string() + " --api " + fx.url() +
                                " --user e2e_rider --password e2e-pass-123 --policy always-correct" +
                                " --difficulty easy --report " + report_path.string() + " > /dev/null 2>&1";
    const int code = run_command(command);
    o.expect(code == 0, "simulate exited " + std::to_string(code));

    json report = json::object();
    if (std::ifstream in(report_path); in) report = json::parse(in, nullptr, false);
    o.expect(report.value("quizzes_completed", -1) == 3, "quizzes_completed != 3");
    o.expect(report.value("match", false), "report does not match the oracle");

    // Expected total: question count at easy x easy points, per fired POI.
    const auto& pack = *testsupport::demo_pack();
    int expected = 0;
    for (const auto& id : report.value("triggers_fired", std::vector<std::string>{})) {
        const auto* poi = pack.find_poi(id);
        for (const auto& q : pack.messages.find_quiz(poi->message_id)->questions)
            if (q.difficulty == content::Difficulty::easy) expected += poi->points.easy;
    }
    o.expect(expected == 100, "expected total " + std::to_string(expected) + ", not 100");

    std::string user_id;
    int shown = -1;
    for (const auto& row : fx.store().leaderboard(100))
        if (row.username == "e2e_rider") {
            user_id = row.user_id;
            shown = row.points;
        }
    o.expect(!user_id.empty(), "user missing from leaderboard");
    o.expect(fx.store().fetch_results(user_id).size() == 3, "saved results != 3");
    o.expect(shown == expected, "leaderboard shows " + std::to_string(shown));

    auto c = fx.client();
    const std::string token = testsupport::post(c, "/api/login", {{"identifier", "e2e_rider"}, {"password", "e2e-pass-123"}})
                                  .json.value("token", "");
    const auto board = testsupport::get(c, "/api/leaderboard?n=10", token);
    bool listed = false;
    for (const auto& e : board.json["entries"])
        listed |= e["username"] == "e2e_rider" && e["points"] == expected;
    o.expect(listed, "GET /api/leaderboard does not list the user with " + std::to_string(expected));
    if (o.pass) o.detail << "exit 0, 3 quizzes, 3 saved results, leaderboard " << shown;
    std::filesystem::remove_all(dir);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, Outcome (*)()>> criteria{
        {"trigger rule fidelity", trigger_boundary},
        {"engine/oracle equivalence", oracle_equivalence},
        {"geodesy accuracy", geodesy},
        {"result semantics", result_semantics},
        {"your results contract", your_results},
        {"content validation completeness", validation_corpus},
        {"security floor", security_floor},
        {"end-to-end scenario", end_to_end},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << o.detail.str() << ")" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
