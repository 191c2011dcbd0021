#include "geoquiz/simulator.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "geoquiz/engine.hpp"
#include "geoquiz/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace geoquiz::sim {

using nlohmann::json;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

geo::GeoPoint offset_en(const geo::GeoPoint& p, double east_m, double north_m) {
    const double lat = std::clamp(p.lat() + north_m / geo::kEarthRadiusM * kRadToDeg, -90.0, 90.0);
    const double coslat = std::max(std::cos(p.lat() * kDegToRad), 1e-12);
    const double lon = p.lon() + east_m / (geo::kEarthRadiusM * coslat) * kRadToDeg;
    return geo::GeoPoint(lat, lon);
}

// Chooses the option for one question under `policy`.
class Answerer {
public:
    Answerer(AnswerPolicy policy, std::uint64_t seed) : policy_(policy), rng_(seed) {}

    int choose(const content::QuizQuestion& q) {
        switch (policy_) {
            case AnswerPolicy::always_correct: return q.correct_index;
            case AnswerPolicy::always_first: return 0;
            case AnswerPolicy::seeded_random: return static_cast<int>(rng_() % q.options.size());
        }
        return 0;
    }

private:
    AnswerPolicy policy_;
    std::mt19937_64 rng_;
};

void finish_report(SimulationReport& report, std::span<const TimedPoint> trace,
                   std::span<const content::PointOfInterest> pois) {
    report.oracle_triggers = oracle_triggers(trace, pois);
    const std::set<std::string> fired(report.triggers_fired.begin(), report.triggers_fired.end());
    report.match = fired == report.oracle_triggers;
}

}  // namespace

std::vector<TimedPoint> generate_trace(std::span<const geo::GeoPoint> waypoints, const TraceParams& params) {
    if (waypoints.size() < 2) throw Error(ErrorKind::domain, "a trace needs at least two waypoints");
    if (!(params.speed_mps > 0.0)) throw Error(ErrorKind::domain, "speed must be positive");
    if (!(params.sample_period_s > 0.0)) throw Error(ErrorKind::domain, "sample period must be positive");
    if (!(params.noise_sigma_m >= 0.0)) throw Error(ErrorKind::domain, "noise sigma must be non-negative");

    std::vector<double> cumulative{0.0};
    for (std::size_t i = 1; i < waypoints.size(); ++i)
        cumulative.push_back(cumulative.back() + geo::haversine_distance(waypoints[i - 1], waypoints[i]));
    const double total_length = cumulative.back();
    const double duration = total_length / params.speed_mps;

    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> noise(0.0, params.noise_sigma_m > 0.0 ? params.noise_sigma_m : 1.0);

    const auto position_at = [&](double s) {
        std::size_t leg = 1;
        while (leg + 1 < cumulative.size() && cumulative[leg] < s) ++leg;
        const double leg_length = cumulative[leg] - cumulative[leg - 1];
        const double f = leg_length > 0.0 ? (s - cumulative[leg - 1]) / leg_length : 1.0;
        return geo::interpolate(waypoints[leg - 1], waypoints[leg], f);
    };

    std::vector<TimedPoint> trace;
    const auto emit = [&](geo::GeoPoint p, double t) {
        if (params.noise_sigma_m > 0.0) {
            const double east = noise(rng);
            const double north = noise(rng);
            p = offset_en(p, east, north);
        }
        trace.push_back({p, t});
    };

    const auto samples = static_cast<std::size_t>(std::floor(duration / params.sample_period_s + 1e-9));
    for (std::size_t k = 0; k <= samples; ++k) {
        const double t = static_cast<double>(k) * params.sample_period_s;
        emit(position_at(std::min(t * params.speed_mps, total_length)), t);
    }
    if (duration - trace.back().t > 1e-6 * params.sample_period_s) emit(waypoints.back(), duration);
    return trace;
}

std::set<std::string> oracle_triggers(std::span<const TimedPoint> trace,
                                      std::span<const content::PointOfInterest> pois) {
    std::set<std::string> hit;
    for (const auto& poi : pois)
        for (const auto& tp : trace)
            if (geo::haversine_distance(tp.point, poi.position) < poi.trigger_radius_m) {
                hit.insert(poi.id);
                break;
            }
    return hit;
}

std::string_view to_string(AnswerPolicy p) {
    switch (p) {
        case AnswerPolicy::always_correct: return "always-correct";
        case AnswerPolicy::always_first: return "always-first";
        case AnswerPolicy::seeded_random: return "seeded-random";
    }
    return "always-correct";
}

std::optional<AnswerPolicy> parse_answer_policy(std::string_view s) {
    if (s == "always-correct") return AnswerPolicy::always_correct;
    if (s == "always-first") return AnswerPolicy::always_first;
    if (s == "seeded-random") return AnswerPolicy::seeded_random;
    return std::nullopt;
}

std::string SimulationReport::to_json() const {
    const json j = {{"triggers_fired", triggers_fired},
                    {"quizzes_completed", quizzes_completed},
                    {"total_score", total_score},
                    {"oracle_triggers", oracle_triggers},
                    {"match", match}};
    return j.dump(2) + "\n";
}

SimulationReport replay(std::span<const TimedPoint> trace, const Scenario& scenario,
                        std::shared_ptr<const content::ContentPack> pack) {
    SimulationReport report;
    if (!trace.empty()) {
        engine::Session session("simulator", scenario.difficulty, engine::vehicle_catalog().front(),
                                scenario.language, pack);
        Answerer answerer(scenario.policy, scenario.seed);
        std::vector<engine::TriggerEvent> queue;
        for (const auto& tp : trace) {
            for (auto& ev : session.update_position(tp.point, tp.t)) {
                report.triggers_fired.push_back(ev.poi_id);
                queue.push_back(std::move(ev));
            }
            // Quizzes are played to completion before the next fix, so no
            // trigger is ever deferred past the end of the trace.
            for (std::size_t i = 0; i < queue.size(); ++i) {
                try {
                    session.begin_quiz(queue[i], tp.t);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::content) throw;
                    continue;
                }
                const auto* quiz = session.active_quiz();
                for (std::size_t q = 0; q < quiz->questions.size(); ++q)
                    session.answer(static_cast<int>(q), answerer.choose(quiz->questions[q]));
                report.total_score += session.complete_quiz().score;
                ++report.quizzes_completed;
            }
            queue.clear();
        }
    }
    finish_report(report, trace, pack->pois);
    return report;
}

namespace {

class ApiClient {
public:
    explicit ApiClient(const std::string& base_url) : client_(base_url) {
        if (!client_.is_valid()) throw Error(ErrorKind::io, "invalid service URL '" + base_url + "'");
        client_.set_connection_timeout(5);
        client_.set_read_timeout(30);
    }

    void set_token(const std::string& token) { token_ = token; }

    std::pair<int, json> post(const std::string& path, const json& body) {
        auto res = client_.Post(path, headers(), body.dump(), "application/json");
        return unwrap(res, path);
    }

    std::pair<int, json> get(const std::string& path) {
        auto res = client_.Get(path, headers());
        return unwrap(res, path);
    }

private:
    httplib::Client client_;
    std::string token_;

    httplib::Headers headers() const {
        httplib::Headers h;
        if (!token_.empty()) h.emplace("Authorization", "Bearer " + token_);
        return h;
    }

    static std::pair<int, json> unwrap(const httplib::Result& res, const std::string& path) {
        if (!res) throw Error(ErrorKind::io, "service unreachable (" + httplib::to_string(res.error()) + ") at " + path);
        json body = json::parse(res->body, nullptr, false);
        if (body.is_discarded()) body = json::object();
        return {res->status, std::move(body)};
    }
};

[[noreturn]] void unexpected(const std::string& what, int status, const json& body) {
    throw Error(ErrorKind::io, what + " failed with HTTP " + std::to_string(status) + ": " + body.dump());
}

}  // namespace

SimulationReport replay_api(std::span<const TimedPoint> trace, const Scenario& scenario,
                            const content::ContentPack& pack, const ApiTarget& target) {
    ApiClient api(target.base_url);
    const std::string identifier = target.username.empty() ? target.email : target.username;
    auto [status, body] = api.post("/api/login", {{"identifier", identifier}, {"password", target.password}});
    if (status == 401 && target.register_if_missing) {
        auto [rs, rb] = api.post("/api/register", {{"email", target.email},
                                                   {"username", target.username},
                                                   {"password", target.password},
                                                   {"vehicle_id", target.vehicle_id}});
        if (rs != 201) unexpected("registration", rs, rb);
        std::tie(status, body) = api.post("/api/login", {{"identifier", identifier}, {"password", target.password}});
    }
    if (status != 200) unexpected("login", status, body);
    api.set_token(body.at("token").get<std::string>());

    auto [ss, sb] = api.post("/api/session", {{"difficulty", content::to_string(scenario.difficulty)},
                                              {"vehicle_id", target.vehicle_id},
                                              {"language", scenario.language}});
    if (ss != 201) unexpected("session creation", ss, sb);
    const std::string session_path = "/api/session/" + sb.at("session_id").get<std::string>();

    SimulationReport report;
    Answerer answerer(scenario.policy, scenario.seed);

    // Answers every question of the quiz in `view`, then any quiz that the
    // service starts right after it.
    const auto play = [&](json view) {
        while (!view.is_null()) {
            const std::string qname = view.at("questionnaire").get<std::string>();
            const auto* quiz = pack.messages.find_quiz(qname);
            if (!quiz) throw Error(ErrorKind::io, "service offered unknown questionnaire '" + qname + "'");
            std::vector<const content::QuizQuestion*> questions;
            for (const auto& q : quiz->questions)
                if (q.difficulty == scenario.difficulty) questions.push_back(&q);
            if (questions.size() != view.at("question_count").get<std::size_t>())
                throw Error(ErrorKind::io, "question count mismatch for '" + qname + "'");

            json answer;
            for (std::size_t i = view.at("next_question").get<std::size_t>(); i < questions.size(); ++i) {
                auto [as, ab] = api.post(session_path + "/quiz/" + qname + "/answer",
                                         {{"question_index", i}, {"choice_index", answerer.choose(*questions[i])}});
                if (as != 200) unexpected("answer", as, ab);
                answer = std::move(ab);
            }
            if (!answer.value("done", false)) throw Error(ErrorKind::io, "quiz '" + qname + "' did not complete");
            report.total_score += answer.at("result").at("score").get<int>();
            ++report.quizzes_completed;
            if (target.save_results) {
                auto [rs, rb] = api.post("/api/results/" + qname, {{"overwrite", target.overwrite}});
                if (rs != 200 && !(rs == 409 && !target.overwrite)) unexpected("result save", rs, rb);
            }
            view = answer.value("active_quiz", json());
        }
    };

    for (const auto& tp : trace) {
        auto [ps, pb] = api.post(session_path + "/position",
                                 {{"lat", tp.point.lat()}, {"lon", tp.point.lon()}, {"t", tp.t}});
        if (ps != 200) unexpected("position update", ps, pb);
        for (const auto& trig : pb.at("triggers")) report.triggers_fired.push_back(trig.at("poi_id").get<std::string>());
        play(pb.value("active_quiz", json()));
    }
    finish_report(report, trace, pack.pois);
    return report;
}

std::vector<geo::GeoPoint> read_waypoints(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::io, "cannot read waypoints file " + file.string());
    std::vector<geo::GeoPoint> points;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        double lat = 0.0, lon = 0.0;
        char comma = 0;
        if (!(ls >> lat >> comma >> lon) || comma != ',')
            throw Error(ErrorKind::validation, file.string() + ":" + std::to_string(line_no) + ": expected 'lat,lon'");
        points.emplace_back(lat, lon);
    }
    return points;
}

}  // namespace geoquiz::sim
