#include "geoquiz/service.hpp"

#include <chrono>
#include <deque>
#include <optional>

#include "geoquiz/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace geoquiz::service {

using nlohmann::json;

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::auth: return 401;
        case ErrorKind::conflict:
        case ErrorKind::sequence:
        case ErrorKind::state: return 409;
        case ErrorKind::not_found: return 404;
        case ErrorKind::validation:
        case ErrorKind::domain:
        case ErrorKind::content: return 422;
        case ErrorKind::io: return 500;
    }
    return 500;
}

std::string_view api_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::domain: return "validation";
        case ErrorKind::state: return "conflict";
        default: return to_string(kind);
    }
}

struct Service::SessionSlot {
    std::mutex mutex;
    std::string id;
    std::string user_id;
    engine::Session session;
    std::deque<engine::TriggerEvent> queue;  // triggered, quiz not yet begun
    bool closed = false;

    SessionSlot(std::string sid, engine::Session s)
        : id(std::move(sid)), user_id(s.user_id()), session(std::move(s)) {}
};

namespace {

double now_seconds() {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, ErrorKind kind, const std::string& message, const std::string& field = {},
                std::optional<int> status = std::nullopt) {
    json body = {{"code", api_code(kind)}, {"message", message}};
    if (!field.empty()) body["field"] = field;
    send_json(res, status.value_or(http_status(kind)), body);
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) throw Error(ErrorKind::validation, "request body must be a JSON object");
    return body;
}

std::string require_string(const json& body, const char* field) {
    const auto it = body.find(field);
    if (it == body.end() || !it->is_string())
        throw Error(ErrorKind::validation, std::string("'") + field + "' is required and must be a string", field);
    return it->get<std::string>();
}

double require_number(const json& body, const char* field) {
    const auto it = body.find(field);
    if (it == body.end() || !it->is_number())
        throw Error(ErrorKind::validation, std::string("'") + field + "' is required and must be a number", field);
    return it->get<double>();
}

int require_int(const json& body, const char* field) {
    const auto it = body.find(field);
    if (it == body.end() || !it->is_number_integer())
        throw Error(ErrorKind::validation, std::string("'") + field + "' is required and must be an integer", field);
    return it->get<int>();
}

std::string bearer_token(const httplib::Request& req) {
    const std::string header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0)
        throw Error(ErrorKind::auth, "missing bearer token");
    return header.substr(prefix.size());
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const store::ValidationFailure& e) {
            send_error(res, ErrorKind::validation, e.what(), e.field());
        } catch (const Error& e) {
            send_error(res, e.kind(), e.what(), e.field());
        } catch (const json::exception&) {
            send_error(res, ErrorKind::validation, "malformed request body");
        } catch (const std::exception&) {
            send_error(res, ErrorKind::io, "internal error");
        }
    };
}

json quiz_view(const engine::QuizInstance& quiz, const content::ContentPack& pack, const std::string& lang) {
    json questions = json::array();
    for (std::size_t i = 0; i < quiz.questions.size(); ++i) {
        const auto& q = quiz.questions[i];
        json options = json::array();
        for (const auto& opt : q.options) options.push_back(content::localize(opt, lang, pack.settings));
        questions.push_back({{"index", i}, {"text", content::localize(q.text, lang, pack.settings)}, {"options", options}});
    }
    const auto* poi = pack.find_poi(quiz.poi_id);
    return {{"questionnaire", quiz.questionnaire_name},
            {"poi_id", quiz.poi_id},
            {"poi_name", poi ? poi->name : quiz.poi_id},
            {"topic", quiz.topic},
            {"difficulty", content::to_string(quiz.difficulty)},
            {"points_per_question", quiz.points_per_question},
            {"question_count", quiz.questions.size()},
            {"next_question", quiz.next_question()},
            {"questions", questions}};
}

json result_view(const engine::QuizResult& r) {
    return {{"questionnaire", r.questionnaire_name},
            {"poi_id", r.poi_id},
            {"topic", r.topic},
            {"correct_count", r.correct_count},
            {"total_count", r.total_count},
            {"score", r.score},
            {"end_message", r.end_message},
            {"topic_points", r.topic_points}};
}

json pack_view(const content::ContentPack& pack) {
    json pois = json::array();
    for (const auto& p : pack.pois) {
        int easy = 0, hard = 0;
        if (const auto* quiz = pack.messages.find_quiz(p.message_id))
            for (const auto& q : quiz->questions) (q.difficulty == content::Difficulty::easy ? easy : hard)++;
        pois.push_back({{"id", p.id},
                        {"name", p.name},
                        {"lat", p.position.lat()},
                        {"lon", p.position.lon()},
                        {"radius_m", p.trigger_radius_m},
                        {"topic", p.topic},
                        {"questionnaire", p.message_id},
                        {"points", {{"easy", p.points.easy}, {"hard", p.points.hard}}},
                        {"question_counts", {{"easy", easy}, {"hard", hard}}}});
    }
    json parking = json::array();
    for (const auto& s : pack.parking_spots)
        parking.push_back({{"id", s.id}, {"name", s.name}, {"lat", s.position.lat()}, {"lon", s.position.lon()}});
    json achievements = json::array();
    for (const auto& a : pack.settings.achievements)
        achievements.push_back({{"id", a.id},
                                {"kind", content::to_string(a.kind)},
                                {"threshold", a.threshold},
                                {"bonus", a.incentive_points},
                                {"description", a.description}});
    return {{"pois", pois},
            {"parking", parking},
            {"topics", pack.settings.topics},
            {"languages", pack.settings.languages},
            {"achievements", achievements}};
}

}  // namespace

Service::Service(ServiceConfig config, std::shared_ptr<const content::ContentPack> pack, store::Store& store)
    : config_(std::move(config)), pack_(std::move(pack)), store_(store) {
    if (!pack_) throw Error(ErrorKind::state, "service needs a content pack");
    if (!pack_->settings.declares_language(config_.default_language))
        config_.default_language = pack_->settings.languages.front();
}

Service::~Service() = default;

std::shared_ptr<Service::SessionSlot> Service::find_session(const std::string& session_id, const std::string& user_id) {
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end() || it->second->user_id != user_id)
        throw Error(ErrorKind::not_found, "unknown session '" + session_id + "'");
    return it->second;
}

void Service::install(httplib::Server& server) {
    const auto authed = [this](const httplib::Request& req) { return store_.authenticate(bearer_token(req)); };

    // Begins the next queued quiz when none is active. Quizzes the session
    // difficulty cannot play are skipped.
    const auto start_next = [](SessionSlot& slot, double at) {
        while (!slot.session.active_quiz() && !slot.queue.empty()) {
            const auto event = slot.queue.front();
            slot.queue.pop_front();
            try {
                slot.session.begin_quiz(event, at);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::content) throw;
            }
        }
    };

    server.Post("/api/register", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        const std::string vehicle = body.contains("vehicle_id") ? require_string(body, "vehicle_id") : "el_v";
        if (!engine::find_vehicle(vehicle)) throw Error(ErrorKind::validation, "unknown vehicle", "vehicle_id");
        const std::string user_id = store_.register_user(require_string(body, "email"), require_string(body, "username"),
                                                         require_string(body, "password"), vehicle);
        send_json(res, 201, {{"user_id", user_id}});
    }));

    server.Post("/api/login", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        const auto identifier = body.find("identifier");
        const auto password = body.find("password");
        if (identifier == body.end() || !identifier->is_string() || password == body.end() || !password->is_string())
            throw Error(ErrorKind::auth, "invalid credentials");
        const auto token = store_.login(identifier->get<std::string>(), password->get<std::string>());
        send_json(res, 200, {{"token", token.token}, {"user_id", token.user_id}});
    }));

    server.Post("/api/logout", guarded([this](const httplib::Request& req, httplib::Response& res) {
        store_.logout(bearer_token(req));
        send_json(res, 200, {{"logged_out", true}});
    }));

    server.Get("/api/me", guarded([this, authed](const httplib::Request& req, httplib::Response& res) {
        const std::string user_id = authed(req);
        const auto account = store_.account(user_id);
        if (!account) throw Error(ErrorKind::not_found, "unknown user");
        send_json(res, 200, {{"user_id", user_id},
                             {"username", account->username},
                             {"email", account->email},
                             {"vehicle_id", account->vehicle_id},
                             {"wallet", store_.wallet(user_id)},
                             {"achievements", account->awarded}});
    }));

    server.Get("/api/pack", guarded([this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, pack_view(*pack_));
    }));

    server.Post("/api/session", guarded([this, authed](const httplib::Request& req, httplib::Response& res) {
        const std::string user_id = authed(req);
        const json body = parse_body(req);
        const auto difficulty = content::parse_difficulty(require_string(body, "difficulty"));
        if (!difficulty) throw Error(ErrorKind::validation, "difficulty must be 'easy' or 'hard'", "difficulty");
        const std::string vehicle_id = body.contains("vehicle_id") ? require_string(body, "vehicle_id") : "el_v";
        const auto* vehicle = engine::find_vehicle(vehicle_id);
        if (!vehicle) throw Error(ErrorKind::validation, "unknown vehicle '" + vehicle_id + "'", "vehicle_id");
        const std::string language =
            body.contains("language") ? require_string(body, "language") : config_.default_language;
        if (!pack_->settings.declares_language(language))
            throw Error(ErrorKind::validation, "language '" + language + "' is not offered", "language");

        auto slot = std::make_shared<SessionSlot>(store::random_hex(16),
                                                  engine::Session(user_id, *difficulty, *vehicle, language, pack_));
        std::shared_ptr<SessionSlot> superseded;
        {
            std::lock_guard lock(sessions_mutex_);
            if (auto it = active_session_.find(user_id); it != active_session_.end()) {
                if (auto old = sessions_.find(it->second); old != sessions_.end()) {
                    superseded = old->second;
                    sessions_.erase(old);
                }
            }
            sessions_[slot->id] = slot;
            active_session_[user_id] = slot->id;
        }
        if (superseded) {
            std::lock_guard lock(superseded->mutex);
            superseded->closed = true;
        }
        store_.set_vehicle(user_id, vehicle_id);
        send_json(res, 201, {{"session_id", slot->id},
                             {"difficulty", content::to_string(*difficulty)},
                             {"language", language},
                             {"vehicle_id", vehicle_id}});
    }));

    server.Post(R"(/api/session/([^/]+)/position)",
                guarded([this, authed, start_next](const httplib::Request& req, httplib::Response& res) {
                    const std::string user_id = authed(req);
                    auto slot = find_session(req.matches[1], user_id);
                    const json body = parse_body(req);
                    const double lat = require_number(body, "lat");
                    const double lon = require_number(body, "lon");
                    const double t = require_number(body, "t");
                    std::optional<geo::GeoPoint> point;
                    try {
                        point = geo::GeoPoint(lat, lon);
                    } catch (const Error& e) {
                        throw Error(ErrorKind::validation, e.what(), "lat");
                    }

                    std::lock_guard lock(slot->mutex);
                    if (slot->closed) throw Error(ErrorKind::not_found, "session was superseded");
                    std::vector<engine::TriggerEvent> events;
                    try {
                        events = slot->session.update_position(*point, t);
                    } catch (const Error& e) {
                        // stale fix: 422, code stays "sequence"
                        if (e.kind() != ErrorKind::sequence) throw;
                        send_error(res, e.kind(), e.what(), e.field(), 422);
                        return;
                    }
                    json triggers = json::array();
                    for (const auto& ev : events) {
                        triggers.push_back({{"poi_id", ev.poi_id}, {"distance", ev.distance_m}});
                        slot->queue.push_back(ev);
                    }
                    start_next(*slot, t);
                    const auto* quiz = slot->session.active_quiz();
                    send_json(res, 200,
                              {{"triggers", triggers},
                               {"active_quiz", quiz ? quiz_view(*quiz, *pack_, slot->session.language()) : json()}});
                }));

    server.Post(R"(/api/session/([^/]+)/quiz/([^/]+)/answer)",
                guarded([this, authed, start_next](const httplib::Request& req, httplib::Response& res) {
                    const std::string user_id = authed(req);
                    auto slot = find_session(req.matches[1], user_id);
                    const std::string qname = req.matches[2];
                    const json body = parse_body(req);
                    const int question_index = require_int(body, "question_index");
                    const int choice_index = require_int(body, "choice_index");

                    std::lock_guard lock(slot->mutex);
                    if (slot->closed) throw Error(ErrorKind::not_found, "session was superseded");
                    const auto* quiz = slot->session.active_quiz();
                    if (!quiz || quiz->questionnaire_name != qname)
                        throw Error(ErrorKind::not_found, "no active questionnaire '" + qname + "'");
                    const auto outcome = slot->session.answer(question_index, choice_index);
                    json out = {{"correct", outcome == engine::AnswerOutcome::correct}};
                    if (!slot->session.active_quiz()->finished()) {
                        out["done"] = false;
                        out["next_question"] = slot->session.active_quiz()->next_question();
                        send_json(res, 200, out);
                        return;
                    }
                    const auto result = slot->session.complete_quiz();
                    {
                        std::lock_guard plock(pending_mutex_);
                        unsaved_[user_id][result.questionnaire_name] = result;
                    }
                    for (const auto& ev : slot->session.take_deferred()) slot->queue.push_back(ev);
                    start_next(*slot, now_seconds());
                    const auto* next = slot->session.active_quiz();
                    out["done"] = true;
                    out["result"] = result_view(result);
                    out["active_quiz"] = next ? quiz_view(*next, *pack_, slot->session.language()) : json();
                    send_json(res, 200, out);
                }));

    server.Post(R"(/api/results/([^/]+))", guarded([this, authed](const httplib::Request& req, httplib::Response& res) {
        const std::string user_id = authed(req);
        const std::string qname = req.matches[1];
        const json body = parse_body(req);
        bool overwrite = false;
        if (const auto it = body.find("overwrite"); it != body.end()) {
            if (!it->is_boolean()) throw Error(ErrorKind::validation, "'overwrite' must be a boolean", "overwrite");
            overwrite = it->get<bool>();
        }

        engine::QuizResult result;
        {
            std::lock_guard lock(pending_mutex_);
            const auto user = unsaved_.find(user_id);
            if (user == unsaved_.end() || !user->second.contains(qname))
                throw Error(ErrorKind::not_found, "no completed, unsaved result for '" + qname + "'");
            result = user->second.at(qname);
        }
        const auto outcome = engine::save_result(user_id, result, overwrite, store_, now_seconds());
        if (outcome == SaveOutcome::rejected_exists) {
            send_error(res, ErrorKind::conflict, "rejected_exists", "overwrite");
            return;
        }
        {
            std::lock_guard lock(pending_mutex_);
            auto& mine = unsaved_[user_id];
            if (auto it = mine.find(qname); it != mine.end() && it->second == result) mine.erase(it);
        }

        const auto account = store_.account(user_id);
        std::set<std::string> awarded;
        if (account)
            for (const auto& [id, _] : account->awarded) awarded.insert(id);
        const auto awards = engine::evaluate_achievements(engine::aggregate_totals(store_.fetch_results(user_id)),
                                                          pack_->settings, awarded);
        std::map<std::string, int> award_map;
        json award_list = json::array();
        for (const auto& a : awards) {
            award_map[a.achievement_id] = a.incentive_points;
            award_list.push_back({{"id", a.achievement_id}, {"bonus", a.incentive_points}});
        }
        if (!award_map.empty()) store_.record_awards(user_id, award_map);
        send_json(res, 200, {{"stored", true},
                             {"key", result_key(qname, user_id)},
                             {"score", result.score},
                             {"wallet", store_.wallet(user_id)},
                             {"awards", award_list}});
    }));

    server.Get("/api/results", guarded([this, authed](const httplib::Request& req, httplib::Response& res) {
        const std::string user_id = authed(req);
        json rows = json::array();
        for (const auto& row : engine::get_results(user_id, *pack_, store_))
            rows.push_back({{"questionnaire", row.questionnaire_name},
                            {"score", row.score ? json(*row.score) : json()}});
        send_json(res, 200, {{"rows", rows}});
    }));

    server.Get("/api/leaderboard", guarded([this, authed](const httplib::Request& req, httplib::Response& res) {
        authed(req);
        int n = 10;
        if (req.has_param("n")) {
            const std::string raw = req.get_param_value("n");
            std::size_t used = 0;
            try {
                n = std::stoi(raw, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != raw.size() || n < 1)
                throw Error(ErrorKind::validation, "'n' must be a positive integer", "n");
        }
        json entries = json::array();
        int rank = 0;
        for (const auto& row : store_.leaderboard(n))
            entries.push_back({{"rank", ++rank}, {"username", row.username}, {"points", row.points}});
        send_json(res, 200, {{"entries", entries}});
    }));

    if (!config_.static_dir.empty()) server.set_mount_point("/", config_.static_dir);

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
        const ErrorKind kind = res.status == 404 ? ErrorKind::not_found : ErrorKind::validation;
        json body = {{"code", api_code(kind)}, {"message", res.status == 404 ? "no such route" : "bad request"}};
        res.set_content(body.dump(), "application/json; charset=utf-8");
        return httplib::Server::HandlerResponse::Handled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        send_error(res, ErrorKind::io, "internal error");
    });
}

}  // namespace geoquiz::service
