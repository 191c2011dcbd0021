#include "geoquiz/engine.hpp"

#include <algorithm>

#include "geoquiz/error.hpp"

namespace geoquiz {

std::string result_key(std::string_view questionnaire_name, std::string_view user_id) {
    std::string key(questionnaire_name);
    key += kResultKeySeparator;
    key += user_id;
    return key;
}

std::optional<std::pair<std::string, std::string>> split_result_key(std::string_view key) {
    const auto pos = key.rfind(kResultKeySeparator);
    if (pos == std::string_view::npos || pos == 0 || pos + kResultKeySeparator.size() == key.size())
        return std::nullopt;
    return std::pair{std::string(key.substr(0, pos)), std::string(key.substr(pos + kResultKeySeparator.size()))};
}

}  // namespace geoquiz

namespace geoquiz::engine {

std::string_view to_string(VehicleCategory c) {
    switch (c) {
        case VehicleCategory::el_v: return "el_v";
        case VehicleCategory::bicycle: return "bicycle";
        case VehicleCategory::public_transport: return "public_transport";
        case VehicleCategory::other: return "other";
    }
    return "other";
}

const std::vector<VehicleProfile>& vehicle_catalog() {
    static const std::vector<VehicleProfile> catalog{
        {"el_v", VehicleCategory::el_v, "Electric light vehicle"},
        {"e_scooter", VehicleCategory::el_v, "Electric scooter"},
        {"e_quadricycle", VehicleCategory::el_v, "Electric quadricycle"},
        {"bicycle", VehicleCategory::bicycle, "Bicycle"},
        {"public_transport", VehicleCategory::public_transport, "Public transport"},
        {"other", VehicleCategory::other, "Other"},
    };
    return catalog;
}

const VehicleProfile* find_vehicle(std::string_view id) {
    for (const auto& v : vehicle_catalog())
        if (v.id == id) return &v;
    return nullptr;
}

AnswerOutcome answer_question(QuizInstance& quiz, int question_index, int choice_index) {
    if (question_index < 0 || static_cast<std::size_t>(question_index) != quiz.answers.size())
        throw Error(ErrorKind::sequence,
                    "expected an answer to question " + std::to_string(quiz.answers.size()) + ", got " +
                        std::to_string(question_index),
                    "question_index");
    const auto& question = quiz.questions[static_cast<std::size_t>(question_index)];
    if (choice_index < 0 || static_cast<std::size_t>(choice_index) >= question.options.size())
        throw Error(ErrorKind::domain, "choice " + std::to_string(choice_index) + " is not an option", "choice_index");
    quiz.answers.push_back(choice_index);
    return choice_index == question.correct_index ? AnswerOutcome::correct : AnswerOutcome::incorrect;
}

Session::Session(std::string user_id, Difficulty difficulty, VehicleProfile vehicle, std::string language,
                 std::shared_ptr<const ContentPack> pack)
    : user_id_(std::move(user_id)),
      difficulty_(difficulty),
      vehicle_(std::move(vehicle)),
      language_(std::move(language)),
      pack_(std::move(pack)) {
    if (!pack_) throw Error(ErrorKind::state, "session needs a content pack");
    if (!pack_->settings.declares_language(language_))
        throw Error(ErrorKind::domain, "language '" + language_ + "' is not declared by the content pack", "language");
}

std::vector<TriggerEvent> Session::update_position(const geo::GeoPoint& point, Timestamp at) {
    if (last_fix_ && at < *last_fix_)
        throw Error(ErrorKind::sequence, "position timestamp went backwards", "t");
    last_fix_ = at;

    std::vector<TriggerEvent> fresh;
    std::set<std::string> now_inside;
    for (const auto& poi : pack_->pois) {
        const double d = geo::haversine_distance(point, poi.position);
        if (d >= poi.trigger_radius_m) continue;
        now_inside.insert(poi.id);
        if (!fired_.contains(poi.id) && !inside_.contains(poi.id)) {
            fired_.insert(poi.id);
            fresh.push_back({poi.id, d, at});
        }
    }
    inside_ = std::move(now_inside);

    if (active_quiz_) {
        deferred_.insert(deferred_.end(), fresh.begin(), fresh.end());
        return {};
    }
    std::vector<TriggerEvent> out = take_deferred();
    out.insert(out.end(), fresh.begin(), fresh.end());
    return out;
}

std::vector<TriggerEvent> Session::take_deferred() {
    if (active_quiz_) return {};
    return std::exchange(deferred_, {});
}

const QuizInstance& Session::begin_quiz(const TriggerEvent& event, Timestamp at) {
    if (active_quiz_)
        throw Error(ErrorKind::conflict, "questionnaire '" + active_quiz_->questionnaire_name + "' is still active");
    if (!fired_.contains(event.poi_id))
        throw Error(ErrorKind::state, "POI '" + event.poi_id + "' has not been triggered in this session");
    const auto* poi = pack_->find_poi(event.poi_id);
    const auto* quiz = poi ? pack_->messages.find_quiz(poi->message_id) : nullptr;
    if (!quiz) throw Error(ErrorKind::content, "no questionnaire for POI '" + event.poi_id + "'");

    QuizInstance instance;
    instance.questionnaire_name = quiz->id;
    instance.poi_id = poi->id;
    instance.topic = poi->topic;
    instance.difficulty = difficulty_;
    instance.points_per_question = poi->points.for_difficulty(difficulty_);
    instance.started_at = at;
    std::copy_if(quiz->questions.begin(), quiz->questions.end(), std::back_inserter(instance.questions),
                 [&](const auto& q) { return q.difficulty == difficulty_; });
    if (instance.questions.empty())
        throw Error(ErrorKind::content, "questionnaire '" + quiz->id + "' has no " +
                                            std::string(content::to_string(difficulty_)) + " questions");
    active_quiz_ = std::move(instance);
    return *active_quiz_;
}

AnswerOutcome Session::answer(int question_index, int choice_index) {
    if (!active_quiz_) throw Error(ErrorKind::state, "no active questionnaire");
    return answer_question(*active_quiz_, question_index, choice_index);
}

QuizResult Session::complete_quiz() {
    if (!active_quiz_) throw Error(ErrorKind::state, "no active questionnaire");
    const QuizInstance& quiz = *active_quiz_;
    if (!quiz.finished())
        throw Error(ErrorKind::state, "questionnaire '" + quiz.questionnaire_name + "' has " +
                                          std::to_string(quiz.questions.size() - quiz.answers.size()) +
                                          " unanswered questions");
    QuizResult r;
    r.questionnaire_name = quiz.questionnaire_name;
    r.poi_id = quiz.poi_id;
    r.topic = quiz.topic;
    r.difficulty = quiz.difficulty;
    r.total_count = static_cast<int>(quiz.questions.size());
    for (std::size_t i = 0; i < quiz.questions.size(); ++i)
        if (quiz.answers[i] == quiz.questions[i].correct_index) ++r.correct_count;
    r.score = r.correct_count * quiz.points_per_question;
    r.topic_points[quiz.topic] = r.score;
    const double fraction = static_cast<double>(r.correct_count) / static_cast<double>(r.total_count);
    const auto& band = content::band_for(pack_->messages.bands_for(quiz.questionnaire_name), fraction);
    r.end_message = content::localize(band.text, language_, pack_->settings);

    wallet_delta_ += r.score;
    active_quiz_.reset();
    return r;
}

void Session::abandon_quiz() { active_quiz_.reset(); }

std::optional<geo::NearestHit> nearest_poi(const geo::GeoPoint& user, std::span<const content::PointOfInterest> pois) {
    std::vector<geo::Located> located;
    located.reserve(pois.size());
    for (const auto& p : pois) located.push_back({p.id, p.position});
    return geo::nearest(user, located);
}

ResultRecord to_record(const QuizResult& result, const std::string& user_id, double saved_at) {
    ResultRecord rec;
    rec.questionnaire_name = result.questionnaire_name;
    rec.user_id = user_id;
    rec.poi_id = result.poi_id;
    rec.topic = result.topic;
    rec.difficulty = std::string(content::to_string(result.difficulty));
    rec.correct_count = result.correct_count;
    rec.total_count = result.total_count;
    rec.score = result.score;
    rec.topic_points = result.topic_points;
    rec.saved_at = saved_at;
    return rec;
}

SaveOutcome save_result(const std::string& user_id, const QuizResult& result, bool overwrite, ResultStore& store,
                        double saved_at) {
    if (result.total_count <= 0 || result.questionnaire_name.empty())
        throw Error(ErrorKind::state, "result is incomplete");
    return store.put_result(result_key(result.questionnaire_name, user_id), to_record(result, user_id, saved_at),
                            overwrite);
}

std::vector<ResultRow> get_results(const std::string& user_id, const ContentPack& pack, const ResultStore& store) {
    const auto saved = store.fetch_results(user_id);
    std::vector<ResultRow> rows;
    for (const auto& name : pack.questionnaire_names()) {
        ResultRow row{name, std::nullopt};
        if (auto it = saved.find(result_key(name, user_id)); it != saved.end()) row.score = it->second.score;
        rows.push_back(std::move(row));
    }
    return rows;
}

UserTotals aggregate_totals(const std::map<std::string, ResultRecord>& records) {
    UserTotals t;
    for (const auto& [_, rec] : records) {
        t.total_points += rec.score;
        ++t.quizzes_completed;
        for (const auto& [topic, pts] : rec.topic_points) t.topic_points[topic] += pts;
    }
    return t;
}

std::vector<AchievementAward> evaluate_achievements(const UserTotals& totals, const content::GameSettings& settings,
                                                    const std::set<std::string>& already_awarded) {
    std::vector<AchievementAward> awards;
    for (const auto& a : settings.achievements) {
        if (already_awarded.contains(a.id)) continue;
        int value = 0;
        switch (a.kind) {
            case content::AchievementKind::total_points: value = totals.total_points; break;
            case content::AchievementKind::quizzes_completed: value = totals.quizzes_completed; break;
            case content::AchievementKind::topic_points: {
                const auto it = totals.topic_points.find(a.topic);
                value = it == totals.topic_points.end() ? 0 : it->second;
                break;
            }
        }
        if (value >= a.threshold) awards.push_back({a.id, a.incentive_points});
    }
    return awards;
}

}  // namespace geoquiz::engine
