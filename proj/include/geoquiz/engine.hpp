#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "geoquiz/content.hpp"
#include "geoquiz/geo.hpp"
#include "geoquiz/results.hpp"

namespace geoquiz::engine {

using content::ContentPack;
using content::Difficulty;

/// Seconds; epoch-based in the service, trace-relative in the simulator.
using Timestamp = double;

enum class VehicleCategory { el_v, bicycle, public_transport, other };

std::string_view to_string(VehicleCategory c);

struct VehicleProfile {
    std::string id;
    VehicleCategory category = VehicleCategory::el_v;
    std::string label;

    friend bool operator==(const VehicleProfile&, const VehicleProfile&) = default;
};

const std::vector<VehicleProfile>& vehicle_catalog();
const VehicleProfile* find_vehicle(std::string_view id);

struct TriggerEvent {
    std::string poi_id;
    double distance_m = 0.0;
    Timestamp fired_at = 0.0;

    friend bool operator==(const TriggerEvent&, const TriggerEvent&) = default;
};

struct QuizInstance {
    std::string questionnaire_name;
    std::string poi_id;
    std::string topic;
    Difficulty difficulty = Difficulty::easy;
    int points_per_question = 0;
    std::vector<content::QuizQuestion> questions;
    std::vector<int> answers;
    Timestamp started_at = 0.0;

    bool finished() const { return answers.size() == questions.size(); }
    std::size_t next_question() const { return answers.size(); }
};

enum class AnswerOutcome { correct, incorrect };

/// Records the answer to question `question_index`, which must be the next
/// unanswered one (Error(sequence) otherwise). An invalid choice throws
/// Error(domain) and leaves the quiz unchanged.
AnswerOutcome answer_question(QuizInstance& quiz, int question_index, int choice_index);

struct QuizResult {
    std::string questionnaire_name;
    std::string poi_id;
    std::string topic;
    Difficulty difficulty = Difficulty::easy;
    int correct_count = 0;
    int total_count = 0;
    int score = 0;
    std::string end_message;
    std::map<std::string, int> topic_points;

    friend bool operator==(const QuizResult&, const QuizResult&) = default;
};

/// One player's run through the map. Not thread-safe; callers serialize access.
class Session {
public:
    /// Throws Error(domain) when `language` is not declared by the pack.
    Session(std::string user_id, Difficulty difficulty, VehicleProfile vehicle, std::string language,
            std::shared_ptr<const ContentPack> pack);

    /// Feeds one position fix. Returns a trigger for every POI entered for the
    /// first time this session, in pack order. While a quiz is active the
    /// triggers are held back and returned by the first call after it completes.
    /// Throws Error(sequence) if `at` precedes the previous fix.
    std::vector<TriggerEvent> update_position(const geo::GeoPoint& point, Timestamp at);

    /// Throws Error(conflict) when a quiz is already active, Error(state) for
    /// an event this session never fired, Error(content) when the POI's quiz
    /// has no question at the session difficulty.
    const QuizInstance& begin_quiz(const TriggerEvent& event, Timestamp at = 0.0);

    /// Answers on the active quiz; Error(state) if none.
    AnswerOutcome answer(int question_index, int choice_index);

    /// Scores the active quiz and clears it. Error(state) if none or unfinished.
    QuizResult complete_quiz();

    /// Drops the active quiz without scoring.
    void abandon_quiz();

    /// Triggers held back during a quiz, released once no quiz is active.
    std::vector<TriggerEvent> take_deferred();

    const std::string& user_id() const { return user_id_; }
    Difficulty difficulty() const { return difficulty_; }
    const VehicleProfile& vehicle() const { return vehicle_; }
    const std::string& language() const { return language_; }
    const std::set<std::string>& fired() const { return fired_; }
    const std::set<std::string>& inside() const { return inside_; }
    const QuizInstance* active_quiz() const { return active_quiz_ ? &*active_quiz_ : nullptr; }
    int wallet_delta() const { return wallet_delta_; }
    const ContentPack& pack() const { return *pack_; }

private:
    std::string user_id_;
    Difficulty difficulty_;
    VehicleProfile vehicle_;
    std::string language_;
    std::shared_ptr<const ContentPack> pack_;

    std::set<std::string> fired_;
    std::set<std::string> inside_;
    std::vector<TriggerEvent> deferred_;
    std::optional<QuizInstance> active_quiz_;
    std::optional<Timestamp> last_fix_;
    int wallet_delta_ = 0;
};

/// nearest_poi: closest POI to `user`, ties to the smallest id.
std::optional<geo::NearestHit> nearest_poi(const geo::GeoPoint& user, std::span<const content::PointOfInterest> pois);

ResultRecord to_record(const QuizResult& result, const std::string& user_id, double saved_at);

/// Persists `result` under questionnaire::user. An existing record is replaced
/// only when `overwrite` is set.
SaveOutcome save_result(const std::string& user_id, const QuizResult& result, bool overwrite, ResultStore& store,
                        double saved_at = 0.0);

struct ResultRow {
    std::string questionnaire_name;
    std::optional<int> score;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// One row per questionnaire in pack order; score empty when never saved.
std::vector<ResultRow> get_results(const std::string& user_id, const ContentPack& pack, const ResultStore& store);

struct UserTotals {
    int total_points = 0;
    int quizzes_completed = 0;
    std::map<std::string, int> topic_points;
};

UserTotals aggregate_totals(const std::map<std::string, ResultRecord>& records);

struct AchievementAward {
    std::string achievement_id;
    int incentive_points = 0;

    friend bool operator==(const AchievementAward&, const AchievementAward&) = default;
};

/// Achievements whose condition holds for `totals` and that are not in `already_awarded`.
std::vector<AchievementAward> evaluate_achievements(const UserTotals& totals, const content::GameSettings& settings,
                                                    const std::set<std::string>& already_awarded);

}  // namespace geoquiz::engine
