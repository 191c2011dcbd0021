#include <cmath>
#include <set>

#include "content_internal.hpp"
#include "geoquiz/content.hpp"

namespace geoquiz::content {

using detail::path_with_id;

namespace {

class Checker {
public:
    explicit Checker(const ContentPack& pack) : pack_(pack) {}

    ValidationReport run() {
        check_settings();
        check_pois();
        check_parking();
        check_quizzes();
        check_end_messages();
        return std::move(report_);
    }

private:
    const ContentPack& pack_;
    ValidationReport report_;

    void add(std::string_view doc, std::string path, std::string rule, std::string message) {
        report_.entries.push_back({std::string(doc), std::move(path), std::move(rule), std::move(message)});
    }

    void check_languages(const LocalizedText& text, std::string_view doc, const std::string& path) {
        for (const auto& [lang, _] : text) {
            if (!pack_.settings.declares_language(lang)) {
                add(doc, path, "undeclared_language", "text uses undeclared language '" + lang + "'");
                return;
            }
        }
    }

    void check_settings() {
        const auto& s = pack_.settings;
        if (s.languages.empty())
            add(kGameSettingsDoc, "/settings/languages", "empty_languages", "no language declared");
        if (s.topics.empty()) add(kGameSettingsDoc, "/settings/topics", "empty_topics", "no topic declared");
        if (std::set<std::string>(s.languages.begin(), s.languages.end()).size() != s.languages.size())
            add(kGameSettingsDoc, "/settings/languages", "duplicate_declaration", "a language is declared twice");
        if (std::set<std::string>(s.topics.begin(), s.topics.end()).size() != s.topics.size())
            add(kGameSettingsDoc, "/settings/topics", "duplicate_declaration", "a topic is declared twice");

        std::set<std::string> ids;
        for (const auto& a : s.achievements) {
            const std::string path = path_with_id("/settings/achievements/ach", "id", a.id);
            if (!ids.insert(a.id).second)
                add(kGameSettingsDoc, path, "duplicate_achievement_id", "achievement id '" + a.id + "' repeated");
            if (a.threshold < 1)
                add(kGameSettingsDoc, path, "threshold_out_of_range",
                    "achievement threshold must be >= 1, got " + std::to_string(a.threshold));
            if (a.incentive_points < 0)
                add(kGameSettingsDoc, path, "negative_incentive", "achievement bonus must be >= 0");
            if (a.kind == AchievementKind::topic_points && !a.topic.empty() && !s.declares_topic(a.topic))
                add(kGameSettingsDoc, path, "unknown_topic", "achievement refers to undeclared topic '" + a.topic + "'");
            check_languages(a.description, kGameSettingsDoc, path);
        }
    }

    void check_pois() {
        std::set<std::string> ids;
        for (const auto& p : pack_.pois) {
            const std::string path = path_with_id("/geolocations/poi", "id", p.id);
            if (!ids.insert(p.id).second)
                add(kGeolocationDoc, path, "duplicate_poi_id", "POI id '" + p.id + "' repeated");
            if (!std::isfinite(p.trigger_radius_m) || p.trigger_radius_m <= 0.0)
                add(kGeolocationDoc, path, "bad_trigger_radius", "trigger radius must be a positive distance");
            if (!pack_.messages.find_quiz(p.message_id))
                add(kGeolocationDoc, path, "dangling_message_ref",
                    "message id '" + p.message_id + "' not found in MessagesList.xml");
            if (!pack_.settings.declares_topic(p.topic))
                add(kLocationListDoc, path_with_id("/locations/loc", "ref", p.id), "unknown_topic",
                    p.topic.empty() ? "POI '" + p.id + "' has no topic (missing <loc> entry)"
                                    : "topic '" + p.topic + "' is not declared in GameSettings.xml");
            if (p.points.easy < 0 || p.points.hard < 0)
                add(kLocationListDoc, path_with_id("/locations/loc", "ref", p.id), "negative_points",
                    "points per question must be non-negative");
        }
    }

    void check_parking() {
        std::set<std::string> ids;
        for (const auto& s : pack_.parking_spots)
            if (!ids.insert(s.id).second)
                add(kGeolocationDoc, path_with_id("/geolocations/parking", "id", s.id), "duplicate_parking_id",
                    "parking id '" + s.id + "' repeated");
    }

    void check_quizzes() {
        std::set<std::string> quiz_ids;
        std::set<std::string> question_ids;
        for (const auto& quiz : pack_.messages.quizzes) {
            const std::string quiz_path = path_with_id("/messages/quiz", "id", quiz.id);
            if (!quiz_ids.insert(quiz.id).second)
                add(kMessagesDoc, quiz_path, "duplicate_quiz_id", "quiz id '" + quiz.id + "' repeated");
            if (quiz.questions.empty()) add(kMessagesDoc, quiz_path, "empty_quiz", "quiz has no questions");
            int index = 0;
            for (const auto& q : quiz.questions) {
                const std::string path = quiz_path + "/q[" + std::to_string(++index) + "]";
                if (!question_ids.insert(q.id).second)
                    add(kMessagesDoc, path, "duplicate_question_id", "question id '" + q.id + "' repeated");
                const auto n = static_cast<int>(q.options.size());
                if (n < 2 || n > 3)
                    add(kMessagesDoc, path, "option_count", "a question needs 2 or 3 options, found " + std::to_string(n));
                if (q.correct_index < 0 || q.correct_index >= n)
                    add(kMessagesDoc, path, "correct_index_out_of_range",
                        "correct index " + std::to_string(q.correct_index) + " outside [0, " + std::to_string(n) + ")");
                if (q.text.empty()) add(kMessagesDoc, path, "missing_text", "question has no text");
                if (!q.topic.empty() && !pack_.settings.declares_topic(q.topic))
                    add(kMessagesDoc, path, "unknown_topic", "topic '" + q.topic + "' is not declared");
                LocalizedText all = q.text;
                for (const auto& o : q.options) all.insert(o.begin(), o.end());
                check_languages(all, kMessagesDoc, path);
            }
        }
    }

    void check_end_messages() {
        for (const auto& [id, bands] : pack_.messages.end_messages) {
            const std::string path = path_with_id("/messages/end", "id", id);
            if (!pack_.messages.find_quiz(id))
                add(kMessagesDoc, path, "dangling_end_ref", "end message '" + id + "' matches no quiz");
            bool covering = !bands.empty() && bands.front().min_fraction == 0.0;
            for (std::size_t i = 0; covering && i < bands.size(); ++i) {
                const double m = bands[i].min_fraction;
                if (!(m >= 0.0 && m <= 1.0) || (i > 0 && !(m > bands[i - 1].min_fraction))) covering = false;
            }
            if (!covering)
                add(kMessagesDoc, path, "band_coverage",
                    "bands must start at 0 and ascend strictly within [0, 1] to cover every score fraction");
            LocalizedText all;
            for (const auto& b : bands) all.insert(b.text.begin(), b.text.end());
            check_languages(all, kMessagesDoc, path);
        }
    }
};

}  // namespace

ValidationReport validate_cross_references(const ContentPack& pack) { return Checker(pack).run(); }

}  // namespace geoquiz::content
