#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace geoquiz {

/// A saved questionnaire outcome, keyed by result_key(questionnaire, user).
struct ResultRecord {
    std::string questionnaire_name;
    std::string user_id;
    std::string poi_id;
    std::string topic;
    std::string difficulty;
    int correct_count = 0;
    int total_count = 0;
    int score = 0;
    std::map<std::string, int> topic_points;
    double saved_at = 0.0;  // seconds since epoch

    friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

inline constexpr std::string_view kResultKeySeparator = "::";

std::string result_key(std::string_view questionnaire_name, std::string_view user_id);

/// Inverse of result_key. User ids never contain the separator, so the split
/// happens at its last occurrence. Returns nullopt for malformed keys.
std::optional<std::pair<std::string, std::string>> split_result_key(std::string_view key);

enum class SaveOutcome { stored, rejected_exists };

/// Storage contract the engine needs for results. Implementations serialize
/// writes per key so that put_result's check-and-write is atomic.
class ResultStore {
public:
    virtual ~ResultStore() = default;

    /// Stores under `key` if absent, or replaces when `overwrite` is set.
    /// Otherwise leaves the existing record untouched and reports rejected_exists.
    virtual SaveOutcome put_result(const std::string& key, const ResultRecord& record, bool overwrite) = 0;
    virtual std::optional<ResultRecord> get_result(const std::string& key) const = 0;
    /// All records of `user_id`, by key.
    virtual std::map<std::string, ResultRecord> fetch_results(const std::string& user_id) const = 0;
};

}  // namespace geoquiz
