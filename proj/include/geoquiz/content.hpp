#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "geoquiz/geo.hpp"

namespace geoquiz::content {

enum class Difficulty { easy, hard };

std::string_view to_string(Difficulty d);
std::optional<Difficulty> parse_difficulty(std::string_view s);

/// Language code -> text.
using LocalizedText = std::map<std::string, std::string>;

struct PointsPerQuestion {
    int easy = 10;
    int hard = 20;

    int for_difficulty(Difficulty d) const { return d == Difficulty::easy ? easy : hard; }
    friend bool operator==(const PointsPerQuestion&, const PointsPerQuestion&) = default;
};

inline constexpr double kDefaultTriggerRadiusM = 200.0;

struct PointOfInterest {
    std::string id;
    std::string name;
    geo::GeoPoint position;
    double trigger_radius_m = kDefaultTriggerRadiusM;
    std::string message_id;
    std::string topic;
    PointsPerQuestion points;

    friend bool operator==(const PointOfInterest&, const PointOfInterest&) = default;
};

struct ParkingSpot {
    std::string id;
    std::string name;
    geo::GeoPoint position;

    friend bool operator==(const ParkingSpot&, const ParkingSpot&) = default;
};

enum class AchievementKind { total_points, quizzes_completed, topic_points };

std::string_view to_string(AchievementKind k);
std::optional<AchievementKind> parse_achievement_kind(std::string_view s);

struct Achievement {
    std::string id;
    LocalizedText description;
    AchievementKind kind = AchievementKind::total_points;
    std::string topic;  // only for topic_points
    int threshold = 1;
    int incentive_points = 0;

    friend bool operator==(const Achievement&, const Achievement&) = default;
};

struct GameSettings {
    std::vector<std::string> languages;
    std::vector<std::string> topics;
    std::vector<Achievement> achievements;

    bool declares_language(std::string_view lang) const;
    bool declares_topic(std::string_view topic) const;
    friend bool operator==(const GameSettings&, const GameSettings&) = default;
};

struct QuizQuestion {
    std::string id;
    LocalizedText text;
    std::vector<LocalizedText> options;
    int correct_index = 0;
    Difficulty difficulty = Difficulty::easy;
    std::string topic;

    friend bool operator==(const QuizQuestion&, const QuizQuestion&) = default;
};

struct Quiz {
    std::string id;
    std::vector<QuizQuestion> questions;

    friend bool operator==(const Quiz&, const Quiz&) = default;
};

/// Closing-message band covering [min_fraction, next band's min_fraction);
/// the last band extends to 1 inclusive.
struct EndBand {
    double min_fraction = 0.0;
    LocalizedText text;

    friend bool operator==(const EndBand&, const EndBand&) = default;
};

/// Bands used when a questionnaire has no <end> entry: [0,0.5) low,
/// [0.5,1) mid, [1,1] perfect.
const std::vector<EndBand>& default_end_bands();

/// The band containing `fraction`. Bands must be valid (ascending, first at 0).
const EndBand& band_for(const std::vector<EndBand>& bands, double fraction);

struct MessageCatalog {
    std::vector<Quiz> quizzes;
    std::map<std::string, std::vector<EndBand>> end_messages;

    const Quiz* find_quiz(std::string_view id) const;
    /// Custom bands for `message_id`, or the defaults.
    const std::vector<EndBand>& bands_for(std::string_view message_id) const;

    friend bool operator==(const MessageCatalog&, const MessageCatalog&) = default;
};

struct ContentPack {
    std::vector<PointOfInterest> pois;
    GameSettings settings;
    MessageCatalog messages;
    std::vector<ParkingSpot> parking_spots;

    const PointOfInterest* find_poi(std::string_view id) const;
    /// Questionnaire names (POI message ids) in POI order, without repeats.
    std::vector<std::string> questionnaire_names() const;

    friend bool operator==(const ContentPack&, const ContentPack&) = default;
};

// ---------------------------------------------------------------------------
// Validation

struct ValidationEntry {
    std::string document;  // e.g. "Geolocation.xml"
    std::string path;      // element path, e.g. "/geolocations/poi[@id='castello']"
    std::string rule;      // stable rule id, e.g. "dangling_message_ref"
    std::string message;

    friend bool operator==(const ValidationEntry&, const ValidationEntry&) = default;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;

    bool ok() const { return entries.empty(); }
    std::size_t count(std::string_view rule) const;
    std::string to_string() const;
};

inline constexpr std::string_view kGeolocationDoc = "Geolocation.xml";
inline constexpr std::string_view kLocationListDoc = "LocationList.xml";
inline constexpr std::string_view kGameSettingsDoc = "GameSettings.xml";
inline constexpr std::string_view kMessagesDoc = "MessagesList.xml";

/// The four XML documents of a content pack.
struct PackDocuments {
    std::string location_list;
    std::string geolocation;
    std::string game_settings;
    std::string messages;
};

/// Reads the four documents from `dir`. Throws Error(io) if any is missing.
PackDocuments read_pack_directory(const std::filesystem::path& dir);
void write_pack_directory(const PackDocuments& docs, const std::filesystem::path& dir);

using ParseResult = std::variant<ContentPack, ValidationReport>;

/// Parses and validates. Malformed XML throws xml::ParseError (with line and
/// column, message prefixed by the document name); every other problem is
/// collected into the returned report.
ParseResult parse_content_pack(const PackDocuments& docs);

/// Convenience: parse, throwing Error(content) with the report text on failure.
ContentPack load_content_pack(const std::filesystem::path& dir);

/// Cross-reference and range checks over an already-structured pack.
ValidationReport validate_cross_references(const ContentPack& pack);

/// Canonical serialization; parse_content_pack(serialize(p)) == p for valid p.
PackDocuments serialize(const ContentPack& pack);

/// Variant for `lang`, else the first declared language, else any variant.
/// Throws Error(domain) if `lang` is not declared.
std::string localize(const LocalizedText& text, std::string_view lang, const GameSettings& settings);

}  // namespace geoquiz::content
