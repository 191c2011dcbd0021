#include <algorithm>
#include <fstream>
#include <sstream>

#include "content_internal.hpp"
#include "geoquiz/content.hpp"
#include "geoquiz/error.hpp"
#include "geoquiz/xml.hpp"

namespace geoquiz::content {

using detail::path_with_id;
using detail::to_double;
using detail::to_int;

std::string_view to_string(Difficulty d) { return d == Difficulty::easy ? "easy" : "hard"; }

std::optional<Difficulty> parse_difficulty(std::string_view s) {
    if (s == "easy") return Difficulty::easy;
    if (s == "hard") return Difficulty::hard;
    return std::nullopt;
}

std::string_view to_string(AchievementKind k) {
    switch (k) {
        case AchievementKind::total_points: return "total_points";
        case AchievementKind::quizzes_completed: return "quizzes_completed";
        case AchievementKind::topic_points: return "topic_points";
    }
    return "total_points";
}

std::optional<AchievementKind> parse_achievement_kind(std::string_view s) {
    if (s == "total_points") return AchievementKind::total_points;
    if (s == "quizzes_completed") return AchievementKind::quizzes_completed;
    if (s == "topic_points") return AchievementKind::topic_points;
    return std::nullopt;
}

bool GameSettings::declares_language(std::string_view lang) const {
    return std::find(languages.begin(), languages.end(), lang) != languages.end();
}

bool GameSettings::declares_topic(std::string_view topic) const {
    return std::find(topics.begin(), topics.end(), topic) != topics.end();
}

const std::vector<EndBand>& default_end_bands() {
    static const std::vector<EndBand> bands{
        {0.0, {{"en", "Keep exploring: every monument has a story to tell. Try again!"},
               {"it", "Continua a esplorare: ogni monumento ha una storia da raccontare. Riprova!"}}},
        {0.5, {{"en", "Good job! You know the city well."},
               {"it", "Ottimo lavoro! Conosci bene la citt\xC3\xA0."}}},
        {1.0, {{"en", "Perfect score! You are a true explorer."},
               {"it", "Punteggio perfetto! Sei un vero esploratore."}}},
    };
    return bands;
}

const EndBand& band_for(const std::vector<EndBand>& bands, double fraction) {
    const EndBand* chosen = &bands.front();
    for (const auto& b : bands)
        if (b.min_fraction <= fraction) chosen = &b;
    return *chosen;
}

const Quiz* MessageCatalog::find_quiz(std::string_view id) const {
    for (const auto& q : quizzes)
        if (q.id == id) return &q;
    return nullptr;
}

const std::vector<EndBand>& MessageCatalog::bands_for(std::string_view message_id) const {
    const auto it = end_messages.find(std::string(message_id));
    return it == end_messages.end() || it->second.empty() ? default_end_bands() : it->second;
}

const PointOfInterest* ContentPack::find_poi(std::string_view id) const {
    for (const auto& p : pois)
        if (p.id == id) return &p;
    return nullptr;
}

std::vector<std::string> ContentPack::questionnaire_names() const {
    std::vector<std::string> names;
    for (const auto& p : pois)
        if (std::find(names.begin(), names.end(), p.message_id) == names.end())
            names.push_back(p.message_id);
    return names;
}

std::size_t ValidationReport::count(std::string_view rule) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [&](const auto& e) { return e.rule == rule; }));
}

std::string ValidationReport::to_string() const {
    std::ostringstream out;
    for (const auto& e : entries)
        out << e.document << " " << e.path << " [" << e.rule << "] " << e.message << "\n";
    return out.str();
}

std::string localize(const LocalizedText& text, std::string_view lang, const GameSettings& settings) {
    if (!settings.declares_language(lang))
        throw Error(ErrorKind::domain, "language '" + std::string(lang) + "' is not declared", "language");
    if (auto it = text.find(std::string(lang)); it != text.end()) return it->second;
    if (!settings.languages.empty())
        if (auto it = text.find(settings.languages.front()); it != text.end()) return it->second;
    return text.empty() ? std::string{} : text.begin()->second;
}

namespace {

class Collector {
public:
    explicit Collector(ValidationReport& report) : report_(report) {}

    void add(std::string_view doc, std::string path, std::string rule, std::string message) {
        report_.entries.push_back({std::string(doc), std::move(path), std::move(rule), std::move(message)});
    }

    // Required string attribute; records missing_attribute when absent.
    std::optional<std::string> required(const xml::Element& el, std::string_view doc, const std::string& path,
                                        std::string_view key) {
        if (const auto* v = el.attribute(key)) return *v;
        add(doc, path, "missing_attribute", "<" + el.name + "> lacks required attribute '" + std::string(key) + "'");
        return std::nullopt;
    }

    template <typename Parse>
    auto number(const xml::Element& el, std::string_view doc, const std::string& path, std::string_view key,
                Parse parse) -> decltype(parse(std::string_view{})) {
        const auto* raw = el.attribute(key);
        if (!raw) return std::nullopt;
        auto v = parse(*raw);
        if (!v)
            add(doc, path, "bad_attribute",
                "attribute '" + std::string(key) + "' is not a valid number: '" + *raw + "'");
        return v;
    }

private:
    ValidationReport& report_;
};

xml::Element parse_document(std::string_view doc_name, const std::string& text) {
    try {
        return xml::parse(text);
    } catch (const xml::ParseError& e) {
        throw xml::ParseError(std::string(doc_name) + ": " + e.what(), e.line(), e.column());
    }
}

bool check_root(const xml::Element& root, std::string_view expected, std::string_view doc, Collector& c) {
    if (root.name == expected) return true;
    c.add(doc, "/" + root.name, "unexpected_root",
          "expected root <" + std::string(expected) + ">, found <" + root.name + ">");
    return false;
}

GameSettings parse_settings(const xml::Element& root, Collector& c) {
    GameSettings s;
    constexpr auto doc = kGameSettingsDoc;
    if (!check_root(root, "settings", doc, c)) return s;
    for (const auto* langs : root.children_named("languages"))
        for (const auto* lang : langs->children_named("lang"))
            if (auto code = c.required(*lang, doc, "/settings/languages/lang", "code")) s.languages.push_back(*code);
    for (const auto* topics : root.children_named("topics"))
        for (const auto* topic : topics->children_named("topic"))
            if (auto id = c.required(*topic, doc, "/settings/topics/topic", "id")) s.topics.push_back(*id);
    for (const auto* achs : root.children_named("achievements")) {
        for (const auto* ach : achs->children_named("ach")) {
            Achievement a;
            const auto id = c.required(*ach, doc, "/settings/achievements/ach", "id");
            a.id = id.value_or("");
            const std::string path = path_with_id("/settings/achievements/ach", "id", a.id);
            if (auto kind = c.required(*ach, doc, path, "kind")) {
                if (auto k = parse_achievement_kind(*kind)) a.kind = *k;
                else c.add(doc, path, "bad_attribute", "unknown achievement kind '" + *kind + "'");
            }
            if (c.required(*ach, doc, path, "threshold"))
                a.threshold = c.number(*ach, doc, path, "threshold", to_int).value_or(1);
            a.incentive_points = c.number(*ach, doc, path, "bonus", to_int).value_or(0);
            if (const auto* topic = ach->attribute("topic")) a.topic = *topic;
            if (a.kind == AchievementKind::topic_points && a.topic.empty())
                c.add(doc, path, "missing_attribute", "topic_points achievement needs a 'topic' attribute");
            for (const auto* t : ach->children_named("t")) {
                const std::string lang = t->attribute("lang") ? *t->attribute("lang")
                                         : s.languages.empty() ? "en" : s.languages.front();
                a.description[lang] = t->text;
            }
            s.achievements.push_back(std::move(a));
        }
    }
    return s;
}

struct GeolocationPart {
    std::vector<PointOfInterest> pois;
    std::vector<ParkingSpot> parking;
};

std::optional<geo::GeoPoint> read_position(const xml::Element& el, std::string_view doc, const std::string& path,
                                           Collector& c) {
    const bool has_lat = c.required(el, doc, path, "lat").has_value();
    const bool has_lon = c.required(el, doc, path, "lon").has_value();
    if (!has_lat || !has_lon) return std::nullopt;
    const auto lat = c.number(el, doc, path, "lat", to_double);
    const auto lon = c.number(el, doc, path, "lon", to_double);
    if (!lat || !lon) return std::nullopt;
    if (*lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon > 180.0) {
        c.add(doc, path, "bad_coordinate", "coordinate out of range");
        return std::nullopt;
    }
    return geo::GeoPoint(*lat, *lon);
}

GeolocationPart parse_geolocation(const xml::Element& root, Collector& c) {
    GeolocationPart part;
    constexpr auto doc = kGeolocationDoc;
    if (!check_root(root, "geolocations", doc, c)) return part;
    for (const auto* el : root.children_named("poi")) {
        PointOfInterest poi;
        poi.id = c.required(*el, doc, "/geolocations/poi", "id").value_or("");
        const std::string path = path_with_id("/geolocations/poi", "id", poi.id);
        poi.name = el->attribute("name") ? *el->attribute("name") : poi.id;
        if (auto pos = read_position(*el, doc, path, c)) poi.position = *pos;
        poi.trigger_radius_m = c.number(*el, doc, path, "trigger_m", to_double).value_or(kDefaultTriggerRadiusM);
        poi.message_id = c.required(*el, doc, path, "msg").value_or("");
        part.pois.push_back(std::move(poi));
    }
    for (const auto* el : root.children_named("parking")) {
        ParkingSpot spot;
        spot.id = c.required(*el, doc, "/geolocations/parking", "id").value_or("");
        const std::string path = path_with_id("/geolocations/parking", "id", spot.id);
        spot.name = el->attribute("name") ? *el->attribute("name") : spot.id;
        if (auto pos = read_position(*el, doc, path, c)) spot.position = *pos;
        part.parking.push_back(std::move(spot));
    }
    return part;
}

void join_location_list(const xml::Element& root, std::vector<PointOfInterest>& pois, Collector& c) {
    constexpr auto doc = kLocationListDoc;
    if (!check_root(root, "locations", doc, c)) return;
    std::vector<std::string> seen;
    for (const auto* el : root.children_named("loc")) {
        const auto ref = c.required(*el, doc, "/locations/loc", "ref");
        if (!ref) continue;
        const std::string path = path_with_id("/locations/loc", "ref", *ref);
        if (std::find(seen.begin(), seen.end(), *ref) != seen.end()) {
            c.add(doc, path, "duplicate_location_ref", "POI '" + *ref + "' has more than one <loc> entry");
            continue;
        }
        seen.push_back(*ref);
        if (std::none_of(pois.begin(), pois.end(), [&](const auto& p) { return p.id == *ref; })) {
            c.add(doc, path, "unknown_location_ref", "<loc> refers to POI '" + *ref + "' absent from Geolocation.xml");
            continue;
        }
        const std::string topic = c.required(*el, doc, path, "topic").value_or("");
        PointsPerQuestion points;
        points.easy = c.number(*el, doc, path, "easy_pts", to_int).value_or(points.easy);
        points.hard = c.number(*el, doc, path, "hard_pts", to_int).value_or(points.hard);
        // A duplicated POI id gets the same semantics; duplicate_poi_id reports it once.
        for (auto& p : pois) {
            if (p.id != *ref) continue;
            p.topic = topic;
            p.points = points;
        }
    }
}

// Consecutive <opt lang=..> elements belong to one option until a language repeats.
std::vector<LocalizedText> group_options(const xml::Element& q, const std::string& default_lang) {
    std::vector<LocalizedText> options;
    for (const auto* opt : q.children_named("opt")) {
        const std::string lang = opt->attribute("lang") ? *opt->attribute("lang") : default_lang;
        if (options.empty() || options.back().contains(lang)) options.emplace_back();
        options.back()[lang] = opt->text;
    }
    return options;
}

MessageCatalog parse_messages(const xml::Element& root, const std::vector<std::string>& languages, Collector& c) {
    MessageCatalog catalog;
    constexpr auto doc = kMessagesDoc;
    if (!check_root(root, "messages", doc, c)) return catalog;
    const std::string default_lang = languages.empty() ? "en" : languages.front();

    for (const auto* qz : root.children_named("quiz")) {
        Quiz quiz;
        quiz.id = c.required(*qz, doc, "/messages/quiz", "id").value_or("");
        const std::string quiz_path = path_with_id("/messages/quiz", "id", quiz.id);
        std::optional<Difficulty> quiz_difficulty;
        if (const auto* d = qz->attribute("difficulty")) {
            quiz_difficulty = parse_difficulty(*d);
            if (!quiz_difficulty) c.add(doc, quiz_path, "bad_attribute", "unknown difficulty '" + *d + "'");
        }
        const std::string quiz_topic = qz->attribute("topic") ? *qz->attribute("topic") : "";

        int index = 0;
        for (const auto* q : qz->children_named("q")) {
            ++index;
            QuizQuestion question;
            question.id = q->attribute("id") ? *q->attribute("id") : quiz.id + "." + std::to_string(index);
            const std::string path = quiz_path + "/q[" + std::to_string(index) + "]";
            if (c.required(*q, doc, path, "correct"))
                question.correct_index = c.number(*q, doc, path, "correct", to_int).value_or(0);
            if (const auto* d = q->attribute("difficulty")) {
                if (auto parsed = parse_difficulty(*d)) question.difficulty = *parsed;
                else c.add(doc, path, "bad_attribute", "unknown difficulty '" + *d + "'");
            } else if (quiz_difficulty) {
                question.difficulty = *quiz_difficulty;
            } else if (!qz->attribute("difficulty")) {
                c.add(doc, path, "missing_attribute", "question has no difficulty and its quiz declares none");
            }
            question.topic = q->attribute("topic") ? *q->attribute("topic") : quiz_topic;
            if (question.topic.empty())
                c.add(doc, path, "missing_attribute", "question has no topic and its quiz declares none");
            for (const auto* t : q->children_named("t")) {
                const std::string lang = t->attribute("lang") ? *t->attribute("lang") : default_lang;
                if (question.text.contains(lang))
                    c.add(doc, path, "duplicate_translation", "question text repeats language '" + lang + "'");
                question.text[lang] = t->text;
            }
            question.options = group_options(*q, default_lang);
            quiz.questions.push_back(std::move(question));
        }
        catalog.quizzes.push_back(std::move(quiz));
    }

    for (const auto* end : root.children_named("end")) {
        const auto id = c.required(*end, doc, "/messages/end", "id");
        if (!id) continue;
        const std::string path = path_with_id("/messages/end", "id", *id);
        if (catalog.end_messages.contains(*id)) {
            c.add(doc, path, "duplicate_end_id", "end message '" + *id + "' declared twice");
            continue;
        }
        std::vector<EndBand> bands;
        std::vector<std::string> raw_mins;
        bool bad = false;
        for (const auto* band : end->children_named("band")) {
            const auto raw = c.required(*band, doc, path + "/band", "min");
            if (!raw) {
                bad = true;
                continue;
            }
            const auto min = c.number(*band, doc, path + "/band", "min", to_double);
            if (!min) {
                bad = true;
                continue;
            }
            const std::string lang = band->attribute("lang") ? *band->attribute("lang") : default_lang;
            // Bands are grouped by their 'min' value; translations repeat it.
            auto it = std::find(raw_mins.begin(), raw_mins.end(), *raw);
            if (it == raw_mins.end()) {
                raw_mins.push_back(*raw);
                bands.push_back({*min, {}});
                it = raw_mins.end() - 1;
            }
            bands[static_cast<std::size_t>(it - raw_mins.begin())].text[lang] = band->text;
        }
        if (!bad) catalog.end_messages.emplace(*id, std::move(bands));
    }
    return catalog;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw Error(ErrorKind::io, "cannot write " + p.string());
}

}  // namespace

PackDocuments read_pack_directory(const std::filesystem::path& dir) {
    return PackDocuments{
        read_file(dir / std::string(kLocationListDoc)),
        read_file(dir / std::string(kGeolocationDoc)),
        read_file(dir / std::string(kGameSettingsDoc)),
        read_file(dir / std::string(kMessagesDoc)),
    };
}

void write_pack_directory(const PackDocuments& docs, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / std::string(kLocationListDoc), docs.location_list);
    write_file(dir / std::string(kGeolocationDoc), docs.geolocation);
    write_file(dir / std::string(kGameSettingsDoc), docs.game_settings);
    write_file(dir / std::string(kMessagesDoc), docs.messages);
}

ParseResult parse_content_pack(const PackDocuments& docs) {
    const xml::Element settings_root = parse_document(kGameSettingsDoc, docs.game_settings);
    const xml::Element geo_root = parse_document(kGeolocationDoc, docs.geolocation);
    const xml::Element loc_root = parse_document(kLocationListDoc, docs.location_list);
    const xml::Element msg_root = parse_document(kMessagesDoc, docs.messages);

    ValidationReport report;
    Collector c(report);
    ContentPack pack;
    pack.settings = parse_settings(settings_root, c);
    auto geo = parse_geolocation(geo_root, c);
    pack.pois = std::move(geo.pois);
    pack.parking_spots = std::move(geo.parking);
    join_location_list(loc_root, pack.pois, c);
    pack.messages = parse_messages(msg_root, pack.settings.languages, c);

    const ValidationReport cross = validate_cross_references(pack);
    report.entries.insert(report.entries.end(), cross.entries.begin(), cross.entries.end());
    if (!report.ok()) return report;
    return pack;
}

ContentPack load_content_pack(const std::filesystem::path& dir) {
    auto result = parse_content_pack(read_pack_directory(dir));
    if (auto* report = std::get_if<ValidationReport>(&result))
        throw Error(ErrorKind::content, "content pack " + dir.string() + " is invalid:\n" + report->to_string());
    return std::get<ContentPack>(std::move(result));
}

}  // namespace geoquiz::content
