#include "content_internal.hpp"
#include "geoquiz/content.hpp"
#include "geoquiz/xml.hpp"

namespace geoquiz::content {

using detail::format_double;

namespace {

xml::Element make(std::string name, std::vector<std::pair<std::string, std::string>> attrs = {},
                  std::string text = {}) {
    xml::Element el;
    el.name = std::move(name);
    el.attributes = std::move(attrs);
    el.text = std::move(text);
    return el;
}

void append_localized(xml::Element& parent, const std::string& tag, const LocalizedText& text,
                      std::vector<std::pair<std::string, std::string>> extra = {}) {
    for (const auto& [lang, value] : text) {
        auto attrs = extra;
        attrs.emplace_back("lang", lang);
        parent.children.push_back(make(tag, std::move(attrs), value));
    }
}

xml::Element geolocation_doc(const ContentPack& pack) {
    auto root = make("geolocations");
    for (const auto& p : pack.pois)
        root.children.push_back(make("poi", {{"id", p.id},
                                             {"name", p.name},
                                             {"lat", format_double(p.position.lat())},
                                             {"lon", format_double(p.position.lon())},
                                             {"trigger_m", format_double(p.trigger_radius_m)},
                                             {"msg", p.message_id}}));
    for (const auto& s : pack.parking_spots)
        root.children.push_back(make("parking", {{"id", s.id},
                                                 {"name", s.name},
                                                 {"lat", format_double(s.position.lat())},
                                                 {"lon", format_double(s.position.lon())}}));
    return root;
}

xml::Element location_list_doc(const ContentPack& pack) {
    auto root = make("locations");
    for (const auto& p : pack.pois)
        root.children.push_back(make("loc", {{"ref", p.id},
                                             {"topic", p.topic},
                                             {"easy_pts", std::to_string(p.points.easy)},
                                             {"hard_pts", std::to_string(p.points.hard)}}));
    return root;
}

xml::Element settings_doc(const GameSettings& s) {
    auto root = make("settings");
    auto langs = make("languages");
    for (const auto& l : s.languages) langs.children.push_back(make("lang", {{"code", l}}));
    auto topics = make("topics");
    for (const auto& t : s.topics) topics.children.push_back(make("topic", {{"id", t}}));
    auto achs = make("achievements");
    for (const auto& a : s.achievements) {
        std::vector<std::pair<std::string, std::string>> attrs{{"id", a.id},
                                                               {"kind", std::string(to_string(a.kind))},
                                                               {"threshold", std::to_string(a.threshold)},
                                                               {"bonus", std::to_string(a.incentive_points)}};
        if (!a.topic.empty()) attrs.emplace_back("topic", a.topic);
        auto ach = make("ach", std::move(attrs));
        append_localized(ach, "t", a.description);
        achs.children.push_back(std::move(ach));
    }
    root.children.push_back(std::move(langs));
    root.children.push_back(std::move(topics));
    root.children.push_back(std::move(achs));
    return root;
}

xml::Element messages_doc(const MessageCatalog& m) {
    auto root = make("messages");
    for (const auto& quiz : m.quizzes) {
        const Difficulty quiz_difficulty = quiz.questions.empty() ? Difficulty::easy : quiz.questions.front().difficulty;
        const std::string quiz_topic = quiz.questions.empty() ? "" : quiz.questions.front().topic;
        std::vector<std::pair<std::string, std::string>> attrs{{"id", quiz.id},
                                                               {"difficulty", std::string(to_string(quiz_difficulty))}};
        if (!quiz_topic.empty()) attrs.emplace_back("topic", quiz_topic);
        auto qz = make("quiz", std::move(attrs));
        for (const auto& q : quiz.questions) {
            std::vector<std::pair<std::string, std::string>> qattrs{{"id", q.id},
                                                                    {"correct", std::to_string(q.correct_index)}};
            if (q.difficulty != quiz_difficulty) qattrs.emplace_back("difficulty", std::string(to_string(q.difficulty)));
            if (q.topic != quiz_topic) qattrs.emplace_back("topic", q.topic);
            auto qe = make("q", std::move(qattrs));
            append_localized(qe, "t", q.text);
            for (const auto& opt : q.options) append_localized(qe, "opt", opt);
            qz.children.push_back(std::move(qe));
        }
        root.children.push_back(std::move(qz));
    }
    for (const auto& [id, bands] : m.end_messages) {
        auto end = make("end", {{"id", id}});
        for (const auto& b : bands) append_localized(end, "band", b.text, {{"min", format_double(b.min_fraction)}});
        root.children.push_back(std::move(end));
    }
    return root;
}

}  // namespace

PackDocuments serialize(const ContentPack& pack) {
    return PackDocuments{
        xml::write(location_list_doc(pack)),
        xml::write(geolocation_doc(pack)),
        xml::write(settings_doc(pack.settings)),
        xml::write(messages_doc(pack.messages)),
    };
}

}  // namespace geoquiz::content
