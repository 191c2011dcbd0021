#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include "geoquiz/content.hpp"
#include "geoquiz/geo.hpp"
#include "geoquiz/results.hpp"
#include "geoquiz/service.hpp"
#include "geoquiz/store.hpp"
#include "httplib.h"
#include "json.hpp"

#ifndef GEOQUIZ_SOURCE_DIR
#error "GEOQUIZ_SOURCE_DIR must be defined by the build"
#endif

namespace testsupport {

inline std::filesystem::path source_dir() { return GEOQUIZ_SOURCE_DIR; }
inline std::filesystem::path demo_pack_dir() { return source_dir() / "data" / "bari"; }
inline std::filesystem::path demo_route() { return source_dir() / "data" / "bari" / "route_3pois.txt"; }

inline std::shared_ptr<const geoquiz::content::ContentPack> demo_pack() {
    static const auto pack =
        std::make_shared<const geoquiz::content::ContentPack>(geoquiz::content::load_content_pack(demo_pack_dir()));
    return pack;
}

/// Independent distance oracle: spherical law of cosines, same sphere radius.
inline double law_of_cosines_m(double lat1, double lon1, double lat2, double lon2) {
    constexpr double k = std::numbers::pi / 180.0;
    const double c = std::sin(lat1 * k) * std::sin(lat2 * k) +
                     std::cos(lat1 * k) * std::cos(lat2 * k) * std::cos((lon2 - lon1) * k);
    return 6'371'000.0 * std::acos(std::clamp(c, -1.0, 1.0));
}

struct Bracket {
    geoquiz::geo::GeoPoint below;     // distance < target
    geoquiz::geo::GeoPoint at_or_above;  // smallest representable latitude with distance >= target
};

/// Walks north from `center` and brackets the representable latitude where
/// the computed distance first reaches `target_m`.
inline Bracket bracket_north(const geoquiz::geo::GeoPoint& center, double target_m) {
    using geoquiz::geo::GeoPoint;
    double lo = center.lat();
    double hi = center.lat() + 2.0 * target_m / 6'371'000.0 * 180.0 / std::numbers::pi;
    const auto dist = [&](double lat) { return geoquiz::geo::haversine_distance(center, GeoPoint(lat, center.lon())); };
    while (std::nextafter(lo, hi) < hi) {
        const double mid = lo + (hi - lo) / 2.0;
        if (mid <= lo || mid >= hi) break;
        (dist(mid) >= target_m ? hi : lo) = mid;
    }
    return {GeoPoint(lo, center.lon()), GeoPoint(hi, center.lon())};
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::random_device rd;
    auto dir = std::filesystem::temp_directory_path() /
               ("geoquiz-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

/// Map-backed ResultStore for engine-level tests.
class MemoryResultStore : public geoquiz::ResultStore {
public:
    geoquiz::SaveOutcome put_result(const std::string& key, const geoquiz::ResultRecord& record,
                                    bool overwrite) override {
        std::lock_guard lock(mutex_);
        if (records_.contains(key) && !overwrite) return geoquiz::SaveOutcome::rejected_exists;
        records_[key] = record;
        return geoquiz::SaveOutcome::stored;
    }
    std::optional<geoquiz::ResultRecord> get_result(const std::string& key) const override {
        std::lock_guard lock(mutex_);
        const auto it = records_.find(key);
        return it == records_.end() ? std::nullopt : std::optional(it->second);
    }
    std::map<std::string, geoquiz::ResultRecord> fetch_results(const std::string& user_id) const override {
        std::lock_guard lock(mutex_);
        std::map<std::string, geoquiz::ResultRecord> out;
        for (const auto& [k, v] : records_)
            if (v.user_id == user_id) out.emplace(k, v);
        return out;
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, geoquiz::ResultRecord> records_;
};

/// Replaces the first occurrence of `from`; throws if it is absent so a stale
/// mutation cannot silently become a no-op.
inline void replace_once(std::string& text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    if (at == std::string::npos) throw std::runtime_error("mutation anchor not found: " + from);
    text.replace(at, from.size(), to);
}

struct Mutation {
    std::string name;
    std::string rule;  // the single rule the mutated pack must violate
    std::function<void(geoquiz::content::PackDocuments&)> apply;
};

/// One-violation mutations of the demo pack.
inline std::vector<Mutation> demo_mutations() {
    using Docs = geoquiz::content::PackDocuments;
    return {
        {"dangling message id", "dangling_message_ref",
         [](Docs& d) { replace_once(d.geolocation, R"(msg="q_castello")", R"(msg="m99")"); }},
        {"correct index past last option", "correct_index_out_of_range",
         [](Docs& d) { replace_once(d.messages, R"(<q id="q_basilica.1" correct="2">)", R"(<q id="q_basilica.1" correct="3">)"); }},
        {"undeclared topic", "unknown_topic",
         [](Docs& d) { replace_once(d.location_list, R"(ref="ferrarese" topic="arts_show_trivia")", R"(ref="ferrarese" topic="food")"); }},
        {"bands leave a gap at zero", "band_coverage",
         [](Docs& d) {
             replace_once(d.messages, R"(<band min="0" lang="en">The castle)", R"(<band min="0.2" lang="en">The castle)");
             replace_once(d.messages, R"(<band min="0" lang="it">Il castello)", R"(<band min="0.2" lang="it">Il castello)");
         }},
        {"duplicate POI id", "duplicate_poi_id",
         [](Docs& d) {
             const std::string line =
                 R"(<poi id="politecnico" name="Politecnico di Bari" lat="41.10898" lon="16.87846" trigger_m="200" msg="q_politecnico"/>)";
             replace_once(d.geolocation, line, line + "\n  " + line);
         }},
        {"achievement threshold zero", "threshold_out_of_range",
         [](Docs& d) { replace_once(d.game_settings, R"(kind="quizzes_completed" threshold="5")", R"(kind="quizzes_completed" threshold="0")"); }},
        {"four options", "option_count",
         [](Docs& d) {
             replace_once(d.messages, "<opt lang=\"it\">Gotico</opt>",
                          "<opt lang=\"it\">Gotico</opt>\n      <opt lang=\"en\">Neoclassical</opt>\n      "
                          "<opt lang=\"it\">Neoclassico</opt>");
         }},
        {"undeclared language", "undeclared_language",
         [](Docs& d) {
             replace_once(d.messages, "<t lang=\"it\">Chi ricostru",
                          "<t lang=\"fr\">Qui a reconstruit le ch\xC3\xA2teau en 1233 ?</t>\n      <t lang=\"it\">Chi ricostru");
         }},
        {"negative trigger radius", "bad_trigger_radius",
         [](Docs& d) { replace_once(d.geolocation, R"(lon="16.87021" trigger_m="200")", R"(lon="16.87021" trigger_m="-5")"); }},
        {"location entry for a missing POI", "unknown_location_ref",
         [](Docs& d) {
             replace_once(d.location_list, "</locations>",
                          "  <loc ref=\"ghost\" topic=\"history\" easy_pts=\"10\" hard_pts=\"20\"/>\n</locations>");
         }},
    };
}

/// Runs the HTTP service on an ephemeral localhost port.
class ServerFixture {
public:
    explicit ServerFixture(std::shared_ptr<const geoquiz::content::ContentPack> pack = demo_pack(),
                           std::filesystem::path store_file = {})
        : store_({store_file, geoquiz::store::HashCost::minimal, false, {}}),
          service_({"en", {}}, std::move(pack), store_) {
        service_.install(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~ServerFixture() {
        server_.stop();
        thread_.join();
    }

    int port() const { return port_; }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    geoquiz::store::Store& store() { return store_; }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(30);
        return c;
    }

private:
    geoquiz::store::Store store_;
    geoquiz::service::Service service_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

struct HttpReply {
    int status = 0;
    std::string body;
    nlohmann::json json;
};

inline HttpReply to_reply(const httplib::Result& r) {
    HttpReply out;
    if (!r) return out;
    out.status = r->status;
    out.body = r->body;
    out.json = nlohmann::json::parse(r->body, nullptr, false);
    return out;
}

inline httplib::Headers bearer(const std::string& token) { return {{"Authorization", "Bearer " + token}}; }

inline HttpReply post(httplib::Client& c, const std::string& path, const nlohmann::json& body,
                      const std::string& token = {}) {
    return to_reply(c.Post(path, token.empty() ? httplib::Headers{} : bearer(token), body.dump(), "application/json"));
}

inline HttpReply get(httplib::Client& c, const std::string& path, const std::string& token = {}) {
    return to_reply(c.Get(path, token.empty() ? httplib::Headers{} : bearer(token)));
}

/// Registers and logs in; returns the bearer token.
inline std::string signup(httplib::Client& c, const std::string& name, const std::string& password = "s3cretpw!") {
    post(c, "/api/register", {{"email", name + "@example.it"}, {"username", name}, {"password", password}});
    return post(c, "/api/login", {{"identifier", name}, {"password", password}}).json.value("token", "");
}

}  // namespace testsupport
