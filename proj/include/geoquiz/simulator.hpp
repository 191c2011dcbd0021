#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "geoquiz/content.hpp"
#include "geoquiz/geo.hpp"

namespace geoquiz::sim {

struct TimedPoint {
    geo::GeoPoint point;
    double t = 0.0;  // seconds since trace start

    friend bool operator==(const TimedPoint&, const TimedPoint&) = default;
};

struct TraceParams {
    double speed_mps = 5.0;
    double sample_period_s = 1.0;
    double noise_sigma_m = 0.0;
    std::uint64_t seed = 0;
};

/// Samples a constant-speed trip along the great-circle legs between
/// consecutive waypoints every `sample_period_s`, ending exactly at the last
/// waypoint. Gaussian noise is applied in the local east/north plane.
/// Throws Error(domain) for fewer than two waypoints or bad parameters.
std::vector<TimedPoint> generate_trace(std::span<const geo::GeoPoint> waypoints, const TraceParams& params);

/// Brute force: every POI with at least one trace point strictly inside its radius.
std::set<std::string> oracle_triggers(std::span<const TimedPoint> trace,
                                      std::span<const content::PointOfInterest> pois);

enum class AnswerPolicy { always_correct, always_first, seeded_random };

std::string_view to_string(AnswerPolicy p);
std::optional<AnswerPolicy> parse_answer_policy(std::string_view s);

struct Scenario {
    content::Difficulty difficulty = content::Difficulty::easy;
    AnswerPolicy policy = AnswerPolicy::always_correct;
    std::uint64_t seed = 0;
    std::string language = "en";
};

struct SimulationReport {
    std::vector<std::string> triggers_fired;
    int quizzes_completed = 0;
    int total_score = 0;
    std::set<std::string> oracle_triggers;
    bool match = true;

    std::string to_json() const;
    friend bool operator==(const SimulationReport&, const SimulationReport&) = default;
};

/// Plays the trace against an in-process engine session.
SimulationReport replay(std::span<const TimedPoint> trace, const Scenario& scenario,
                        std::shared_ptr<const content::ContentPack> pack);

struct ApiTarget {
    std::string base_url;  // e.g. http://127.0.0.1:8080
    std::string username;
    std::string email;
    std::string password;
    std::string vehicle_id = "el_v";
    bool register_if_missing = true;
    bool save_results = true;
    bool overwrite = true;
};

/// Plays the trace through the HTTP service. `pack` is the same content the
/// service runs; it supplies correct answers for the policies and the oracle.
/// Throws Error(io) when the service is unreachable or answers unexpectedly.
SimulationReport replay_api(std::span<const TimedPoint> trace, const Scenario& scenario,
                            const content::ContentPack& pack, const ApiTarget& target);

/// Waypoints file: one "lat,lon" per line; blank lines and '#' comments ignored.
std::vector<geo::GeoPoint> read_waypoints(const std::filesystem::path& file);

}  // namespace geoquiz::sim
