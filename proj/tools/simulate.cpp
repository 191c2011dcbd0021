// Replays a synthetic GPS trip through the Bari-style content pack, either
// against an in-process engine or a running service, and compares the fired
// triggers with the brute-force oracle.
//
// Exit codes: 0 triggers match the oracle, 1 mismatch, 2 usage/config error.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "geoquiz/content.hpp"
#include "geoquiz/error.hpp"
#include "geoquiz/simulator.hpp"

int main(int argc, char** argv) {
    using namespace geoquiz;

    CLI::App app{"Replay a simulated EL-V trip and check geofence triggers against an oracle"};
    std::string pack_dir, route_file, report_file, api_url;
    std::string difficulty = "easy", policy = "always-correct", language = "en";
    std::string user = "simulator", email, password = "simulator-pass";
    sim::TraceParams params;
    params.seed = 42;
    app.add_option("--pack", pack_dir, "Content pack directory")->required();
    app.add_option("--route", route_file, "Waypoints file, one 'lat,lon' per line")->required();
    app.add_option("--speed", params.speed_mps, "Speed in m/s")->capture_default_str();
    app.add_option("--period", params.sample_period_s, "Sampling period in seconds")->capture_default_str();
    app.add_option("--noise", params.noise_sigma_m, "Gaussian position noise sigma in meters")->capture_default_str();
    app.add_option("--seed", params.seed, "Random seed")->capture_default_str();
    app.add_option("--difficulty", difficulty, "easy | hard")->capture_default_str();
    app.add_option("--policy", policy, "always-correct | always-first | seeded-random")->capture_default_str();
    app.add_option("--language", language, "Language code")->capture_default_str();
    app.add_option("--api", api_url, "Service base URL; omit to run the engine in-process");
    app.add_option("--user", user, "Username for --api (registered if missing)")->capture_default_str();
    app.add_option("--email", email, "Email for registration (default <user>@sim.local)");
    app.add_option("--password", password, "Password for --api")->capture_default_str();
    app.add_option("--report", report_file, "Write the JSON report here (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        sim::Scenario scenario;
        const auto parsed_difficulty = content::parse_difficulty(difficulty);
        const auto parsed_policy = sim::parse_answer_policy(policy);
        if (!parsed_difficulty) throw Error(ErrorKind::validation, "unknown difficulty '" + difficulty + "'");
        if (!parsed_policy) throw Error(ErrorKind::validation, "unknown policy '" + policy + "'");
        scenario.difficulty = *parsed_difficulty;
        scenario.policy = *parsed_policy;
        scenario.seed = params.seed;
        scenario.language = language;

        auto pack = std::make_shared<const content::ContentPack>(content::load_content_pack(pack_dir));
        const auto waypoints = sim::read_waypoints(route_file);
        const auto trace = sim::generate_trace(waypoints, params);

        sim::SimulationReport report;
        if (api_url.empty()) {
            report = sim::replay(trace, scenario, pack);
        } else {
            sim::ApiTarget target;
            target.base_url = api_url;
            target.username = user;
            target.email = email.empty() ? user + "@sim.local" : email;
            target.password = password;
            report = sim::replay_api(trace, scenario, *pack, target);
        }

        const std::string json = report.to_json();
        if (report_file.empty()) {
            std::cout << json;
        } else {
            std::ofstream out(report_file, std::ios::trunc);
            if (!(out << json)) throw Error(ErrorKind::io, "cannot write report " + report_file);
        }
        return report.match ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "simulate: " << e.what() << "\n";
        return 2;
    }
}
