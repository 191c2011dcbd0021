#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "geoquiz/content.hpp"
#include "geoquiz/service.hpp"
#include "geoquiz/store.hpp"
#include "httplib.h"

namespace {
httplib::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
    using namespace geoquiz;

    CLI::App app{"Location-based quiz game service"};
    std::string bind = "127.0.0.1";
    int port = 8080;
    std::string store_file = "geoquiz-store.log";
    std::string pack_dir = "data/bari";
    std::string language = "en";
    std::string hash_cost = "interactive";
    std::string static_dir;
    app.add_option("--bind", bind, "Bind address")->envname("GEOQUIZ_BIND")->capture_default_str();
    app.add_option("--port", port, "TCP port (0 picks a free one)")->envname("GEOQUIZ_PORT")->capture_default_str();
    app.add_option("--store", store_file, "Store journal file")->envname("GEOQUIZ_STORE")->capture_default_str();
    app.add_option("--pack", pack_dir, "Content pack directory")->envname("GEOQUIZ_PACK")->capture_default_str();
    app.add_option("--language", language, "Default language")->envname("GEOQUIZ_LANGUAGE")->capture_default_str();
    app.add_option("--hash-cost", hash_cost, "Password hashing cost")
        ->check(CLI::IsMember({"interactive", "minimal"}))
        ->capture_default_str();
    app.add_option("--static", static_dir, "Serve this directory at / (web UI build)")->envname("GEOQUIZ_STATIC");
    CLI11_PARSE(app, argc, argv);

    try {
        auto pack = std::make_shared<const content::ContentPack>(content::load_content_pack(pack_dir));
        store::Store store({store_file, hash_cost == "minimal" ? store::HashCost::minimal : store::HashCost::interactive,
                            true, {}});
        service::Service service({language, static_dir}, pack, store);

        httplib::Server server;
        service.install(server);
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);

        const int bound = port == 0 ? server.bind_to_any_port(bind) : (server.bind_to_port(bind, port) ? port : -1);
        if (bound < 0) {
            std::cerr << "geoquiz-server: cannot bind " << bind << ":" << port << "\n";
            return 2;
        }
        std::cout << "listening on http://" << bind << ":" << bound << " (" << pack->pois.size() << " POIs, store "
                  << store_file << ")" << std::endl;
        server.listen_after_bind();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "geoquiz-server: " << e.what() << "\n";
        return 2;
    }
}
