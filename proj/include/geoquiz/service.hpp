#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "geoquiz/content.hpp"
#include "geoquiz/engine.hpp"
#include "geoquiz/store.hpp"

namespace httplib {
class Server;
}

namespace geoquiz::service {

struct ServiceConfig {
    std::string default_language = "en";
    /// Directory served at "/" (the web UI build), empty to disable.
    std::string static_dir;
};

/// Status code for an error kind: 401 auth, 409 conflict/sequence/state,
/// 422 validation/domain, 404 not_found, 422 content, 500 io.
int http_status(ErrorKind kind);

/// The ApiError code string for an error kind (domain and state fold into
/// validation and conflict).
std::string_view api_code(ErrorKind kind);

/// JSON facade over the engine and the store. Register its routes on an
/// httplib::Server with install(); the server's worker threads may call in
/// concurrently.
class Service {
public:
    Service(ServiceConfig config, std::shared_ptr<const content::ContentPack> pack, store::Store& store);
    ~Service();

    void install(httplib::Server& server);

    const content::ContentPack& pack() const { return *pack_; }

private:
    struct SessionSlot;

    ServiceConfig config_;
    std::shared_ptr<const content::ContentPack> pack_;
    store::Store& store_;

    std::mutex sessions_mutex_;
    std::unordered_map<std::string, std::shared_ptr<SessionSlot>> sessions_;  // session id -> slot
    std::unordered_map<std::string, std::string> active_session_;             // user id -> session id

    std::mutex pending_mutex_;
    // Completed but unsaved results: user id -> questionnaire -> result.
    std::unordered_map<std::string, std::map<std::string, engine::QuizResult>> unsaved_;

    std::shared_ptr<SessionSlot> find_session(const std::string& session_id, const std::string& user_id);
};

}  // namespace geoquiz::service
