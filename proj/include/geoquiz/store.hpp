#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "geoquiz/error.hpp"
#include "geoquiz/results.hpp"

namespace geoquiz::store {

struct UserAccount {
    std::string user_id;
    std::string email;
    std::string username;
    std::string password_hash;  // argon2id encoded string
    std::string vehicle_id;
    std::uint64_t registration_seq = 0;
    std::map<std::string, int> awarded;  // achievement id -> incentive points
    double registered_at = 0.0;

    friend bool operator==(const UserAccount&, const UserAccount&) = default;
};

struct SessionToken {
    std::string token;  // 64 hex chars (256 bits)
    std::string user_id;
    double issued_at = 0.0;
};

struct FieldError {
    std::string field;
    std::string message;
};

/// Registration rejected; carries every offending field.
class ValidationFailure : public Error {
public:
    explicit ValidationFailure(std::vector<FieldError> fields);
    const std::vector<FieldError>& fields() const noexcept { return fields_; }

private:
    std::vector<FieldError> fields_;
};

struct LeaderboardRow {
    std::string user_id;
    std::string username;
    int points = 0;

    friend bool operator==(const LeaderboardRow&, const LeaderboardRow&) = default;
};

enum class HashCost {
    interactive,  // libsodium INTERACTIVE limits (64 MiB)
    minimal,      // libsodium MIN limits; for tests only
};

inline constexpr std::size_t kMinPasswordLength = 8;

struct StoreOptions {
    /// Append-only log file. Empty means purely in-memory.
    std::filesystem::path file;
    HashCost hash_cost = HashCost::interactive;
    bool fsync = true;
    /// Called before each journal write; throwing from it simulates an I/O
    /// failure. Used by tests.
    std::function<void()> before_write;
};

/// Accounts, tokens and results behind one reader/writer lock, journalled to
/// an append-only file of checksummed JSON lines. Every mutation is written
/// (and optionally fsync'ed) before it becomes visible in memory, so a failed
/// write leaves both the file and the in-memory state unchanged. A torn final
/// line left by a crash is discarded on reopen.
class Store : public ResultStore {
public:
    explicit Store(StoreOptions options = {});
    ~Store() override;

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    /// Throws ValidationFailure with field-level messages.
    std::string register_user(const std::string& email, const std::string& username, const std::string& password,
                              const std::string& vehicle_id = "el_v");

    /// `identifier` is an email or a username. Any failure is Error(auth) with
    /// the same message.
    SessionToken login(const std::string& identifier, const std::string& password);

    /// Error(auth) for unknown or revoked tokens.
    std::string authenticate(const std::string& token) const;
    void logout(const std::string& token);

    std::optional<UserAccount> account(const std::string& user_id) const;
    void set_vehicle(const std::string& user_id, const std::string& vehicle_id);

    /// Adds achievement awards; ids already present are ignored.
    void record_awards(const std::string& user_id, const std::map<std::string, int>& awards);

    /// Sum of saved scores plus achievement incentives.
    int wallet(const std::string& user_id) const;

    /// Unconditional last-writer-wins write.
    void store_result(const std::string& key, const ResultRecord& record);

    SaveOutcome put_result(const std::string& key, const ResultRecord& record, bool overwrite) override;
    std::optional<ResultRecord> get_result(const std::string& key) const override;
    std::map<std::string, ResultRecord> fetch_results(const std::string& user_id) const override;

    /// Users by descending points, ties by registration order. top_n >= 1.
    std::vector<LeaderboardRow> leaderboard(int top_n) const;

    std::size_t user_count() const;
    const std::filesystem::path& file() const { return options_.file; }

private:
    struct Journal;

    StoreOptions options_;
    std::unique_ptr<Journal> journal_;
    mutable std::shared_mutex mutex_;

    std::unordered_map<std::string, UserAccount> users_;
    std::unordered_map<std::string, std::string> by_email_;
    std::unordered_map<std::string, std::string> by_username_;
    std::unordered_map<std::string, std::string> tokens_;  // sha256(token) hex -> user id
    std::map<std::string, ResultRecord> results_;
    std::unordered_map<std::string, std::set<std::string>> result_keys_by_user_;
    std::string dummy_hash_;
    std::uint64_t next_seq_ = 1;

    void replay();
    void apply(const std::string& line_json);
    void append(const std::string& line_json);  // requires exclusive lock
    int wallet_locked(const UserAccount& account) const;
};

/// Hex encoding of `bytes` bytes from the system CSPRNG.
std::string random_hex(std::size_t bytes);

/// Argon2id hash in libsodium's encoded string form.
std::string hash_password(const std::string& password, HashCost cost);
bool verify_password(const std::string& encoded, const std::string& password);

}  // namespace geoquiz::store
