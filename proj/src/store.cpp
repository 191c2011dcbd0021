#include "geoquiz/store.hpp"

#include <fcntl.h>
#include <sodium.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace geoquiz::store {

using nlohmann::json;

namespace {

void ensure_sodium() {
    static const bool ok = sodium_init() >= 0;
    if (!ok) throw Error(ErrorKind::io, "libsodium failed to initialise");
}

double now_seconds() {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

std::string random_hex(std::size_t bytes) {
    ensure_sodium();
    std::vector<unsigned char> buf(bytes);
    randombytes_buf(buf.data(), buf.size());
    std::string hex(bytes * 2 + 1, '\0');
    sodium_bin2hex(hex.data(), hex.size(), buf.data(), buf.size());
    hex.pop_back();
    return hex;
}

namespace {

std::string token_digest(const std::string& token) {
    unsigned char digest[crypto_hash_sha256_BYTES];
    crypto_hash_sha256(digest, reinterpret_cast<const unsigned char*>(token.data()), token.size());
    char hex[crypto_hash_sha256_BYTES * 2 + 1];
    sodium_bin2hex(hex, sizeof hex, digest, sizeof digest);
    return hex;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool valid_email(const std::string& email) {
    if (email.size() > 254) return false;
    const auto at = email.find('@');
    if (at == std::string::npos || at == 0 || email.find('@', at + 1) != std::string::npos) return false;
    const std::string domain = email.substr(at + 1);
    const auto dot = domain.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= domain.size()) return false;
    if (domain.find("..") != std::string::npos || domain.front() == '.') return false;
    return std::none_of(email.begin(), email.end(),
                        [](unsigned char c) { return std::isspace(c) || c < 0x20 || c == '<' || c == '>'; });
}

bool valid_username(const std::string& username) {
    if (username.size() < 3 || username.size() > 32) return false;
    return std::all_of(username.begin(), username.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '.' || c == '-';
    });
}

std::uint32_t crc_of(const std::string& s) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

std::string frame(const std::string& payload) {
    char crc[9];
    std::snprintf(crc, sizeof crc, "%08x", crc_of(payload));
    return std::string(crc) + " " + payload + "\n";
}

json record_to_json(const ResultRecord& r) {
    return {{"questionnaire", r.questionnaire_name}, {"user_id", r.user_id},   {"poi_id", r.poi_id},
            {"topic", r.topic},                      {"difficulty", r.difficulty}, {"correct", r.correct_count},
            {"total", r.total_count},                {"score", r.score},       {"topic_points", r.topic_points},
            {"saved_at", r.saved_at}};
}

ResultRecord record_from_json(const json& j) {
    ResultRecord r;
    r.questionnaire_name = j.at("questionnaire").get<std::string>();
    r.user_id = j.at("user_id").get<std::string>();
    r.poi_id = j.value("poi_id", "");
    r.topic = j.value("topic", "");
    r.difficulty = j.value("difficulty", "");
    r.correct_count = j.at("correct").get<int>();
    r.total_count = j.at("total").get<int>();
    r.score = j.at("score").get<int>();
    r.topic_points = j.value("topic_points", std::map<std::string, int>{});
    r.saved_at = j.value("saved_at", 0.0);
    return r;
}

json account_to_json(const UserAccount& a) {
    return {{"user_id", a.user_id},      {"email", a.email},       {"username", a.username},
            {"password_hash", a.password_hash}, {"vehicle_id", a.vehicle_id}, {"seq", a.registration_seq},
            {"awarded", a.awarded},      {"registered_at", a.registered_at}};
}

UserAccount account_from_json(const json& j) {
    UserAccount a;
    a.user_id = j.at("user_id").get<std::string>();
    a.email = j.at("email").get<std::string>();
    a.username = j.at("username").get<std::string>();
    a.password_hash = j.at("password_hash").get<std::string>();
    a.vehicle_id = j.value("vehicle_id", "el_v");
    a.registration_seq = j.at("seq").get<std::uint64_t>();
    a.awarded = j.value("awarded", std::map<std::string, int>{});
    a.registered_at = j.value("registered_at", 0.0);
    return a;
}

}  // namespace

std::string hash_password(const std::string& password, HashCost cost) {
    ensure_sodium();
    const auto ops = cost == HashCost::interactive ? crypto_pwhash_OPSLIMIT_INTERACTIVE : crypto_pwhash_OPSLIMIT_MIN;
    const auto mem = cost == HashCost::interactive ? crypto_pwhash_MEMLIMIT_INTERACTIVE : crypto_pwhash_MEMLIMIT_MIN;
    char out[crypto_pwhash_STRBYTES];
    if (crypto_pwhash_str_alg(out, password.data(), password.size(), ops, mem, crypto_pwhash_ALG_ARGON2ID13) != 0)
        throw Error(ErrorKind::io, "password hashing ran out of memory");
    return out;
}

bool verify_password(const std::string& encoded, const std::string& password) {
    ensure_sodium();
    return crypto_pwhash_str_verify(encoded.c_str(), password.data(), password.size()) == 0;
}

ValidationFailure::ValidationFailure(std::vector<FieldError> fields)
    : Error(ErrorKind::validation, fields.empty() ? "invalid input" : fields.front().message,
            fields.empty() ? "" : fields.front().field),
      fields_(std::move(fields)) {}

struct Store::Journal {
    int fd = -1;
    std::filesystem::path path;

    ~Journal() {
        if (fd >= 0) ::close(fd);
    }
};

Store::Store(StoreOptions options) : options_(std::move(options)) {
    ensure_sodium();
    dummy_hash_ = hash_password(random_hex(16), options_.hash_cost);
    if (options_.file.empty()) return;
    if (options_.file.has_parent_path()) std::filesystem::create_directories(options_.file.parent_path());
    replay();
    journal_ = std::make_unique<Journal>();
    journal_->path = options_.file;
    journal_->fd = ::open(options_.file.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0600);
    if (journal_->fd < 0)
        throw Error(ErrorKind::io, "cannot open store file " + options_.file.string() + ": " + std::strerror(errno));
}

Store::~Store() = default;

void Store::replay() {
    std::ifstream in(options_.file, std::ios::binary);
    if (!in) return;
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();

    std::size_t pos = 0;
    while (pos < data.size()) {
        const auto nl = data.find('\n', pos);
        bool good = nl != std::string::npos && nl - pos > 9 && data[pos + 8] == ' ';
        if (good) {
            const std::string payload = data.substr(pos + 9, nl - pos - 9);
            char crc[9];
            std::snprintf(crc, sizeof crc, "%08x", crc_of(payload));
            good = data.compare(pos, 8, crc) == 0;
            if (good) {
                try {
                    apply(payload);
                } catch (const std::exception&) {
                    good = false;
                }
            }
        }
        if (!good) {
            // Torn or corrupt tail from an interrupted write: drop it.
            std::filesystem::resize_file(options_.file, pos);
            return;
        }
        pos = nl + 1;
    }
}

void Store::apply(const std::string& line_json) {
    const json j = json::parse(line_json);
    const std::string type = j.at("type").get<std::string>();
    if (type == "user") {
        UserAccount a = account_from_json(j.at("user"));
        if (auto it = users_.find(a.user_id); it != users_.end()) {
            by_email_.erase(lower(it->second.email));
            by_username_.erase(lower(it->second.username));
        }
        by_email_[lower(a.email)] = a.user_id;
        by_username_[lower(a.username)] = a.user_id;
        next_seq_ = std::max(next_seq_, a.registration_seq + 1);
        users_[a.user_id] = std::move(a);
    } else if (type == "token") {
        tokens_[j.at("digest").get<std::string>()] = j.at("user_id").get<std::string>();
    } else if (type == "revoke") {
        tokens_.erase(j.at("digest").get<std::string>());
    } else if (type == "result") {
        const std::string key = j.at("key").get<std::string>();
        ResultRecord rec = record_from_json(j.at("record"));
        result_keys_by_user_[rec.user_id].insert(key);
        results_[key] = std::move(rec);
    } else {
        throw Error(ErrorKind::io, "unknown journal record type '" + type + "'");
    }
}

void Store::append(const std::string& line_json) {
    if (options_.before_write) {
        try {
            options_.before_write();
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw Error(ErrorKind::io, std::string("store write failed: ") + e.what());
        }
    }
    if (!journal_) return;
    const std::string line = frame(line_json);
    const off_t before = ::lseek(journal_->fd, 0, SEEK_END);
    std::size_t written = 0;
    while (written < line.size()) {
        const ssize_t n = ::write(journal_->fd, line.data() + written, line.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            const std::string reason = std::strerror(errno);
            if (before >= 0 && ::ftruncate(journal_->fd, before) != 0) {
                // leave the torn line; replay discards it
            }
            throw Error(ErrorKind::io, "store write failed: " + reason);
        }
        written += static_cast<std::size_t>(n);
    }
    if (options_.fsync && ::fsync(journal_->fd) != 0)
        throw Error(ErrorKind::io, std::string("store fsync failed: ") + std::strerror(errno));
}

std::string Store::register_user(const std::string& email, const std::string& username, const std::string& password,
                                 const std::string& vehicle_id) {
    std::vector<FieldError> errors;
    if (!valid_email(email)) errors.push_back({"email", "email address is not valid"});
    if (!valid_username(username))
        errors.push_back({"username", "username must be 3-32 characters of letters, digits, '_', '.' or '-'"});
    if (password.size() < kMinPasswordLength)
        errors.push_back({"password", "password is too short (minimum " + std::to_string(kMinPasswordLength) +
                                          " characters)"});
    {
        std::shared_lock lock(mutex_);
        if (valid_email(email) && by_email_.contains(lower(email))) errors.push_back({"email", "email is already taken"});
        if (valid_username(username) && by_username_.contains(lower(username)))
            errors.push_back({"username", "username is already taken"});
    }
    if (!errors.empty()) throw ValidationFailure(std::move(errors));

    UserAccount account;
    account.user_id = random_hex(16);
    account.email = email;
    account.username = username;
    account.password_hash = hash_password(password, options_.hash_cost);
    account.vehicle_id = vehicle_id;
    account.registered_at = now_seconds();

    std::unique_lock lock(mutex_);
    // Re-check: another registration may have won the race while hashing.
    if (by_email_.contains(lower(email))) errors.push_back({"email", "email is already taken"});
    if (by_username_.contains(lower(username))) errors.push_back({"username", "username is already taken"});
    if (!errors.empty()) throw ValidationFailure(std::move(errors));
    account.registration_seq = next_seq_;
    const json line = {{"type", "user"}, {"user", account_to_json(account)}};
    append(line.dump());
    apply(line.dump());
    return account.user_id;
}

SessionToken Store::login(const std::string& identifier, const std::string& password) {
    std::string hash = dummy_hash_;
    std::string user_id;
    {
        std::shared_lock lock(mutex_);
        const auto& index = identifier.find('@') != std::string::npos ? by_email_ : by_username_;
        if (auto it = index.find(lower(identifier)); it != index.end()) {
            user_id = it->second;
            hash = users_.at(user_id).password_hash;
        }
    }
    // Always run one verification so unknown identifiers cost the same time.
    const bool ok = verify_password(hash, password);
    if (!ok || user_id.empty()) throw Error(ErrorKind::auth, "invalid credentials");

    SessionToken token{random_hex(32), user_id, now_seconds()};
    const json line = {{"type", "token"}, {"digest", token_digest(token.token)}, {"user_id", user_id},
                       {"issued_at", token.issued_at}};
    std::unique_lock lock(mutex_);
    append(line.dump());
    apply(line.dump());
    return token;
}

std::string Store::authenticate(const std::string& token) const {
    if (token.empty()) throw Error(ErrorKind::auth, "missing token");
    const std::string digest = token_digest(token);
    std::shared_lock lock(mutex_);
    const auto it = tokens_.find(digest);
    if (it == tokens_.end()) throw Error(ErrorKind::auth, "invalid token");
    return it->second;
}

void Store::logout(const std::string& token) {
    const std::string digest = token_digest(token);
    std::unique_lock lock(mutex_);
    if (!tokens_.contains(digest)) throw Error(ErrorKind::auth, "invalid token");
    const json line = {{"type", "revoke"}, {"digest", digest}};
    append(line.dump());
    apply(line.dump());
}

std::optional<UserAccount> Store::account(const std::string& user_id) const {
    std::shared_lock lock(mutex_);
    const auto it = users_.find(user_id);
    if (it == users_.end()) return std::nullopt;
    return it->second;
}

void Store::set_vehicle(const std::string& user_id, const std::string& vehicle_id) {
    std::unique_lock lock(mutex_);
    const auto it = users_.find(user_id);
    if (it == users_.end()) throw Error(ErrorKind::not_found, "unknown user");
    if (it->second.vehicle_id == vehicle_id) return;
    UserAccount updated = it->second;
    updated.vehicle_id = vehicle_id;
    const json line = {{"type", "user"}, {"user", account_to_json(updated)}};
    append(line.dump());
    apply(line.dump());
}

void Store::record_awards(const std::string& user_id, const std::map<std::string, int>& awards) {
    std::unique_lock lock(mutex_);
    const auto it = users_.find(user_id);
    if (it == users_.end()) throw Error(ErrorKind::not_found, "unknown user");
    UserAccount updated = it->second;
    bool changed = false;
    for (const auto& [id, pts] : awards) changed |= updated.awarded.emplace(id, pts).second;
    if (!changed) return;
    const json line = {{"type", "user"}, {"user", account_to_json(updated)}};
    append(line.dump());
    apply(line.dump());
}

int Store::wallet_locked(const UserAccount& account) const {
    int total = 0;
    if (auto it = result_keys_by_user_.find(account.user_id); it != result_keys_by_user_.end())
        for (const auto& key : it->second) total += results_.at(key).score;
    for (const auto& [_, pts] : account.awarded) total += pts;
    return total;
}

int Store::wallet(const std::string& user_id) const {
    std::shared_lock lock(mutex_);
    const auto it = users_.find(user_id);
    return it == users_.end() ? 0 : wallet_locked(it->second);
}

void Store::store_result(const std::string& key, const ResultRecord& record) {
    put_result(key, record, true);
}

SaveOutcome Store::put_result(const std::string& key, const ResultRecord& record, bool overwrite) {
    const auto parts = split_result_key(key);
    if (!parts || parts->second != record.user_id)
        throw Error(ErrorKind::domain, "result key must be questionnaire::user_id of the record");
    std::unique_lock lock(mutex_);
    if (!overwrite && results_.contains(key)) return SaveOutcome::rejected_exists;
    const json line = {{"type", "result"}, {"key", key}, {"record", record_to_json(record)}};
    append(line.dump());
    apply(line.dump());
    return SaveOutcome::stored;
}

std::optional<ResultRecord> Store::get_result(const std::string& key) const {
    std::shared_lock lock(mutex_);
    const auto it = results_.find(key);
    if (it == results_.end()) return std::nullopt;
    return it->second;
}

std::map<std::string, ResultRecord> Store::fetch_results(const std::string& user_id) const {
    std::shared_lock lock(mutex_);
    std::map<std::string, ResultRecord> out;
    if (auto it = result_keys_by_user_.find(user_id); it != result_keys_by_user_.end())
        for (const auto& key : it->second) out.emplace(key, results_.at(key));
    return out;
}

std::vector<LeaderboardRow> Store::leaderboard(int top_n) const {
    if (top_n < 1) throw Error(ErrorKind::domain, "top_n must be at least 1", "n");
    struct Ranked {
        LeaderboardRow row;
        std::uint64_t seq;
    };
    std::vector<Ranked> all;
    {
        std::shared_lock lock(mutex_);
        all.reserve(users_.size());
        for (const auto& [id, account] : users_)
            all.push_back({{id, account.username, wallet_locked(account)}, account.registration_seq});
    }
    std::sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
        return a.row.points != b.row.points ? a.row.points > b.row.points : a.seq < b.seq;
    });
    std::vector<LeaderboardRow> out;
    for (std::size_t i = 0; i < all.size() && i < static_cast<std::size_t>(top_n); ++i) out.push_back(all[i].row);
    return out;
}

std::size_t Store::user_count() const {
    std::shared_lock lock(mutex_);
    return users_.size();
}

}  // namespace geoquiz::store
