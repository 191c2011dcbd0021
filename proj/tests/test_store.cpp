#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "geoquiz/error.hpp"
#include "geoquiz/store.hpp"
#include "support.hpp"

using namespace geoquiz::store;
using geoquiz::Error;
using geoquiz::ErrorKind;
using geoquiz::ResultRecord;
using geoquiz::SaveOutcome;

namespace {

StoreOptions options(std::filesystem::path file = {}) { return {std::move(file), HashCost::minimal, false, {}}; }

ResultRecord record(const std::string& q, const std::string& user, int score) {
    ResultRecord r;
    r.questionnaire_name = q;
    r.user_id = user;
    r.poi_id = q;
    r.topic = "history";
    r.difficulty = "easy";
    r.correct_count = score / 10;
    r.total_count = 4;
    r.score = score;
    r.topic_points = {{"history", score}};
    r.saved_at = 1.5;
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> failed_fields(auto&& fn) {
    try {
        fn();
    } catch (const ValidationFailure& e) {
        std::vector<std::string> out;
        for (const auto& f : e.fields()) out.push_back(f.field);
        return out;
    }
    return {};
}

}  // namespace

TEST_CASE("register validates fields") {
    Store store(options());
    const auto id = store.register_user("a@b.it", "anna", "s3cretpw!");
    CHECK(id.size() == 32);
    CHECK(store.account(id)->username == "anna");
    CHECK(store.wallet(id) == 0);

    CHECK(failed_fields([&] { store.register_user("a@b.it", "other", "s3cretpw!"); }) ==
          std::vector<std::string>{"email"});
    CHECK(failed_fields([&] { store.register_user("A@B.IT", "other", "s3cretpw!"); }) ==
          std::vector<std::string>{"email"});
    CHECK(failed_fields([&] { store.register_user("c@d.it", "anna", "s3cretpw!"); }) ==
          std::vector<std::string>{"username"});
    CHECK(failed_fields([&] { store.register_user("c@d.it", "carl", "ab"); }) == std::vector<std::string>{"password"});
    CHECK(failed_fields([&] { store.register_user("not-an-email", "x", "1234567"); }) ==
          std::vector<std::string>{"email", "username", "password"});
    CHECK(failed_fields([&] { store.register_user("e@f.it", "carl", "12345678"); }).empty());
    CHECK(store.user_count() == 2);
    try {
        store.register_user("a@b.it", "zed", "s3cretpw!");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
        CHECK(e.field() == "email");
    }
}

TEST_CASE("login, authenticate, logout") {
    Store store(options());
    const auto id = store.register_user("a@b.it", "anna", "s3cretpw!");
    const auto t1 = store.login("anna", "s3cretpw!");
    const auto t2 = store.login("a@b.it", "s3cretpw!");
    CHECK(t1.token.size() == 64);
    CHECK(t1.token != t2.token);
    CHECK(store.authenticate(t1.token) == id);
    CHECK(store.authenticate(t2.token) == id);

    std::string wrong_password, unknown_user;
    try {
        store.login("anna", "wrongpass");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::auth);
        wrong_password = e.what();
    }
    try {
        store.login("nobody", "s3cretpw!");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::auth);
        unknown_user = e.what();
    }
    CHECK_FALSE(wrong_password.empty());
    CHECK(wrong_password == unknown_user);

    CHECK_THROWS_AS(store.authenticate("garbage"), Error);
    CHECK_THROWS_AS(store.authenticate(""), Error);
    store.logout(t1.token);
    CHECK_THROWS_AS(store.authenticate(t1.token), Error);
    CHECK(store.authenticate(t2.token) == id);
    CHECK_THROWS_AS(store.logout(t1.token), Error);
}

TEST_CASE("password hashing is salted argon2id") {
    const auto h1 = hash_password("s3cretpw!", HashCost::minimal);
    const auto h2 = hash_password("s3cretpw!", HashCost::minimal);
    CHECK(h1.rfind("$argon2id$", 0) == 0);
    CHECK(h1 != h2);
    CHECK(verify_password(h1, "s3cretpw!"));
    CHECK_FALSE(verify_password(h1, "s3cretpw?"));
    CHECK(random_hex(32).size() == 64);
    CHECK(random_hex(32) != random_hex(32));
}

TEST_CASE("results: write, overwrite, reject, fetch") {
    Store store(options());
    CHECK_FALSE(store.get_result("castello::u1"));
    store.store_result("castello::u1", record("castello", "u1", 30));
    CHECK(store.get_result("castello::u1") == record("castello", "u1", 30));
    store.store_result("castello::u1", record("castello", "u1", 40));
    CHECK(store.get_result("castello::u1")->score == 40);
    CHECK(store.put_result("castello::u1", record("castello", "u1", 10), false) == SaveOutcome::rejected_exists);
    CHECK(store.get_result("castello::u1")->score == 40);
    store.store_result("basilica::u1", record("basilica", "u1", 20));
    store.store_result("basilica::u2", record("basilica", "u2", 20));
    const auto mine = store.fetch_results("u1");
    CHECK(mine.size() == 2);
    CHECK(mine.contains("basilica::u1"));
    CHECK(store.fetch_results("nobody").empty());
    CHECK_THROWS_AS(store.store_result("castello::u2", record("castello", "u1", 30)), Error);
    CHECK_THROWS_AS(store.store_result("castello", record("castello", "u1", 30)), Error);
}

TEST_CASE("the store file never contains the plaintext password") {
    const auto dir = testsupport::temp_dir("plain");
    const std::string password = "Unmistakable-Pa55word";
    {
        Store store(options(dir / "store.log"));
        store.register_user("p@q.it", "pat", password);
        const auto token = store.login("pat", password);
        store.logout(store.login("p@q.it", password).token);
        const std::string bytes = slurp(dir / "store.log");
        CHECK(bytes.find(password) == std::string::npos);
        CHECK(bytes.find(token.token) == std::string::npos);
        CHECK(bytes.find("$argon2id$") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("state survives reopening") {
    const auto dir = testsupport::temp_dir("reopen");
    const auto file = dir / "store.log";
    std::string id, token;
    {
        Store store(options(file));
        id = store.register_user("a@b.it", "anna", "s3cretpw!");
        token = store.login("anna", "s3cretpw!").token;
        const auto revoked = store.login("anna", "s3cretpw!").token;
        store.logout(revoked);
        store.store_result("castello::" + id, record("castello", id, 30));
        store.store_result("castello::" + id, record("castello", id, 40));
        store.record_awards(id, {{"explorer", 25}});
        store.set_vehicle(id, "bicycle");
    }
    Store again(options(file));
    CHECK(again.user_count() == 1);
    CHECK(again.authenticate(token) == id);
    CHECK(again.get_result("castello::" + id)->score == 40);
    CHECK(again.wallet(id) == 65);
    CHECK(again.account(id)->vehicle_id == "bicycle");
    CHECK(again.account(id)->awarded == std::map<std::string, int>{{"explorer", 25}});
    CHECK_NOTHROW(again.login("a@b.it", "s3cretpw!"));
    CHECK(failed_fields([&] { again.register_user("a@b.it", "anna2", "s3cretpw!"); }) ==
          std::vector<std::string>{"email"});
    const auto second = again.register_user("z@b.it", "zoe", "s3cretpw!");
    CHECK(again.account(second)->registration_seq > again.account(id)->registration_seq);
    std::filesystem::remove_all(dir);
}

TEST_CASE("a torn or corrupt tail is discarded on reopen") {
    const auto dir = testsupport::temp_dir("torn");
    const auto file = dir / "store.log";
    std::string id;
    {
        Store store(options(file));
        id = store.register_user("a@b.it", "anna", "s3cretpw!");
        store.store_result("castello::" + id, record("castello", id, 30));
    }
    const auto good_size = std::filesystem::file_size(file);
    {
        std::ofstream out(file, std::ios::binary | std::ios::app);
        out << "deadbeef {\"type\":\"result\",\"key\":\"castello::" << id << "\",\"rec";
    }
    {
        Store store(options(file));
        CHECK(store.get_result("castello::" + id)->score == 30);
        CHECK(std::filesystem::file_size(file) == good_size);
        store.store_result("castello::" + id, record("castello", id, 40));
    }
    {
        // A complete line whose checksum does not match is treated the same way.
        std::string bytes = slurp(file);
        const auto last = bytes.rfind('\n', bytes.size() - 2) + 1;
        bytes[last] = bytes[last] == '0' ? '1' : '0';
        std::ofstream(file, std::ios::binary | std::ios::trunc) << bytes;
    }
    Store store(options(file));
    CHECK(store.get_result("castello::" + id)->score == 30);
    CHECK(store.user_count() == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("a failed write changes neither memory nor disk") {
    const auto dir = testsupport::temp_dir("fault");
    const auto file = dir / "store.log";
    bool fail = false;
    StoreOptions opts = options(file);
    opts.before_write = [&] {
        if (fail) throw std::runtime_error("disk full");
    };
    Store store(opts);
    const auto id = store.register_user("a@b.it", "anna", "s3cretpw!");
    store.store_result("castello::" + id, record("castello", id, 30));
    const auto size = std::filesystem::file_size(file);

    fail = true;
    try {
        store.put_result("castello::" + id, record("castello", id, 99), true);
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
    CHECK_THROWS_AS(store.register_user("b@b.it", "bob", "s3cretpw!"), Error);
    CHECK_THROWS_AS(store.login("anna", "s3cretpw!"), Error);
    CHECK(store.get_result("castello::" + id)->score == 30);
    CHECK(store.user_count() == 1);
    CHECK(std::filesystem::file_size(file) == size);

    fail = false;
    Store reopened(options(file));
    CHECK(reopened.get_result("castello::" + id)->score == 30);
    std::filesystem::remove_all(dir);
}

TEST_CASE("leaderboard ordering") {
    Store store(options());
    CHECK(store.leaderboard(5).empty());
    CHECK_THROWS_AS(store.leaderboard(0), Error);

    const auto a = store.register_user("a@x.it", "alice", "s3cretpw!");
    const auto b = store.register_user("b@x.it", "bruno", "s3cretpw!");
    const auto c = store.register_user("c@x.it", "carla", "s3cretpw!");
    store.store_result("q1::" + c, record("q1", c, 30));
    store.store_result("q1::" + b, record("q1", b, 20));
    store.store_result("q1::" + a, record("q1", a, 10));
    auto top = store.leaderboard(2);
    REQUIRE(top.size() == 2);
    CHECK(top[0] == LeaderboardRow{c, "carla", 30});
    CHECK(top[1] == LeaderboardRow{b, "bruno", 20});

    store.record_awards(b, {{"bonus", 10}});
    top = store.leaderboard(10);
    REQUIRE(top.size() == 3);
    CHECK(top[0].username == "bruno");
    CHECK(top[1].username == "carla");
    CHECK(top[2].username == "alice");

    const auto d = store.register_user("d@x.it", "dario", "s3cretpw!");
    CHECK(store.leaderboard(10).back().user_id == d);
    CHECK(store.leaderboard(10).back().points == 0);
}

TEST_CASE("awards are recorded once") {
    Store store(options());
    const auto id = store.register_user("a@x.it", "alice", "s3cretpw!");
    store.record_awards(id, {{"explorer", 25}});
    store.record_awards(id, {{"explorer", 99}, {"historian", 15}});
    CHECK(store.wallet(id) == 40);
    CHECK_THROWS_AS(store.record_awards("ghost", {{"x", 1}}), Error);
}

TEST_CASE("property: leaderboard points equal saved scores plus incentives") {
    Store store(options());
    std::mt19937_64 rng(8);
    std::vector<std::string> users;
    for (int i = 0; i < 6; ++i)
        users.push_back(store.register_user("u" + std::to_string(i) + "@x.it", "user" + std::to_string(i), "s3cretpw!"));
    std::map<std::string, std::map<std::string, int>> scores;
    std::map<std::string, int> bonus;
    for (int i = 0; i < 200; ++i) {
        const auto& u = users[rng() % users.size()];
        const std::string q = "q" + std::to_string(rng() % 5);
        const int s = static_cast<int>(rng() % 8) * 10;
        if (store.put_result(geoquiz::result_key(q, u), record(q, u, s), rng() % 2) == SaveOutcome::stored)
            scores[u][q] = s;
        if (rng() % 20 == 0) {
            const std::string ach = "a" + std::to_string(rng() % 3);
            if (!store.account(u)->awarded.contains(ach)) bonus[u] += 5;
            store.record_awards(u, {{ach, 5}});
        }
    }
    for (const auto& row : store.leaderboard(100)) {
        int expected = bonus[row.user_id];
        for (const auto& [_, s] : scores[row.user_id]) expected += s;
        CHECK(row.points == expected);
    }
}

TEST_CASE("concurrent writers: last writer wins, no torn records") {
    const auto dir = testsupport::temp_dir("concurrent");
    const auto file = dir / "store.log";
    {
        Store store(options(file));
        std::vector<std::thread> threads;
        std::atomic<int> rejected{0};
        for (int t = 0; t < 8; ++t)
            threads.emplace_back([&, t] {
                for (int i = 0; i < 50; ++i) {
                    store.store_result("shared::u", record("shared", "u", t * 1000 + i));
                    if (store.put_result("once::u", record("once", "u", t), false) == SaveOutcome::rejected_exists)
                        ++rejected;
                    const auto r = store.get_result("shared::u");
                    REQUIRE(r);
                    CHECK(r->total_count == 4);
                    CHECK(r->topic_points.at("history") == r->score);
                }
            });
        for (auto& th : threads) th.join();
        CHECK(rejected == 8 * 50 - 1);
        const int last = store.get_result("shared::u")->score;
        Store reopened(options(file));
        CHECK(reopened.get_result("shared::u")->score == last);
        CHECK(reopened.get_result("once::u") == store.get_result("once::u"));
    }
    std::filesystem::remove_all(dir);
}
