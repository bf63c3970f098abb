// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <set>
#include <thread>

#include "asrser/correction/correction.hpp"
#include "asrser/numkernel/rng.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

using namespace asrser;
using namespace asrser::correction;
using metrics::normalize_text;

namespace {

std::vector<TokenSeq> parse_all(std::initializer_list<const char*> lines)
{
    std::vector<TokenSeq> out;
    for (const char* l : lines) out.push_back(normalize_text(l));
    return out;
}

HypothesisSet make_set(std::string id, std::initializer_list<const char*> lines)
{
    HypothesisSet set{std::move(id), {}};
    std::size_t k = 0;
    for (const char* l : lines) set.hypotheses.push_back({"asr" + std::to_string(k++), normalize_text(l)});
    return set;
}

BackendConfig process_backend(const std::string& mode, bool fallback = true, int timeout_ms = 5000)
{
    BackendConfig c;
    c.kind = BackendKind::external_process;
    c.command = std::string(ASRSER_ECHO_CORRECTOR) + " " + mode;
    c.fallback = fallback;
    c.timeout_ms = timeout_ms;
    c.in_flight = 4;
    return c;
}

std::vector<HypothesisSet> sample_batch()
{
    return {make_set("u1", {"the cat sat", "the bat sat", "the cat sat"}),
            make_set("u2", {"hello there", "hello their", "hallo there"}),
            make_set("u3", {"a b c", "a x c", "a b c"}),
            make_set("u4", {"one", "two", "one"}),
            make_set("u5", {"red green", "red", "red green blue"}),
            make_set("u6", {"up down", "up down", "down"})};
}

class HttpFixture {
public:
    explicit HttpFixture(std::function<void(const httplib::Request&, httplib::Response&)> handler)
    {
        server_.Post("/correct", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~HttpFixture()
    {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/correct"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

void echo_first(const httplib::Request& req, httplib::Response& res)
{
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json out{{"id", body["id"]}, {"corrected", "Echo: " + body["hypotheses"][0].get<std::string>()}};
    res.set_content(out.dump(), "application/json");
}

}  // namespace

TEST_CASE("confusion network construction")
{
    SUBCASE("single hypothesis")
    {
        auto hyps = parse_all({"a b c"});
        auto net = build_confusion_network(hyps);
        CHECK(net.slots.size() == 3);
        CHECK(vote_consensus(net) == hyps[0]);
    }
    SUBCASE("identical hypotheses")
    {
        auto hyps = parse_all({"x y", "x y", "x y", "x y"});
        auto net = build_confusion_network(hyps);
        REQUIRE(net.slots.size() == 2);
        for (std::size_t s = 0; s < 2; ++s) {
            auto votes = slot_votes(net, s);
            REQUIRE(votes.size() == 1);
            CHECK(votes[0].votes == 4);
        }
        CHECK(vote_consensus(net) == hyps[0]);
    }
    SUBCASE("middle slot split")
    {
        auto net = build_confusion_network(parse_all({"a b c", "a x c", "a b c"}));
        auto votes = slot_votes(net, 1);
        REQUIRE(votes.size() == 2);
        CHECK(votes[0].token == std::optional<std::string>("b"));
        CHECK(votes[0].votes == 2);
        CHECK(votes[1].token == std::optional<std::string>("x"));
        CHECK(votes[1].votes == 1);
        CHECK(vote_consensus(net) == TokenSeq{"a", "b", "c"});
    }
    SUBCASE("deletions and insertions")
    {
        CHECK(consensus(parse_all({"a b c", "a c", "a c"})) == TokenSeq{"a", "c"});
        CHECK(consensus(parse_all({"a c", "a b c", "a c"})) == TokenSeq{"a", "c"});
        CHECK(consensus(parse_all({"a c", "a b c", "a b c"})) == TokenSeq{"a", "b", "c"});
        auto net = build_confusion_network(parse_all({"a c", "a b c", "a c"}));
        REQUIRE(net.slots.size() == 3);
        CHECK(net.slots[1] == std::vector<std::optional<std::string>>{std::nullopt, "b", std::nullopt});
    }
    SUBCASE("total disagreement follows the first hypothesis")
    {
        CHECK(consensus(parse_all({"a b", "c d"})) == TokenSeq{"a", "b"});
        CHECK(consensus(parse_all({"a b", "c d e"})) == TokenSeq{"a", "b"});
        CHECK(consensus(parse_all({"a b c", "d"})) == TokenSeq{"a", "b", "c"});
    }
    SUBCASE("empty hypotheses")
    {
        CHECK(consensus(parse_all({"", ""})).empty());
        CHECK(consensus(parse_all({"", "a", "a"})) == TokenSeq{"a"});
        CHECK_THROWS_AS(build_confusion_network(std::vector<TokenSeq>{}), std::invalid_argument);
    }
}

TEST_CASE("consensus properties")
{
    nk::CounterRng rng(99);
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f"};
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t channels = 1 + rng.below(7);
        std::vector<TokenSeq> hyps(channels);
        std::set<std::string> seen;
        for (auto& h : hyps) {
            std::size_t len = rng.below(8);
            for (std::size_t i = 0; i < len; ++i) {
                h.push_back(vocab[rng.below(vocab.size())]);
                seen.insert(h.back());
            }
        }
        auto net = build_confusion_network(hyps);
        for (const auto& slot : net.slots) CHECK(slot.size() == channels);
        for (std::size_t s = 0; s < net.slots.size(); ++s) {
            std::size_t total = 0;
            for (const auto& v : slot_votes(net, s)) total += v.votes;
            CHECK(total == channels);
        }
        auto out = vote_consensus(net);
        for (const auto& tok : out) CHECK(seen.count(tok) == 1);
        CHECK(consensus(hyps) == out);
        if (channels == 1) CHECK(out == hyps[0]);
    }

    // Substitution noise with a strict majority correct at every position.
    for (int trial = 0; trial < 100; ++trial) {
        TokenSeq ref;
        for (std::size_t i = 0; i < 1 + rng.below(10); ++i) ref.push_back(vocab[rng.below(4)]);
        std::vector<TokenSeq> hyps(5, ref);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            for (std::size_t k : {rng.below(5), rng.below(5)}) hyps[k][i] = "noise" + std::to_string(k);
        }
        CHECK(consensus(hyps) == ref);
    }
}

TEST_CASE("hypothesis set validation")
{
    HypothesisSet empty{"u0", {}};
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
    HypothesisSet dup{"u1", {{"a", {"x"}}, {"a", {"y"}}}};
    CHECK_THROWS_WITH_AS(dup.validate(), doctest::Contains("duplicate source 'a'"), std::invalid_argument);
}

TEST_CASE("wire format")
{
    CHECK(encode_request(make_set("u1", {"Hello, World", "hello word"})) ==
          R"({"id":"u1","hypotheses":["hello world","hello word"]})");
    auto [id, text] = decode_response(R"({"corrected":"A b","id":"x"})");
    CHECK(id == "x");
    CHECK(text == "A b");
    CHECK_THROWS_AS(decode_response("nope"), std::invalid_argument);
    CHECK_THROWS_AS(decode_response(R"(["id"])"), std::invalid_argument);
    CHECK_THROWS_AS(decode_response(R"({"id":3,"corrected":"a"})"), std::invalid_argument);
    CHECK_THROWS_AS(decode_response(R"({"id":"3"})"), std::invalid_argument);
}

TEST_CASE("backend configuration")
{
    BackendConfig c;
    c.timeout_ms = 0;
    CHECK_THROWS_AS(make_corrector(c), std::invalid_argument);
    c.timeout_ms = 100;
    c.in_flight = 0;
    CHECK_THROWS_AS(make_corrector(c), std::invalid_argument);
    c.in_flight = 1;
    CHECK(make_corrector(c)->name() == "consensus");

    ::unsetenv("ASRSER_CORRECTOR_CMD");
    ::unsetenv("ASRSER_CORRECTOR_URL");
    c.kind = BackendKind::external_process;
    CHECK_THROWS_AS(make_corrector(c), std::invalid_argument);
    c.kind = BackendKind::external_http;
    CHECK_THROWS_AS(make_corrector(c), std::invalid_argument);
    c.url = "ftp://example";
    CHECK_THROWS_AS(make_corrector(c), std::invalid_argument);

    for (auto kind : {BackendKind::builtin_consensus, BackendKind::external_process, BackendKind::external_http}) {
        CHECK(parse_backend_kind(backend_kind_name(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_backend_kind("llm"), std::invalid_argument);
}

TEST_CASE("external process backend")
{
    auto batch = sample_batch();

    SUBCASE("echo returns the first hypothesis")
    {
        auto c = make_corrector(process_backend("echo"));
        auto out = c->correct(batch);
        REQUIRE(out.size() == batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) CHECK(out[i] == batch[i].hypotheses[0].tokens);
        // The child is reused across calls.
        CHECK(c->correct(batch[2]) == batch[2].hypotheses[0].tokens);
    }
    SUBCASE("responses are normalized")
    {
        auto out = make_corrector(process_backend("shout"))->correct(batch);
        for (std::size_t i = 0; i < batch.size(); ++i) CHECK(out[i] == batch[i].hypotheses[0].tokens);
    }
    SUBCASE("out-of-order responses are matched by id")
    {
        auto out = make_corrector(process_backend("swap"))->correct(batch);
        for (std::size_t i = 0; i < batch.size(); ++i) CHECK(out[i] == batch[i].hypotheses[0].tokens);
    }
    SUBCASE("command from the environment")
    {
        ::setenv("ASRSER_CORRECTOR_CMD", (std::string(ASRSER_ECHO_CORRECTOR) + " last").c_str(), 1);
        BackendConfig c;
        c.kind = BackendKind::external_process;
        auto out = make_corrector(c)->correct(batch[0]);
        ::unsetenv("ASRSER_CORRECTOR_CMD");
        CHECK(out == batch[0].hypotheses[2].tokens);
    }
    SUBCASE("failures fall back to consensus")
    {
        for (const char* mode : {"malformed", "wrong-id", "exit"}) {
            auto out = make_corrector(process_backend(mode))->correct(batch);
            for (std::size_t i = 0; i < batch.size(); ++i) CHECK(out[i] == consensus(batch[i].token_lists()));
        }
        auto out = make_corrector(process_backend("silent", true, 150))->correct(batch);
        for (std::size_t i = 0; i < batch.size(); ++i) CHECK(out[i] == consensus(batch[i].token_lists()));
        BackendConfig missing = process_backend("echo");
        missing.command = "/nonexistent/corrector";
        CHECK(make_corrector(missing)->correct(batch[1]) == consensus(batch[1].token_lists()));
    }
    SUBCASE("failures without fallback name the utterance")
    {
        CHECK_THROWS_WITH_AS(make_corrector(process_backend("malformed", false))->correct(batch),
                             doctest::Contains("utterance u1: malformed response"), CorrectionError);
        CHECK_THROWS_WITH_AS(make_corrector(process_backend("silent", false, 150))->correct(batch),
                             doctest::Contains("timed out"), CorrectionError);
        try {
            make_corrector(process_backend("exit", false))->correct(batch);
            FAIL("expected CorrectionError");
        } catch (const CorrectionError& e) {
            CHECK(e.utterance_id() == "u1");
        }
    }
}

TEST_CASE("external HTTP backend")
{
    auto batch = sample_batch();
    BackendConfig c;
    c.kind = BackendKind::external_http;
    c.timeout_ms = 2000;
    c.in_flight = 3;

    SUBCASE("echo service")
    {
        HttpFixture server(echo_first);
        c.url = server.url();
        auto corrector = make_corrector(c);
        auto out = corrector->correct(batch);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            TokenSeq expected{"echo"};
            for (const auto& t : batch[i].hypotheses[0].tokens) expected.push_back(t);
            CHECK(out[i] == expected);
        }
        CHECK(corrector->name() == "external");
    }
    SUBCASE("url from the environment")
    {
        HttpFixture server(echo_first);
        ::setenv("ASRSER_CORRECTOR_URL", server.url().c_str(), 1);
        auto out = make_corrector(c)->correct(batch[3]);
        ::unsetenv("ASRSER_CORRECTOR_URL");
        CHECK(out == TokenSeq{"echo", "one"});
    }
    SUBCASE("server errors")
    {
        HttpFixture server([](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
            res.set_content("boom", "text/plain");
        });
        c.url = server.url();
        c.fallback = false;
        CHECK_THROWS_WITH_AS(make_corrector(c)->correct(batch), doctest::Contains("http status 500"), CorrectionError);
        c.fallback = true;
        auto out = make_corrector(c)->correct(batch);
        for (std::size_t i = 0; i < batch.size(); ++i) CHECK(out[i] == consensus(batch[i].token_lists()));
    }
    SUBCASE("mismatched id")
    {
        HttpFixture server([](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"id":"other","corrected":"x"})", "application/json");
        });
        c.url = server.url();
        c.fallback = false;
        CHECK_THROWS_WITH_AS(make_corrector(c)->correct(batch[0]), doctest::Contains("does not match"), CorrectionError);
    }
    SUBCASE("unreachable service falls back")
    {
        int port = 0;
        {
            httplib::Server probe;
            port = probe.bind_to_any_port("127.0.0.1");
        }
        c.url = "http://127.0.0.1:" + std::to_string(port) + "/correct";
        auto out = make_corrector(c)->correct(batch);
        for (std::size_t i = 0; i < batch.size(); ++i) CHECK(out[i] == consensus(batch[i].token_lists()));
    }
}

TEST_CASE("evaluate_correction")
{
    std::vector<TokenSeq> refs{normalize_text("the cat sat"), normalize_text("hello there")};
    std::vector<HypothesisSet> sets{make_set("u1", {"the bat sat", "a cat sat on", "the cat sat"}),
                                    make_set("u2", {"hello there", "hello", "hello their"})};

    auto last = make_corrector(process_backend("last"));
    auto report = evaluate_correction(refs, sets, *last);
    REQUIRE(report.per_source.size() == 3);
    CHECK(report.per_source[0].wer == doctest::Approx(1.0 / 5.0));
    CHECK(report.per_source[1].wer == doctest::Approx(3.0 / 5.0));
    CHECK(report.per_source[2].wer == doctest::Approx(1.0 / 5.0));
    CHECK(report.best_source == "asr0");
    CHECK(report.corrected_wer == report.per_source[2].wer);

    auto vote = make_corrector({});
    auto voted = evaluate_correction(refs, sets, *vote);
    CHECK(voted.corrected_wer == 0.0);
    CHECK(voted.corrected[1] == refs[1]);

    CHECK_THROWS_AS(evaluate_correction({}, {}, *vote), std::invalid_argument);
    sets[1].hypotheses.pop_back();
    CHECK_THROWS_AS(evaluate_correction(refs, sets, *vote), std::invalid_argument);
}
