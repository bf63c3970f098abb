// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <map>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "asrser/correction/correction.hpp"

namespace asrser::correction {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

struct Outcome {
    std::optional<TokenSeq> tokens;
    std::string error;
};

std::vector<TokenSeq> finish(std::span<const HypothesisSet> batch, std::vector<Outcome>& outcomes, bool fallback)
{
    std::vector<TokenSeq> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (outcomes[i].tokens) {
            out.push_back(std::move(*outcomes[i].tokens));
        } else if (fallback) {
            out.push_back(consensus(batch[i].token_lists()));
        } else {
            throw CorrectionError(batch[i].id, outcomes[i].error);
        }
    }
    return out;
}

class ConsensusCorrector : public Corrector {
public:
    std::vector<TokenSeq> correct(std::span<const HypothesisSet> batch) override
    {
        std::vector<TokenSeq> out;
        out.reserve(batch.size());
        for (const auto& set : batch) {
            set.validate();
            out.push_back(consensus(set.token_lists()));
        }
        return out;
    }
    std::string name() const override { return "consensus"; }
};

// Child process speaking line-delimited JSON on stdin/stdout. A socketpair
// stands in for the pipes so writes to a dead child fail with EPIPE instead
// of raising SIGPIPE.
class ProcessCorrector : public Corrector {
public:
    explicit ProcessCorrector(BackendConfig config) : config_(std::move(config)) {}
    ~ProcessCorrector() override { stop(); }

    std::string name() const override { return "external"; }

    std::vector<TokenSeq> correct(std::span<const HypothesisSet> batch) override
    {
        for (const auto& set : batch) set.validate();
        std::vector<Outcome> outcomes(batch.size());
        std::map<std::string, std::deque<std::size_t>> pending;
        std::deque<std::size_t> order;
        std::size_t next = 0;

        auto fail_all = [&](const std::string& why) {
            for (std::size_t i : order) outcomes[i].error = why;
            for (std::size_t i = next; i < batch.size(); ++i) outcomes[i].error = why;
            stop();
        };

        if (!batch.empty() && !start()) {
            fail_all("cannot start corrector process: " + std::string(std::strerror(errno)));
            return finish(batch, outcomes, config_.fallback);
        }
        while (next < batch.size() || !order.empty()) {
            bool write_failed = false;
            while (order.size() < config_.in_flight && next < batch.size()) {
                if (!send_line(encode_request(batch[next]))) {
                    write_failed = true;
                    break;
                }
                pending[batch[next].id].push_back(next);
                order.push_back(next);
                ++next;
            }
            if (write_failed) {
                fail_all("corrector process closed its input");
                break;
            }
            std::string line;
            std::string why = read_line(line);
            if (!why.empty()) {
                fail_all(why);
                break;
            }
            std::size_t index = order.front();
            try {
                auto [id, text] = decode_response(line);
                auto it = pending.find(id);
                if (it == pending.end()) throw std::invalid_argument("response for unknown id '" + id + "'");
                index = it->second.front();
                it->second.pop_front();
                if (it->second.empty()) pending.erase(it);
                outcomes[index].tokens = metrics::normalize_text(text);
            } catch (const std::invalid_argument& e) {
                // Unattributable line: charge it to the oldest outstanding request.
                auto& q = pending[batch[index].id];
                q.erase(std::find(q.begin(), q.end(), index));
                if (q.empty()) pending.erase(batch[index].id);
                outcomes[index].error = std::string("malformed response: ") + e.what();
            }
            order.erase(std::find(order.begin(), order.end(), index));
        }
        return finish(batch, outcomes, config_.fallback);
    }

private:
    bool start()
    {
        if (fd_ >= 0) return true;
        int sv[2];
        if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) return false;
        pid_t pid = ::fork();
        if (pid < 0) {
            ::close(sv[0]);
            ::close(sv[1]);
            return false;
        }
        if (pid == 0) {
            ::setpgid(0, 0);
            ::dup2(sv[1], STDIN_FILENO);
            ::dup2(sv[1], STDOUT_FILENO);
            ::execl("/bin/sh", "sh", "-c", config_.command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::setpgid(pid, pid);
        ::close(sv[1]);
        fd_ = sv[0];
        pid_ = pid;
        buffer_.clear();
        return true;
    }

    // Closing the socket lets a well-behaved child exit on EOF; whatever is
    // left of its process group after a short grace period is killed.
    void stop()
    {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
        if (pid_ <= 0) return;
        int status = 0;
        const auto grace = Clock::now() + std::chrono::milliseconds(200);
        pid_t done = 0;
        while ((done = ::waitpid(pid_, &status, WNOHANG)) == 0 && Clock::now() < grace) {
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
        ::kill(-pid_, SIGKILL);
        if (done == 0) ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }

    bool send_line(std::string line)
    {
        line.push_back('\n');
        std::size_t off = 0;
        while (off < line.size()) {
            ssize_t n = ::send(fd_, line.data() + off, line.size() - off, MSG_NOSIGNAL);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) return false;
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    // Returns an error description, or "" with `line` filled.
    std::string read_line(std::string& line)
    {
        const auto deadline = Clock::now() + std::chrono::milliseconds(config_.timeout_ms);
        while (true) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return {};
            }
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
            if (left <= 0) return "timed out after " + std::to_string(config_.timeout_ms) + " ms";
            pollfd p{fd_, POLLIN, 0};
            int r = ::poll(&p, 1, static_cast<int>(left));
            if (r < 0 && errno == EINTR) continue;
            if (r < 0) return std::string("poll failed: ") + std::strerror(errno);
            if (r == 0) continue;
            char chunk[4096];
            ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) return "corrector process exited";
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    BackendConfig config_;
    int fd_ = -1;
    pid_t pid_ = -1;
    std::string buffer_;
};

struct HttpEndpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

HttpEndpoint parse_url(const std::string& url)
{
    const std::string scheme = "http://";
    if (url.compare(0, scheme.size(), scheme) != 0) {
        throw std::invalid_argument("corrector url must start with http://, got '" + url + "'");
    }
    auto slash = url.find('/', scheme.size());
    if (slash == scheme.size()) throw std::invalid_argument("corrector url has no host: '" + url + "'");
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

class HttpCorrector : public Corrector {
public:
    explicit HttpCorrector(BackendConfig config) : config_(std::move(config)), endpoint_(parse_url(config_.url)) {}

    std::string name() const override { return "external"; }

    std::vector<TokenSeq> correct(std::span<const HypothesisSet> batch) override
    {
        for (const auto& set : batch) set.validate();
        std::vector<Outcome> outcomes(batch.size());
        std::atomic<std::size_t> cursor{0};
        auto worker = [&] {
            httplib::Client client(endpoint_.origin);
            const auto ms = std::chrono::milliseconds(config_.timeout_ms);
            client.set_connection_timeout(ms);
            client.set_read_timeout(ms);
            client.set_write_timeout(ms);
            for (std::size_t i = cursor++; i < batch.size(); i = cursor++) {
                outcomes[i] = post(client, batch[i]);
            }
        };
        std::size_t threads = std::min(config_.in_flight, batch.size());
        std::vector<std::thread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        if (threads > 0) worker();
        for (auto& t : pool) t.join();
        return finish(batch, outcomes, config_.fallback);
    }

private:
    Outcome post(httplib::Client& client, const HypothesisSet& set) const
    {
        auto res = client.Post(endpoint_.path, encode_request(set), "application/json");
        if (!res) return {std::nullopt, "http request failed: " + httplib::to_string(res.error())};
        if (res->status != 200) return {std::nullopt, "http status " + std::to_string(res->status)};
        try {
            auto [id, text] = decode_response(res->body);
            if (id != set.id) return {std::nullopt, "response id '" + id + "' does not match the request"};
            return {metrics::normalize_text(text), {}};
        } catch (const std::invalid_argument& e) {
            return {std::nullopt, std::string("malformed response: ") + e.what()};
        }
    }

    BackendConfig config_;
    HttpEndpoint endpoint_;
};

}  // namespace

CorrectionError::CorrectionError(std::string utterance_id, const std::string& what)
    : std::runtime_error("utterance " + utterance_id + ": " + what), id_(std::move(utterance_id))
{
}

TokenSeq Corrector::correct(const HypothesisSet& one) { return correct(std::span<const HypothesisSet>(&one, 1)).front(); }

BackendKind parse_backend_kind(const std::string& name)
{
    if (name == "builtin-consensus") return BackendKind::builtin_consensus;
    if (name == "external-process") return BackendKind::external_process;
    if (name == "external-http") return BackendKind::external_http;
    throw std::invalid_argument("unknown corrector backend '" + name + "'");
}

std::string backend_kind_name(BackendKind kind)
{
    switch (kind) {
    case BackendKind::builtin_consensus: return "builtin-consensus";
    case BackendKind::external_process: return "external-process";
    case BackendKind::external_http: return "external-http";
    }
    return "?";
}

std::unique_ptr<Corrector> make_corrector(BackendConfig config)
{
    if (config.timeout_ms <= 0) throw std::invalid_argument("corrector timeout must be positive");
    if (config.in_flight == 0) throw std::invalid_argument("corrector in-flight limit must be positive");
    switch (config.kind) {
    case BackendKind::builtin_consensus: return std::make_unique<ConsensusCorrector>();
    case BackendKind::external_process:
        if (config.command.empty()) {
            if (const char* env = std::getenv("ASRSER_CORRECTOR_CMD")) config.command = env;
        }
        if (config.command.empty()) throw std::invalid_argument("external-process corrector needs a command");
        return std::make_unique<ProcessCorrector>(std::move(config));
    case BackendKind::external_http:
        if (config.url.empty()) {
            if (const char* env = std::getenv("ASRSER_CORRECTOR_URL")) config.url = env;
        }
        if (config.url.empty()) throw std::invalid_argument("external-http corrector needs a url");
        return std::make_unique<HttpCorrector>(std::move(config));
    }
    throw std::invalid_argument("unknown corrector backend");
}

std::string encode_request(const HypothesisSet& hyps)
{
    json req;
    req["id"] = hyps.id;
    json list = json::array();
    for (const auto& h : hyps.hypotheses) list.push_back(metrics::join(h.tokens));
    req["hypotheses"] = std::move(list);
    return req.dump();
}

std::pair<std::string, std::string> decode_response(const std::string& body)
{
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument("not valid JSON");
    if (!doc.is_object()) throw std::invalid_argument("expected a JSON object");
    auto id = doc.find("id");
    auto text = doc.find("corrected");
    if (id == doc.end() || !id->is_string()) throw std::invalid_argument("missing string field 'id'");
    if (text == doc.end() || !text->is_string()) throw std::invalid_argument("missing string field 'corrected'");
    return {id->get<std::string>(), text->get<std::string>()};
}

}  // namespace asrser::correction
