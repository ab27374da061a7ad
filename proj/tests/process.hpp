#pragma once
// Child processes of the command-line tool, for tests that need a real
// server to kill or a real stdout to compare.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "mechgen/json_io.hpp"

namespace proc {

using mechgen::json;

/// An unused loopback port.
inline int free_port() {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof addr;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), len);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

struct Http {
    httplib::Client client;
    explicit Http(int port) : client("127.0.0.1", port) { client.set_read_timeout(30, 0); }
    std::pair<int, json> post(const std::string& path, const json& body) {
        auto r = client.Post(path, body.dump(), "application/json");
        if (!r) return {0, json()};
        return {r->status, json::parse(r->body)};
    }
    std::pair<int, json> get(const std::string& path) {
        auto r = client.Get(path);
        if (!r) return {0, json()};
        return {r->status, json::parse(r->body)};
    }
    bool up() {
        httplib::Client probe(client.host(), client.port());
        probe.set_connection_timeout(0, 200000);
        probe.set_read_timeout(1, 0);
        return static_cast<bool>(probe.Get("/jobs/none"));
    }
};

/// `mechgen serve` with MECH_DATA_DIR pointing at `dir`.
class Server {
public:
    Server(const std::filesystem::path& dir, int port) : port_(port) {
        pid_ = ::fork();
        if (pid_ == 0) {
            ::setenv("MECH_DATA_DIR", dir.c_str(), 1);
            std::string p = std::to_string(port);
            int null = ::open("/dev/null", O_WRONLY);
            ::dup2(null, STDOUT_FILENO);
            ::dup2(null, STDERR_FILENO);
            ::execl(MECHGEN_CLI_PATH, MECHGEN_CLI_PATH, "serve", "--port", p.c_str(), static_cast<char*>(nullptr));
            std::_Exit(127);
        }
        Http h(port);
        for (int i = 0; i < 200 && !h.up(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(25));
    }
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;
    ~Server() { kill9(); }

    int port() const { return port_; }
    void kill9() {
        if (pid_ > 0) {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, nullptr, 0);
            pid_ = -1;
        }
    }

private:
    pid_t pid_ = -1;
    int port_;
};

struct Output {
    int code = -1;
    std::string out;
};

/// Runs the tool with `args` and captures stdout.
inline Output run_tool(const std::vector<std::string>& args) {
    std::string cmd = MECHGEN_CLI_PATH;
    for (const auto& a : args) cmd += " '" + a + "'";
    cmd += " 2>/dev/null";
    Output o;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return o;
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) o.out.append(buf, n);
    int st = ::pclose(p);
    o.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return o;
}

}  // namespace proc
