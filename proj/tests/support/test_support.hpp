#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

namespace testsupport {

inline std::filesystem::path source_dir() { return BULARAG_SOURCE_DIR; }

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("bularag-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Recorded {
    std::string path;
    std::string body;
    std::string authorization;
    std::string api_key;
};

struct Scripted {
    int status;
    std::string body;
};

// Local HTTP server answering POSTs from a script; the last entry repeats.
class MockServer {
public:
    explicit MockServer(std::vector<Scripted> script) : script_(std::move(script)) {
        server_.Post(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            log_.push_back({req.path, req.body, req.get_header_value("Authorization"),
                            req.get_header_value("x-goog-api-key")});
            const auto& s = script_[std::min(next_, script_.size() - 1)];
            ++next_;
            res.status = s.status;
            res.set_content(s.body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockServer() {
        server_.stop();
        thread_.join();
    }

    [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    [[nodiscard]] std::vector<Recorded> log() const {
        std::lock_guard lock(mutex_);
        return log_;
    }

private:
    httplib::Server server_;
    std::vector<Scripted> script_;
    std::size_t next_ = 0;
    mutable std::mutex mutex_;
    std::vector<Recorded> log_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace testsupport
