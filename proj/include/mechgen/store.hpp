#pragma once
// File-per-record JSON persistence. Writes go to a temporary file in the
// same directory and are renamed over the target, so readers only ever see
// a complete old or new record.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mechgen/json_io.hpp"

namespace mechgen {

class RecordStore {
public:
    using Logger = std::function<void(const std::string&)>;

    explicit RecordStore(std::filesystem::path root, Logger log = {}) : root_(std::move(root)), log_(std::move(log)) {
        std::filesystem::create_directories(root_);
    }

    const std::filesystem::path& root() const { return root_; }

    std::filesystem::path path(const std::string& kind, const std::string& id) const {
        check_name(kind);
        check_name(id);
        return root_ / kind / (id + ".json");
    }

    void put(const std::string& kind, const std::string& id, const json& record) {
        auto target = path(kind, id);
        std::filesystem::create_directories(target.parent_path());
        auto tmp = target;
        tmp += ".tmp" + std::to_string(++counter_);
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write " + tmp.string());
            out << record.dump(2) << "\n";
            out.flush();
            if (!out) throw Error("short write to " + tmp.string());
        }
        std::filesystem::rename(tmp, target);
    }

    std::optional<json> get(const std::string& kind, const std::string& id) const {
        auto p = path(kind, id);
        if (!std::filesystem::exists(p)) return std::nullopt;
        return read(p);
    }

    /// Every parseable record of `kind`, by id. Corrupt files are skipped
    /// with a warning.
    std::vector<std::pair<std::string, json>> load_all(const std::string& kind) const {
        std::vector<std::pair<std::string, json>> out;
        auto dir = root_ / kind;
        if (!std::filesystem::is_directory(dir)) return out;
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            try {
                out.emplace_back(f.stem().string(), read(f));
            } catch (const std::exception& e) {
                warn("skipping corrupt record " + f.string() + ": " + e.what());
            }
        }
        return out;
    }

    void warn(const std::string& msg) const {
        if (log_) log_(msg);
    }

private:
    static void check_name(const std::string& s) {
        if (s.empty() || s.find_first_of("/\\") != std::string::npos || s == "." || s == "..")
            throw Error("bad record name '" + s + "'");
    }

    static json read(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw Error("cannot read " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return json::parse(ss.str());
    }

    std::filesystem::path root_;
    Logger log_;
    std::atomic<unsigned long> counter_{0};
};

}  // namespace mechgen
