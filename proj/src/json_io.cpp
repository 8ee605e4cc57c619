#include "corpus_mixer/json_io.hpp"

#include "corpus_mixer/error.hpp"

#include <glob.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

namespace corpus_mixer {

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::io_error, path.string() + ": " + e.what());
    }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::io_error, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorCode::io_error, "cannot rename into " + path.string() + ": " + ec.message());
    }
}

void write_json_atomic(const std::filesystem::path& path, const json& doc) {
    write_file_atomic(path, doc.dump(2) + "\n");
}

json artifact_metadata() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    }
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    json meta;
    meta["tool_version"] = std::string(kToolVersion);
    meta[std::string(kTimestampField)] = buf;
    return meta;
}

json strip_timestamps(json doc) {
    if (doc.is_object()) {
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            if (it.key() == "metadata" && it->is_object()) it->erase(std::string(kTimestampField));
            *it = strip_timestamps(std::move(*it));
        }
    } else if (doc.is_array()) {
        for (auto& v : doc) v = strip_timestamps(std::move(v));
    }
    return doc;
}

std::vector<std::filesystem::path> expand_glob(const std::string& pattern) {
    if (pattern.find_first_of("*?[") == std::string::npos) return {pattern};
    glob_t result{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &result);
    std::vector<std::filesystem::path> paths;
    if (rc == 0) {
        for (std::size_t i = 0; i < result.gl_pathc; ++i) paths.emplace_back(result.gl_pathv[i]);
    }
    globfree(&result);
    if (paths.empty()) throw Error(ErrorCode::io_error, "no files match " + pattern);
    return paths;
}

}  // namespace corpus_mixer
