#include "uma/result_cache.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace uma {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string canon_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ResultCache::ResultCache(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::string ResultCache::path_for(const std::string& key) const {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(key)));
    return dir_ + "/" + buf + ".json";
}

std::optional<std::string> ResultCache::get(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    // sanity: stored entries carry the full key so hash collisions and
    // truncated writes read as misses
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.contains("cache_key") ||
        j["cache_key"].get<std::string>() != key)
        return std::nullopt;
    return text;
}

void ResultCache::put(const std::string& key, const std::string& json_text) const {
    if (!enabled()) return;
    std::string tmp = path_for(key) + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << json_text;
    }
    std::filesystem::rename(tmp, path_for(key));
}

}  // namespace uma
