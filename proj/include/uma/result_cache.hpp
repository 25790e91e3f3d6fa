#pragma once

#include <cstdint>
#include <optional>
#include <string>

// File-backed result cache. Entries are JSON documents keyed by a content
// hash of every input that affects the stored value; corrupt entries are
// treated as misses and recomputed.

namespace uma {

std::uint64_t fnv1a64(const std::string& s);

// Canonical formatting for doubles entering hash keys: round-trip exact.
std::string canon_double(double v);

class ResultCache {
  public:
    ResultCache() = default;
    explicit ResultCache(std::string dir);
    bool enabled() const { return !dir_.empty(); }

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& json_text) const;

  private:
    std::string path_for(const std::string& key) const;
    std::string dir_;
};

}  // namespace uma
