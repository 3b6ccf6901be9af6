#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "proxyforge/util.hpp"

namespace proxyforge {

struct ManifestEntry {
    std::string item_id;
    std::string digest;  // sha256 of the item's output lines
    std::string timestamp;
};

// Per-stage completion record; lets interrupted runs resume without
// re-executing finished items.
struct RunManifest {
    std::string run_id;
    std::string stage;
    std::vector<ManifestEntry> completed;  // item ids unique per stage
    std::vector<std::string> failed;
    std::vector<std::string> flagged;  // proxy sets that never validated
    ordered_json config = ordered_json::object();

    /// Throws InvalidInput when the item id is already recorded.
    void add_completed(ManifestEntry entry);
    bool has_completed(const std::string& item_id) const;

    static RunManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

struct ResumePlan {
    std::vector<std::string> pending;        // input order preserved
    std::set<std::string> reusable;          // completed ids present in the input
    std::vector<std::string> warnings;       // completed ids missing from the input
};

/// Work list for a resumed stage: completed ids are skipped, unknown
/// completed ids produce a warning and are ignored.
ResumePlan plan_resume(const RunManifest& manifest, const std::vector<std::string>& input_ids);

}  // namespace proxyforge
