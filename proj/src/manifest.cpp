#include "proxyforge/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include "proxyforge/errors.hpp"

namespace proxyforge {

void RunManifest::add_completed(ManifestEntry entry) {
    if (has_completed(entry.item_id)) {
        throw ProxyError(ErrorKind::InvalidInput,
                         "item " + entry.item_id + " already completed in stage " + stage);
    }
    completed.push_back(std::move(entry));
}

bool RunManifest::has_completed(const std::string& item_id) const {
    for (const auto& e : completed) {
        if (e.item_id == item_id) return true;
    }
    return false;
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ProxyError(ErrorKind::ParseError, "manifest " + path.string() + ": " + e.what());
    }
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.stage = j.at("stage").get<std::string>();
    for (const auto& e : j.at("completed")) {
        m.completed.push_back(ManifestEntry{e.at("item_id").get<std::string>(),
                                            e.at("digest").get<std::string>(),
                                            e.at("timestamp").get<std::string>()});
    }
    for (const auto& f : j.value("failed", ordered_json::array())) {
        m.failed.push_back(f.get<std::string>());
    }
    for (const auto& f : j.value("flagged", ordered_json::array())) {
        m.flagged.push_back(f.get<std::string>());
    }
    m.config = j.value("config", ordered_json::object());
    return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
    ordered_json entries = ordered_json::array();
    for (const auto& e : completed) {
        entries.push_back(ordered_json{
            {"item_id", e.item_id}, {"digest", e.digest}, {"timestamp", e.timestamp}});
    }
    const ordered_json j{{"run_id", run_id}, {"stage", stage},       {"completed", entries},
                         {"failed", failed}, {"flagged", flagged},   {"config", config}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ProxyError(ErrorKind::Io, "cannot write manifest " + path.string());
    out << j.dump(2) << '\n';
}

ResumePlan plan_resume(const RunManifest& manifest, const std::vector<std::string>& input_ids) {
    ResumePlan plan;
    std::unordered_set<std::string> inputs(input_ids.begin(), input_ids.end());
    std::unordered_set<std::string> done;
    for (const auto& e : manifest.completed) {
        if (inputs.count(e.item_id)) {
            done.insert(e.item_id);
        } else {
            plan.warnings.push_back("completed item not in stage input: " + e.item_id);
        }
    }
    for (const auto& id : input_ids) {
        if (done.count(id)) {
            plan.reusable.insert(id);
        } else {
            plan.pending.push_back(id);
        }
    }
    return plan;
}

}  // namespace proxyforge
