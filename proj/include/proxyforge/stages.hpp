#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "proxyforge/config.hpp"
#include "proxyforge/gateway.hpp"
#include "proxyforge/manifest.hpp"
#include "proxyforge/synthesis.hpp"
#include "proxyforge/types.hpp"

namespace proxyforge {

// Resumable stage execution. Each stage maps ordered input items to output
// JSONL lines; completed items are recorded in a RunManifest and their
// lines are reused verbatim on the next run, so an interrupted + resumed
// run reproduces the uninterrupted output byte for byte.

struct ItemOutcome {
    std::vector<std::string> lines;       // rows for the stage output file
    std::vector<std::string> side_lines;  // rows for the optional sidecar
    bool flagged = false;
};

struct StageSpec {
    std::string stage_name;
    std::filesystem::path out_path;
    std::optional<std::filesystem::path> side_path;  // e.g. judge transcripts
    ordered_json config_snapshot;
    std::vector<std::string> item_ids;  // canonical output order
    // Maps an existing output row back to its item for reuse.
    std::function<std::string(const ordered_json& row)> row_item_id;
    std::function<std::string(const ordered_json& row)> side_row_item_id;
    // Executes the pending subset, one outcome per pending id, in order.
    std::function<std::vector<Expected<ItemOutcome>>(const std::vector<std::string>& pending)>
        execute;
    // Process only the first N pending items (partial run); <0 means all.
    int item_limit = -1;
};

struct StageResult {
    std::filesystem::path manifest_path;
    int executed = 0;
    int reused = 0;
    int failed = 0;
    int pending_left = 0;  // items beyond item_limit
    std::vector<std::string> warnings;
};

std::filesystem::path manifest_path_for(const std::filesystem::path& out_path,
                                        const std::string& stage_name);

StageResult run_stage(const StageSpec& spec);

// Concrete pipeline stages.

std::vector<DomainSpec> load_domains(const std::filesystem::path& path, int per_domain);

struct SynthStageResult {
    StageResult metas;
    StageResult proxies;
    std::filesystem::path meta_path;
    std::filesystem::path proxy_path;
};

/// Writes meta_questions.jsonl and proxy_sets.jsonl under out_dir.
SynthStageResult run_synth_stage(const Config& config, Gateway& gateway,
                                 const std::vector<DomainSpec>& domains,
                                 const std::filesystem::path& out_dir, int item_limit = -1);

StageResult run_explore_stage(const Config& config, Gateway& gateway,
                              const std::filesystem::path& metas_path,
                              const std::filesystem::path& out_path, int item_limit = -1);

StageResult run_score_stage(const Config& config, Gateway& gateway,
                            const std::filesystem::path& responses_path,
                            const std::filesystem::path& proxies_path, Metric metric,
                            const std::filesystem::path& out_path,
                            const std::filesystem::path& transcripts_path, int item_limit = -1);

StageResult run_select_stage(const Config& config, const std::filesystem::path& scored_path,
                             const std::filesystem::path& metas_path, int budget, double margin,
                             int iteration, const std::filesystem::path& out_path);

StageResult run_export_stage(const Config& config, const std::filesystem::path& pairs_path,
                             const std::filesystem::path& out_path);

/// Builds a gateway from the layered config: a scripted mock when
/// mock_script is given, the HTTP backend otherwise.
std::shared_ptr<Gateway> make_gateway(const Config& config,
                                      const std::optional<std::filesystem::path>& mock_script);

}  // namespace proxyforge
