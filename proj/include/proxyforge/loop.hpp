#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proxyforge/gateway.hpp"
#include "proxyforge/reward.hpp"
#include "proxyforge/selection.hpp"
#include "proxyforge/toy.hpp"
#include "proxyforge/types.hpp"

namespace proxyforge {

enum class TrainerMode { ToySimulator, ExportOnly };

std::string_view to_string(TrainerMode mode);
std::optional<TrainerMode> trainer_mode_from_string(std::string_view s);

struct LoopConfig {
    int iterations = 2;  // W
    std::vector<int> partition_sizes;           // empty -> near-equal split
    std::string partition_strategy = "random";  // random | domain
    int k = 8;
    double temperature = 0.8;
    int max_tokens = 2048;
    Metric metric = Metric::Accuracy;
    double margin = 0.0;
    int budget = -1;  // metas kept per iteration after variance ranking; <0 keeps all
    TrainerMode trainer = TrainerMode::ExportOnly;
    double beta = 0.1;
    double learning_rate = 5e-7;
    int epochs = 5;
    int batch_size = 2;
    int grad_accum = 8;
    std::uint64_t seed = 0;
    int max_in_flight = 8;
    std::string generator_model = "gpt-4o-mini";
    std::string judge_model = "gpt-4o-mini";
    // Optional per-iteration generator names; lets externally retrained
    // checkpoints feed later iterations in ExportOnly mode.
    std::vector<std::string> iteration_models;
    std::filesystem::path out_dir;
};

struct IterationReport {
    int iteration = 0;
    int metas = 0;
    int responses = 0;
    int excluded_metas = 0;  // metas without two usable samples
    int pairs = 0;
    bool skipped = false;  // no pair survived margin filtering
    DistributionReport scores;
    double mean_loss = 0.0;       // ToySimulator only
    double expected_score = 0.0;  // analytic probe, when available
    bool has_expected_score = false;
};

struct LoopReport {
    double initial_expected_score = 0.0;
    bool has_initial_expected_score = false;
    std::vector<IterationReport> iterations;
    int total_pairs = 0;
};

ordered_json to_record(const IterationReport& report);
ordered_json to_record(const LoopReport& report);

/// Splits the dataset into `iterations` disjoint nonempty parts. Strategy
/// "random" shuffles with a portable seeded Fisher-Yates; "domain" deals
/// domain-sorted items round-robin so each part sees every domain.
std::vector<std::vector<MetaQuestion>> partition_dataset(std::vector<MetaQuestion> metas,
                                                         int iterations,
                                                         const std::string& strategy,
                                                         const std::vector<int>& sizes,
                                                         std::uint64_t seed);

// Stage hooks let one orchestrator drive both the gateway-backed pipeline
// and the analytic toy world.
struct LoopHooks {
    std::function<std::vector<Expected<std::vector<Response>>>(const std::vector<MetaQuestion>&,
                                                               int iteration)>
        generate;
    std::function<std::vector<Expected<ScoreOutcome>>(const std::vector<Response>&, int iteration)>
        score;
    // Returns the mean training loss over the iteration's updates (0 when
    // the trainer does not train, e.g. export-only).
    std::function<double(const std::vector<PreferencePair>&, int iteration)> train;
    std::function<double()> expected_score;  // optional analytic probe
};

/// The synthetic preference alignment loop: partition, generate k responses
/// per meta, score, rank by variance, build extremal pairs, train, advance
/// the reference. Iterations with no surviving pairs are recorded and
/// skipped.
LoopReport run_alignment_loop(const LoopConfig& config, const std::vector<MetaQuestion>& dataset,
                              const LoopHooks& hooks);

/// Gateway-backed loop in ExportOnly mode: writes pairs_iter_<w>.jsonl per
/// iteration under config.out_dir for an external trainer.
LoopReport run_gateway_loop(const LoopConfig& config, const std::vector<MetaQuestion>& dataset,
                            const std::map<std::string, ProxySet>& proxy_sets, Gateway& gateway);

/// DPO trainer over the toy policy: seeded shuffling, mini-batches of
/// batch_size * grad_accum pairs, reference refresh after each iteration.
class ToyTrainer {
public:
    ToyTrainer(ToyPolicy initial, double beta, double learning_rate, int epochs, int batch_size,
               int grad_accum, std::uint64_t seed);

    /// Runs all epochs on one iteration's pairs, then sets ref <- policy.
    /// Returns the mean loss across updates.
    double train_iteration(const std::vector<std::pair<Eigen::ArrayXd, Eigen::ArrayXd>>& pairs);

    const ToyPolicy& policy() const { return policy_; }
    const ToyPolicy& reference() const { return reference_; }

private:
    ToyPolicy policy_;
    ToyPolicy reference_;
    double beta_;
    double learning_rate_;
    int epochs_;
    int batch_size_;
    int grad_accum_;
    std::mt19937_64 rng_;
};

struct ToyExperimentConfig {
    int metas_per_iteration = 64;
    double init_logit = -1.0;
};

struct ToyExperimentResult {
    LoopReport loop;
    ToyPolicy final_policy;

    double initial_expected_score() const { return loop.initial_expected_score; }
};

/// Desk-scale realization of the alignment loop: toy policy as generator,
/// deterministic bit-test judge as reward model, expected score tracked in
/// closed form (never sampled).
ToyExperimentResult run_toy_experiment(const ToyWorld& world, const LoopConfig& config,
                                       const ToyExperimentConfig& toy);

}  // namespace proxyforge
