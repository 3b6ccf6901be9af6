#pragma once

#include <filesystem>
#include <vector>

#include "proxyforge/types.hpp"

namespace proxyforge {

/// Numerically stable logistic function; no overflow anywhere on the real line.
double sigmoid(double z);

/// log(sigmoid(z)) without intermediate underflow; linear tail for z << 0.
double log_sigmoid(double z);

// Sequence log-probabilities of the chosen (w) and rejected (l) responses
// under the trained policy and the frozen reference policy.
struct LogProbPair {
    double logp_w_policy = 0.0;
    double logp_w_ref = 0.0;
    double logp_l_policy = 0.0;
    double logp_l_ref = 0.0;
    double beta = 0.1;
};

/// beta * (logp_policy - logp_ref). Throws InvalidInput when beta <= 0.
double implicit_reward(double logp_policy, double logp_ref, double beta);

/// Implicit-reward margin between chosen and rejected.
double reward_margin(const LogProbPair& pair);

/// -log sigmoid(margin); nonnegative, ln 2 at zero margin.
double dpo_loss(const LogProbPair& pair);

struct DpoGrad {
    double d_logp_w_policy = 0.0;  // always <= 0
    double d_logp_l_policy = 0.0;  // always >= 0
};

/// Exact partial derivatives of dpo_loss with respect to the policy
/// log-probabilities; the reference log-probabilities are constants.
DpoGrad dpo_grad(const LogProbPair& pair);

/// Trainer hand-off file: JSONL rows with keys
/// {id, prompt, chosen, rejected, score_chosen, score_rejected, iteration},
/// chosen/rejected as response texts. Re-export of identical input is
/// byte-identical. Throws InvalidInput on an empty list.
void export_preference_dataset(const std::vector<PreferencePair>& pairs,
                               const std::filesystem::path& path);

ordered_json export_row(const PreferencePair& pair);

}  // namespace proxyforge
