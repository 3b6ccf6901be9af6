#include "proxyforge/dpo.hpp"

#include <cmath>

#include "proxyforge/errors.hpp"
#include "proxyforge/util.hpp"

namespace proxyforge {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double log_sigmoid(double z) {
    if (z >= 0.0) {
        return -std::log1p(std::exp(-z));
    }
    return z - std::log1p(std::exp(z));
}

double implicit_reward(double logp_policy, double logp_ref, double beta) {
    if (!(beta > 0.0)) throw ProxyError(ErrorKind::InvalidInput, "beta must be > 0");
    return beta * (logp_policy - logp_ref);
}

double reward_margin(const LogProbPair& pair) {
    return implicit_reward(pair.logp_w_policy, pair.logp_w_ref, pair.beta) -
           implicit_reward(pair.logp_l_policy, pair.logp_l_ref, pair.beta);
}

double dpo_loss(const LogProbPair& pair) { return -log_sigmoid(reward_margin(pair)); }

DpoGrad dpo_grad(const LogProbPair& pair) {
    const double g = 1.0 - sigmoid(reward_margin(pair));
    return DpoGrad{-pair.beta * g, pair.beta * g};
}

ordered_json export_row(const PreferencePair& pair) {
    return ordered_json{{"id", pair.meta_id},
                        {"prompt", pair.prompt},
                        {"chosen", pair.chosen.text},
                        {"rejected", pair.rejected.text},
                        {"score_chosen", pair.score_chosen},
                        {"score_rejected", pair.score_rejected},
                        {"iteration", pair.iteration}};
}

void export_preference_dataset(const std::vector<PreferencePair>& pairs,
                               const std::filesystem::path& path) {
    if (pairs.empty()) throw ProxyError(ErrorKind::InvalidInput, "no preference pairs to export");
    std::vector<std::string> lines;
    lines.reserve(pairs.size());
    for (const auto& p : pairs) lines.push_back(export_row(p).dump());
    write_lines(path, lines);
}

}  // namespace proxyforge
