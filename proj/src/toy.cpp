#include "proxyforge/toy.hpp"

#include <cmath>

#include "proxyforge/dpo.hpp"
#include "proxyforge/errors.hpp"
#include "proxyforge/reward.hpp"
#include "proxyforge/util.hpp"

namespace proxyforge {

ToyWorld ToyWorld::uniform(int num_facts) {
    if (num_facts < 1) throw ProxyError(ErrorKind::InvalidInput, "num_facts must be >= 1");
    ToyWorld world;
    world.num_facts = num_facts;
    world.fact_texts.reserve(num_facts);
    for (int j = 0; j < num_facts; ++j) {
        world.fact_texts.push_back("Fact " + std::to_string(j) + " holds in this world.");
    }
    world.references.assign(num_facts, Verdict::True);
    return world;
}

bool ToyWorld::references_all_true() const {
    for (const auto v : references) {
        if (v != Verdict::True) return false;
    }
    return true;
}

ProxySet ToyWorld::proxy_set(const std::string& meta_id) const {
    ProxySet set;
    set.meta_id = meta_id;
    for (int j = 0; j < num_facts; ++j) {
        set.pairs.push_back(ProxyPair{fact_texts[j], references[j], j});
    }
    return set;
}

ToyPolicy ToyPolicy::constant(int num_facts, double logit) {
    return ToyPolicy{Eigen::ArrayXd::Constant(num_facts, logit)};
}

Eigen::ArrayXd elementwise_sigmoid(const Eigen::ArrayXd& z) {
    return z.unaryExpr([](double v) { return sigmoid(v); });
}

std::string render_mask_text(const ToyWorld& world, const Eigen::ArrayXd& mask) {
    std::string text;
    for (int j = 0; j < world.num_facts; ++j) {
        if (mask[j] > 0.5) {
            if (!text.empty()) text += '\n';
            text += world.fact_texts[j];
        }
    }
    return text;
}

ToySample toy_sample(const ToyPolicy& policy, const ToyWorld& world, std::mt19937_64& rng) {
    const Eigen::ArrayXd probs = elementwise_sigmoid(policy.logits);
    Eigen::ArrayXd mask(world.num_facts);
    for (int j = 0; j < world.num_facts; ++j) {
        mask[j] = uniform01(rng) < probs[j] ? 1.0 : 0.0;
    }
    return ToySample{mask, render_mask_text(world, mask)};
}

ToySample toy_sample(const ToyPolicy& policy, const ToyWorld& world, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return toy_sample(policy, world, rng);
}

double toy_logprob(const ToyPolicy& policy, const Eigen::ArrayXd& mask) {
    if (mask.size() != policy.logits.size()) {
        throw ProxyError(ErrorKind::InvalidInput, "mask length does not match policy");
    }
    // mask * log sigmoid(z) + (1-mask) * log sigmoid(-z), in stable form
    double sum = 0.0;
    for (Eigen::Index j = 0; j < mask.size(); ++j) {
        const double z = policy.logits[j];
        sum += mask[j] > 0.5 ? log_sigmoid(z) : log_sigmoid(-z);
    }
    return sum;
}

Eigen::ArrayXd toy_logprob_grad(const ToyPolicy& policy, const Eigen::ArrayXd& mask) {
    return mask - elementwise_sigmoid(policy.logits);
}

Verdict toy_judge(const Eigen::ArrayXd& mask, int question_index) {
    if (question_index < 0 || question_index >= mask.size()) {
        throw ProxyError(ErrorKind::InvalidInput,
                         "question index " + std::to_string(question_index) + " out of range");
    }
    return mask[question_index] > 0.5 ? Verdict::True : Verdict::NotMentioned;
}

std::vector<Verdict> toy_judge_all(const Eigen::ArrayXd& mask) {
    std::vector<Verdict> verdicts;
    verdicts.reserve(mask.size());
    for (int j = 0; j < mask.size(); ++j) verdicts.push_back(toy_judge(mask, j));
    return verdicts;
}

double toy_expected_score(const ToyPolicy& policy, const ToyWorld& world) {
    if (world.references_all_true()) {
        return elementwise_sigmoid(policy.logits).mean();
    }
    return toy_expected_score_enumerated(policy, world);
}

double toy_expected_score_enumerated(const ToyPolicy& policy, const ToyWorld& world) {
    const int L = world.num_facts;
    if (L > 20) throw ProxyError(ErrorKind::InvalidInput, "enumeration limited to L <= 20");
    const Eigen::ArrayXd probs = elementwise_sigmoid(policy.logits);
    std::vector<Verdict> references = world.references;
    double expectation = 0.0;
    Eigen::ArrayXd mask(L);
    for (std::uint32_t bits = 0; bits < (1u << L); ++bits) {
        double p = 1.0;
        for (int j = 0; j < L; ++j) {
            const bool set = (bits >> j) & 1u;
            mask[j] = set ? 1.0 : 0.0;
            p *= set ? probs[j] : 1.0 - probs[j];
        }
        expectation += p * score_accuracy(toy_judge_all(mask), references);
    }
    return expectation;
}

Eigen::ArrayXd toy_pair_grad(const ToyPolicy& policy, const ToyPolicy& ref_policy,
                             const Eigen::ArrayXd& chosen, const Eigen::ArrayXd& rejected,
                             double beta) {
    LogProbPair pair;
    pair.logp_w_policy = toy_logprob(policy, chosen);
    pair.logp_w_ref = toy_logprob(ref_policy, chosen);
    pair.logp_l_policy = toy_logprob(policy, rejected);
    pair.logp_l_ref = toy_logprob(ref_policy, rejected);
    pair.beta = beta;
    const DpoGrad g = dpo_grad(pair);
    return g.d_logp_w_policy * toy_logprob_grad(policy, chosen) +
           g.d_logp_l_policy * toy_logprob_grad(policy, rejected);
}

ToyPolicy toy_dpo_step(const ToyPolicy& policy, const ToyPolicy& ref_policy,
                       const Eigen::ArrayXd& chosen, const Eigen::ArrayXd& rejected, double beta,
                       double learning_rate) {
    return ToyPolicy{policy.logits -
                     learning_rate * toy_pair_grad(policy, ref_policy, chosen, rejected, beta)};
}

ToyPolicy toy_dpo_batch_step(const ToyPolicy& policy, const ToyPolicy& ref_policy,
                             const std::vector<std::pair<Eigen::ArrayXd, Eigen::ArrayXd>>& pairs,
                             double beta, double learning_rate) {
    if (pairs.empty()) return policy;
    Eigen::ArrayXd grad = Eigen::ArrayXd::Zero(policy.logits.size());
    for (const auto& [chosen, rejected] : pairs) {
        grad += toy_pair_grad(policy, ref_policy, chosen, rejected, beta);
    }
    grad /= static_cast<double>(pairs.size());
    return ToyPolicy{policy.logits - learning_rate * grad};
}

}  // namespace proxyforge
