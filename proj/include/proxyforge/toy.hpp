#pragma once

#include <Eigen/Core>
#include <random>
#include <string>
#include <vector>

#include "proxyforge/types.hpp"

namespace proxyforge {

// Synthetic fact-world: a response is a subset of L facts, the judge is a
// deterministic bit test, and the expected proxy score of a policy has a
// closed form. Makes the whole preference loop checkable at desk scale.
struct ToyWorld {
    int num_facts = 0;
    std::vector<std::string> fact_texts;
    std::vector<Verdict> references;  // defaults to all True

    /// L generic facts with all-True references.
    static ToyWorld uniform(int num_facts);

    bool references_all_true() const;
    ProxySet proxy_set(const std::string& meta_id) const;
};

// Independent-fact Bernoulli generation policy: fact j appears in a sample
// with probability sigmoid(logits[j]).
struct ToyPolicy {
    Eigen::ArrayXd logits;

    static ToyPolicy constant(int num_facts, double logit);
};

Eigen::ArrayXd elementwise_sigmoid(const Eigen::ArrayXd& z);

struct ToySample {
    Eigen::ArrayXd mask;  // entries 0.0 or 1.0
    std::string text;     // included fact texts, newline-joined
};

ToySample toy_sample(const ToyPolicy& policy, const ToyWorld& world, std::mt19937_64& rng);
ToySample toy_sample(const ToyPolicy& policy, const ToyWorld& world, std::uint64_t seed);

std::string render_mask_text(const ToyWorld& world, const Eigen::ArrayXd& mask);

/// Exact log-probability of drawing `mask` under the policy.
double toy_logprob(const ToyPolicy& policy, const Eigen::ArrayXd& mask);

/// d toy_logprob / d logits = mask - sigmoid(logits).
Eigen::ArrayXd toy_logprob_grad(const ToyPolicy& policy, const Eigen::ArrayXd& mask);

/// True when the fact is present, NotMentioned otherwise; the judge never
/// uses knowledge outside the sampled text. Throws InvalidInput when the
/// question index is out of range.
Verdict toy_judge(const Eigen::ArrayXd& mask, int question_index);

std::vector<Verdict> toy_judge_all(const Eigen::ArrayXd& mask);

/// Expected accuracy score under the policy: closed form mean(sigmoid(logits))
/// when all references are True, full 2^L enumeration otherwise (L <= 20).
double toy_expected_score(const ToyPolicy& policy, const ToyWorld& world);

/// Enumeration path regardless of references; L <= 20.
double toy_expected_score_enumerated(const ToyPolicy& policy, const ToyWorld& world);

/// Loss gradient with respect to the policy logits for one (chosen, rejected)
/// mask pair, chained through toy_logprob.
Eigen::ArrayXd toy_pair_grad(const ToyPolicy& policy, const ToyPolicy& ref_policy,
                             const Eigen::ArrayXd& chosen, const Eigen::ArrayXd& rejected,
                             double beta);

/// One gradient step on a single pair; the reference policy is untouched.
ToyPolicy toy_dpo_step(const ToyPolicy& policy, const ToyPolicy& ref_policy,
                       const Eigen::ArrayXd& chosen, const Eigen::ArrayXd& rejected, double beta,
                       double learning_rate);

/// One gradient step on the mean loss over a mini-batch of mask pairs.
ToyPolicy toy_dpo_batch_step(const ToyPolicy& policy, const ToyPolicy& ref_policy,
                             const std::vector<std::pair<Eigen::ArrayXd, Eigen::ArrayXd>>& pairs,
                             double beta, double learning_rate);

}  // namespace proxyforge
