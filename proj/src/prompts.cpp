#include "proxyforge/prompts.hpp"

namespace proxyforge {

namespace {

const char* kMetaQuestionPrompt =
    R"(You are a data scientist. For the specified topic, please provide a list of questions that require detailed and comprehensive responses. Your tone should be formal.

Topic: {TOPIC}

Here is an example:

Input:

Topic: Computer Science

Output:

1. Data parallelism, model parallelism, and pipeline parallelism play a vital role in the training of large-scale language models. What are the representative works and frameworks among these technologies? Please introduce these technologies and frameworks in detail.)";

const char* kProxyPairPrompt =
    R"(You are a data scientist. Your task is generate proxy question-answer pairs based on given meta-question.

Meta-questions are defined as questions that require detailed and comprehensive responses.

For a given meta-question, please identify the key content necessary for formulating a detailed question and create more than 15 proxy question-answer pairs to explore these points.

Each proxy question should incorporate a key aspect of the meta-question.

The corresponding proxy answers should be one of the following: {True, False, Not Mentioned}, indicating the correctness and relevance of each proxy question to the meta-question.

Meta-question: {META-QUESTION}

Here is an example:

Input:

Meta-question: Contrastive learning has greatly promoted the progress of the learning of sentence embeddings. Please introduce some effective contrastive learning methods in sentence embedding.

Output:

1. **Question**: The hierarchical sampling strategy first selects a subset of negative samples based on their relevance to positive samples, then randomly samples from this subset to form hard negatives.
**Answer**: True

2. **Question**: Given a sentence, EDA (Easy Data Augmentation) randomly chooses and applies one of four simple operations: Synonym replacement (SR), Random insertion (RI), Random swap (RS), and Random deletion (RD).
**Answer**: True

3. **Question**: SBERT (Sentence-BERT) relies on siamese and triplet network architectures to learn sentence embeddings such that the sentence similarity can be estimated by cosine similarity between pairs of embeddings.
**Answer**: True

4. **Question**: BERT-flow was proposed to transform the embedding into a smooth and isotropic Gaussian distribution via normalizing flows.
**Answer**: True

5. **Question**: IS-BERT (Info-Sentence BERT) adopts a self-supervised learning objective based on mutual information maximization to learn good sentence embeddings in an unsupervised manner.
**Answer**: True)";

const char* kJudgePrompt =
    R"(Read the provided document and determine whether the question or statement below is "True", "False" or "Not mentioned".

Use only the information in the text to make your decision. Do not rely on prior knowledge or information outside of the given text.

If the text does not provide enough information to make a decision, respond with "Not mentioned".

You are required to explain how you answer the question, and then select the final answer from "True", "False" and "Not Mentioned".

Document: {DOCUMENT}

Question: {QUESTION})";

const char* kLlmJudgePrompt =
    R"(Evaluate the quality of the given response to the question.

Rate the response on four dimensions: accuracy, coherence, factuality, and comprehensiveness. Use a scale from 1 (worst) to 10 (best).

- Accuracy: Assess how well the response addresses the question and provides correct information.
- Coherence: Evaluate the clarity and logical flow of the response.
- Factuality: Check for the presence of verifiable facts and data.
- Comprehensiveness: Determine if the response covers all relevant aspects of the question.

Be strict in your evaluation, and aim to use the full scale. Consider the following criteria for scoring:

- A score of 1-3 indicates major flaws in multiple dimensions.
- A score of 4-6 indicates moderate issues or inconsistencies.
- A score of 7-8 reflects generally good quality with minor flaws.
- A score of 9-10 is reserved for exemplary responses that excel in all dimensions.

Question: {META-QUESTION}

Response: {DOCUMENT})";

std::string substitute(std::string text, const std::string& placeholder, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return text;
}

}  // namespace

std::string render_meta_question_prompt(const std::string& topic) {
    return substitute(kMetaQuestionPrompt, "{TOPIC}", topic);
}

std::string render_proxy_pair_prompt(const std::string& meta_question) {
    return substitute(kProxyPairPrompt, "{META-QUESTION}", meta_question);
}

std::string render_judge_prompt(const std::string& document, const std::string& question) {
    return substitute(substitute(kJudgePrompt, "{DOCUMENT}", document), "{QUESTION}", question);
}

std::string render_llm_judge_prompt(const std::string& meta_question, const std::string& document) {
    return substitute(substitute(kLlmJudgePrompt, "{META-QUESTION}", meta_question), "{DOCUMENT}",
                      document);
}

}  // namespace proxyforge
