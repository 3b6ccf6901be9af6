#pragma once

#include <string>

namespace proxyforge {

// Prompt templates for the four model roles. Placeholders are substituted
// verbatim; the wording is part of the pipeline protocol, so parsers in
// synthesis.hpp and reward.hpp are written against these exact formats.

std::string render_meta_question_prompt(const std::string& topic);
std::string render_proxy_pair_prompt(const std::string& meta_question);
std::string render_judge_prompt(const std::string& document, const std::string& question);
std::string render_llm_judge_prompt(const std::string& meta_question, const std::string& document);

}  // namespace proxyforge
