#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chromabehave/conical.hpp"

namespace chromabehave::synth::text {

/// Seed documents for each topic detector.
const std::vector<std::string>& topic_documents(conical::Topic t);
const std::vector<std::string>& benign_pages();
const std::vector<std::string>& benign_emails();
/// Word counts written out as the general-language dictionary.
const std::vector<std::pair<std::string, long>>& word_counts();

}  // namespace chromabehave::synth::text
