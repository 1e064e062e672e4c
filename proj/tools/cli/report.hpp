#pragma once

#include <string>

#include "json.hpp"

#include "bleubound/bleu.hpp"
#include "bleubound/expected.hpp"
#include "bleubound/grad.hpp"
#include "bleubound/lower_bound.hpp"
#include "bleubound/trainers.hpp"

namespace bleubound::cli {

using Json = nlohmann::ordered_json;

Json to_json(const BleuBreakdown& b);
Json to_json(const LbResult& r);
Json to_json(const McEstimate& e);
Json to_json(const ExactExpectation& e);
Json to_json(const FdReport& r);
Json to_json(const GradSuiteReport& r);
Json to_json(const ToySummary& s);
Json to_json(const ToyConfig& cfg);
Json to_json(const GradientComparison& c);

// Overwrites the fields present in `j`; unknown keys throw InvalidConfig.
void apply_toy_json(const Json& j, ToyConfig& cfg);

// Flat CSV view of a JSON object: arrays expand to key_1..key_k, nested
// objects to parent.child.
std::string csv_header(const Json& j);
std::string csv_row(const Json& j);

}  // namespace bleubound::cli
