#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "iud/config.hpp"
#include "iud/sim_harness.hpp"

namespace iud {

// Shortest decimal text with at most 9 significant digits; "nan", "inf", "-inf"
// otherwise. Independent of the global locale.
std::string format_number(double x);

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);

// Lines of "n,s" integers; a non-numeric first line is taken as a header.
// Throws ConfigurationError naming the offending line.
AggregatedSample read_counts_csv(std::istream& in);

// Versioned JSON document: header, config echo, realized truth and snapshots.
nlohmann::json trace_to_json(const TrialTrace& trace, const MechanismSpec& spec,
                             const Scenario& scenario);
// Throws ConfigurationError on a malformed or foreign document.
TrialTrace trace_from_json(const nlohmann::json& document);

void write_json(const std::filesystem::path& path, const nlohmann::json& document);
// Throws ConfigurationError when the file is missing or not valid JSON.
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace iud
