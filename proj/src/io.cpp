#include "iud/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace iud {

using nlohmann::json;

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 9);
    return std::string(buf, result.ptr);
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
    out << "scenario,mechanism,estimator,n,metric,stratum,mean,se,replicates\n";
    for (const MetricRow& r : rows) {
        out << r.scenario << ',' << r.mechanism << ',' << r.estimator << ',' << r.n << ','
            << r.metric << ',' << r.stratum << ',' << format_number(r.mean) << ','
            << format_number(r.se) << ',' << r.replicates << '\n';
    }
}

namespace {

bool parse_count(std::string_view text, Count& value) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    return result.ec == std::errc() && result.ptr == text.data() + text.size() && !text.empty();
}

} // namespace

AggregatedSample read_counts_csv(std::istream& in) {
    std::vector<Count> trials;
    std::vector<Count> successes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto comma = line.find(',');
        Count n = 0;
        Count s = 0;
        const bool ok = comma != std::string::npos &&
                        parse_count(std::string_view(line).substr(0, comma), n) &&
                        parse_count(std::string_view(line).substr(comma + 1), s);
        if (!ok) {
            if (trials.empty() && line_no == 1) continue; // header
            throw ConfigurationError("counts line " + std::to_string(line_no) + ": expected \"n,s\" integers");
        }
        if (n < 0 || s < 0 || s > n) {
            throw ConfigurationError("counts line " + std::to_string(line_no) + ": need 0 <= s <= n");
        }
        trials.push_back(n);
        successes.push_back(s);
    }
    if (trials.empty()) throw ConfigurationError("counts: no rows");
    return AggregatedSample(std::move(trials), std::move(successes));
}

namespace {

template <typename M>
json matrix_json(const M& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

template <typename M>
M matrix_from(const json& v, Index rows, Index cols, const std::string& what) {
    if (!v.is_array() || static_cast<Index>(v.size()) != rows) {
        throw ConfigurationError("trace: " + what + " needs " + std::to_string(rows) + " rows");
    }
    M m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const json& row = v[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw ConfigurationError("trace: " + what + " needs " + std::to_string(cols) + " columns");
        }
        for (Index c = 0; c < cols; ++c) {
            const json& x = row[static_cast<std::size_t>(c)];
            if (!x.is_number()) throw ConfigurationError("trace: " + what + " must be numeric");
            m(r, c) = x.get<typename M::Scalar>();
        }
    }
    return m;
}

const json& field(const json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) throw ConfigurationError(std::string("trace: missing field ") + key);
    return *it;
}

} // namespace

json trace_to_json(const TrialTrace& trace, const MechanismSpec& spec, const Scenario& scenario) {
    SimulationPlan echo;
    echo.trial = trace.config;
    echo.mechanisms = {spec};
    echo.scenarios = {scenario};
    echo.replicates = 1;
    json config = plan_to_json(echo);
    config.erase("replicates");

    json checkpoints = json::array();
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        checkpoints.push_back({{"step", trace.steps[k]},
                               {"successes", matrix_json(trace.counts[k].successes)},
                               {"failures", matrix_json(trace.counts[k].failures)},
                               {"urn", matrix_json(trace.urn[k])}});
    }
    return {{"format", "iud-trace"},
            {"version", 1},
            {"mechanism", spec.label},
            {"scenario", trace.scenario},
            {"replicate", trace.replicate},
            {"config", config},
            {"theta", matrix_json(trace.theta)},
            {"checkpoints", checkpoints}};
}

TrialTrace trace_from_json(const json& doc) {
    if (!doc.is_object() || doc.value("format", "") != "iud-trace") {
        throw ConfigurationError("trace: not an iud-trace document");
    }
    if (doc.value("version", 0) != 1) throw ConfigurationError("trace: unsupported version");
    TrialTrace trace;
    const SimulationPlan plan = parse_config(field(doc, "config"));
    trace.config = plan.trial_for(plan.mechanisms.front());
    trace.scenario = field(doc, "scenario").get<std::string>();
    trace.replicate = field(doc, "replicate").get<std::uint64_t>();
    const Index J = trace.config.treatments;
    const Index H = trace.config.strata;
    trace.theta = matrix_from<Matrix>(field(doc, "theta"), J, H, "theta");
    const json& checkpoints = field(doc, "checkpoints");
    if (!checkpoints.is_array()) throw ConfigurationError("trace: checkpoints must be an array");
    for (const json& c : checkpoints) {
        const Count step = field(c, "step").get<Count>();
        if (!trace.steps.empty() && step <= trace.steps.back()) {
            throw ConfigurationError("trace: checkpoint steps must ascend");
        }
        CountsTensor counts;
        counts.successes = matrix_from<CountMatrix>(field(c, "successes"), J, H, "successes");
        counts.failures = matrix_from<CountMatrix>(field(c, "failures"), J, H, "failures");
        if (counts.total() != step) {
            throw ConfigurationError("trace: counts at step " + std::to_string(step) + " do not sum to the step");
        }
        trace.steps.push_back(step);
        trace.counts.push_back(std::move(counts));
        trace.urn.push_back(matrix_from<Matrix>(field(c, "urn"), J, H, "urn"));
    }
    return trace;
}

void write_json(const std::filesystem::path& path, const json& document) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << document.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigurationError(path.string() + ": " + e.what());
    }
}

} // namespace iud
