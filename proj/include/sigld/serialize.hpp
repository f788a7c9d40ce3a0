#pragma once

#include <string>

#include <json.hpp>

#include "sigld/diagnostics.hpp"
#include "sigld/mcprobe.hpp"
#include "sigld/path.hpp"
#include "sigld/processes.hpp"
#include "sigld/rate.hpp"
#include "sigld/signature.hpp"
#include "sigld/tensor.hpp"

namespace sigld {

using json = nlohmann::json;

// {dim, level, data:[...]} with row-major data
json tensor_to_json(const LevelTensor& t);
LevelTensor tensor_from_json(const json& j);

// {dim, T, knots:[...], values:[[...]]}
json path_to_json(const PiecewisePath& p);
PiecewisePath path_from_json(const json& j);

// {dim, top_level, time, levels:[tensor...]}
json stack_to_json(const SignatureStack& s);
SignatureStack stack_from_json(const json& j);

// {kind, dim, params, centered}
json model_to_json(const StepLawModel& m);
StepLawModel model_from_json(const json& j);

json rate_problem_to_json(const RateProblem& p);
RateProblem rate_problem_from_json(const json& j);
json rate_solution_to_json(const RateSolution& s);

json estimate_to_json(const LDPEstimate& e);
LDPEstimate estimate_from_json(const json& j);
json comparison_to_json(const ComparisonRecord& r);

json holder_report_to_json(const HolderReport& r);
json lln_report_to_json(const LlnReport& r);
json regularity_report_to_json(const RegularityReport& r);

// CSV: one row per sample, dim columns, full double precision.
std::string sequence_to_csv(const SampledSequence& seq);
SampledSequence sequence_from_csv(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace sigld
