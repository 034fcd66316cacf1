#pragma once

#include <filesystem>

#include <json.hpp>

#include "unlearn/data.hpp"
#include "unlearn/estimators.hpp"
#include "unlearn/inference.hpp"
#include "unlearn/simulation.hpp"

namespace unlearn {

using Json = nlohmann::json;

Json to_json(const PretrainedModel& model);
/// Throws SchemaMismatch on missing or mistyped fields.
PretrainedModel model_from_json(const Json& j);

Json to_json(const EstimateResult& r);
Json to_json(const InferenceReport& r);
Json to_json(const SimConfig& cfg);
Json to_json(const SimSummary& s);
Json to_json(const CvResult& r);

/// Parse a whole file; ParseError / IoError on failure.
Json load_json(const std::filesystem::path& path);
void save_json(const Json& j, const std::filesystem::path& path);

PretrainedModel load_model(const std::filesystem::path& path);
void save_model(const PretrainedModel& model, const std::filesystem::path& path);

/// A JSON array of numbers, or an object with a "v" array.
Vector vector_from_json(const Json& j);

}  // namespace unlearn
