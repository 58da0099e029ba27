#pragma once

#include <fstream>
#include <istream>
#include <string>

#include "json.hpp"

#include "flower/draws.hpp"
#include "flower/sampler.hpp"

namespace flower {

/// Newline-delimited JSON chain store (schema "flower-draws/1").
///
/// Line 1 is a header record with the model description, every following
/// line is one retained draw, and the last line is a summary record with the
/// acceptance rates. Partition labels and covariate codes are 1-based in the
/// file. A store without a summary line (an interrupted run) still loads.
inline constexpr const char* kDrawsSchema = "flower-draws/1";

nlohmann::json hyperparameters_to_json(const Hyperparameters& hp);
Hyperparameters hyperparameters_from_json(const nlohmann::json& j);

nlohmann::json model_info_to_json(const ModelInfo& info);
ModelInfo model_info_from_json(const nlohmann::json& j);

nlohmann::json draw_to_json(const Draw& draw);
Draw draw_from_json(const nlohmann::json& j);

nlohmann::json acceptance_to_json(const AcceptanceSummary& a);
AcceptanceSummary acceptance_from_json(const nlohmann::json& j);

/// Streams draws to a file as they are produced. Throws IoError when the file
/// cannot be written.
class NdjsonDrawWriter : public DrawSink {
 public:
  explicit NdjsonDrawWriter(const std::string& path);
  void begin(const ModelInfo& info) override;
  void write(const Draw& draw) override;
  void end(const AcceptanceSummary& summary) override;

 private:
  void emit(const nlohmann::json& record);
  std::string path_;
  std::ofstream out_;
};

/// Reads a whole chain store. Throws IoError on unreadable or malformed input.
PosteriorDraws read_draws(const std::string& path);
PosteriorDraws read_draws(std::istream& in);

void write_draws(const std::string& path, const PosteriorDraws& draws);

}  // namespace flower
