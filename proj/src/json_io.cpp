#include "unlearn/json_io.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "unlearn/error.hpp"

namespace unlearn {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorKind::SchemaMismatch, std::string("model JSON lacks \"") + key + "\"");
  }
  return j.at(key);
}

std::size_t count_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw Error(ErrorKind::SchemaMismatch, std::string("\"") + key + "\" must be a count");
  }
  return v.get<std::size_t>();
}

}  // namespace

Vector vector_from_json(const Json& j) {
  const Json& arr = j.is_object() && j.contains("v") ? j.at("v") : j;
  if (!arr.is_array()) throw Error(ErrorKind::SchemaMismatch, "expected a JSON array of numbers");
  Vector v;
  v.reserve(arr.size());
  for (const auto& x : arr) {
    if (!x.is_number()) throw Error(ErrorKind::SchemaMismatch, "array entries must be numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

Json to_json(const PretrainedModel& model) {
  return Json{{"theta", model.theta},
              {"n_total", model.n_total},
              {"n_remaining", model.n_remaining},
              {"n_forget", model.n_forget},
              {"loss", std::string(to_string(model.loss))}};
}

PretrainedModel model_from_json(const Json& j) {
  PretrainedModel m;
  m.theta = vector_from_json(field(j, "theta"));
  m.n_total = count_field(j, "n_total");
  m.n_remaining = count_field(j, "n_remaining");
  m.n_forget = count_field(j, "n_forget");
  const Json& loss = field(j, "loss");
  if (!loss.is_string()) throw Error(ErrorKind::SchemaMismatch, "\"loss\" must be a string");
  try {
    m.loss = parse_loss_id(loss.get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorKind::SchemaMismatch, e.what());
  }
  if (m.theta.empty()) throw Error(ErrorKind::SchemaMismatch, "\"theta\" is empty");
  try {
    m.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::SchemaMismatch, e.what());
  }
  return m;
}

Json to_json(const EstimateResult& r) {
  return Json{{"theta", r.theta},
              {"method", std::string(to_string(r.method))},
              {"iterations", r.iterations},
              {"lambda_used", optional_number(r.lambda_used)},
              {"grad_residual", optional_number(r.grad_residual)}};
}

Json to_json(const InferenceReport& r) {
  return Json{{"v", r.v},
              {"point", r.point},
              {"variance", r.variance},
              {"ci", Json::array({r.ci_lo, r.ci_hi})},
              {"alpha", r.alpha},
              {"method", std::string(to_string(r.method))}};
}

Json to_json(const SimConfig& c) {
  Json methods = Json::array();
  for (Method m : c.methods) methods.push_back(std::string(to_string(m)));
  return Json{{"n_r", c.n_r},
              {"n_f", c.n_f},
              {"p", c.p},
              {"subsample_ratio", c.subsample_ratio},
              {"n_sub", c.n_sub()},
              {"delta", c.delta},
              {"rho_f", c.rho_f},
              {"reps", c.reps},
              {"seed", c.seed},
              {"methods", methods},
              {"v_direction", c.v_direction},
              {"alpha", c.alpha},
              {"lambda", c.oracle_lambda ? "oracle" : "cv"},
              {"cv_folds", c.cv.folds},
              {"cv_grid", c.cv.grid},
              {"redraw_truth", c.redraw_truth}};
}

Json to_json(const SimSummary& s) {
  Json methods = Json::array();
  for (const auto& m : s.methods) {
    methods.push_back(Json{{"method", std::string(to_string(m.method))},
                           {"ok", m.ok},
                           {"failures", m.failures},
                           {"mean_error", m.mean_error},
                           {"median_error", m.median_error},
                           {"q1_error", m.q1_error},
                           {"q3_error", m.q3_error},
                           {"coverage", optional_number(m.coverage)},
                           {"coverage_se", optional_number(m.coverage_se)},
                           {"mean_sd", optional_number(m.mean_sd)},
                           {"empirical_sd", optional_number(m.empirical_sd)},
                           {"total_millis", m.total_millis}});
  }
  return Json{{"config", to_json(s.config)}, {"methods", methods}, {"wall_seconds", s.wall_seconds}};
}

Json to_json(const CvResult& r) {
  Json table = Json::array();
  for (const auto& e : r.table) {
    table.push_back(Json{{"lambda", e.lambda}, {"fold", e.fold},
                         {"mse", std::isfinite(e.mse) ? Json(e.mse) : Json(nullptr)}});
  }
  return Json{{"lambda", r.lambda}, {"score", r.score}, {"table", table}};
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

void save_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

PretrainedModel load_model(const std::filesystem::path& path) {
  return model_from_json(load_json(path));
}

void save_model(const PretrainedModel& model, const std::filesystem::path& path) {
  save_json(to_json(model), path);
}

}  // namespace unlearn
