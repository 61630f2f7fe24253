#include <json.hpp>

#include "airtran/adaptive_scaling.hpp"
#include "airtran/fs_util.hpp"
#include "airtran/whitening.hpp"

namespace airtran {

using nlohmann::json;

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* suffix) {
  auto path = prefix;
  path += suffix;
  return path;
}

json load_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, path.string() + ": " + e.what());
  }
}

}  // namespace

void save_whitening(const WhiteningModel<double>& model, const std::filesystem::path& prefix) {
  save_matrix(model.mean.cast<float>(), with_suffix(prefix, ".mean.mat"));
  save_matrix(model.transform.cast<float>(), with_suffix(prefix, ".transform.mat"));
  const std::vector<double> eigenvalues(model.eigenvalues.data(), model.eigenvalues.data() + model.eigenvalues.size());
  const json sidecar = {{"epsilon_used", model.epsilon_used}, {"eigenvalues", eigenvalues}};
  write_file_atomic(with_suffix(prefix, ".whitening.json"), sidecar.dump(2) + "\n");
}

WhiteningModel<double> load_whitening(const std::filesystem::path& prefix) {
  WhiteningModel<double> model;
  model.mean = load_matrix(with_suffix(prefix, ".mean.mat")).cast<double>();
  model.transform = load_matrix(with_suffix(prefix, ".transform.mat")).cast<double>();
  const json sidecar = load_json(with_suffix(prefix, ".whitening.json"));
  const auto eigenvalues = sidecar.at("eigenvalues").get<std::vector<double>>();
  if (model.mean.rows() != 1 || model.transform.rows() != model.mean.cols() ||
      model.transform.cols() != model.mean.cols() || eigenvalues.size() != static_cast<std::size_t>(model.dim())) {
    throw Error(ErrorKind::Shape, "inconsistent whitening files at " + prefix.string());
  }
  model.epsilon_used = sidecar.at("epsilon_used").get<double>();
  model.eigenvalues = Eigen::Map<const Vector<double>>(eigenvalues.data(), model.dim());
  model.eigenvectors = model.transform * model.eigenvalues.cwiseSqrt().asDiagonal();
  return model;
}

void save_scaling(const ScalingWeights<double>& weights, const std::filesystem::path& prefix) {
  save_matrix(weights.weights.transpose().cast<float>(), with_suffix(prefix, ".weights.mat"));
  const json sidecar = {{"lambda_used", weights.lambda_used},
                        {"residual_norm", weights.residual_norm},
                        {"solver", weights.path == SolvePath::Cholesky ? "cholesky" : "eigen"}};
  write_file_atomic(with_suffix(prefix, ".weights.json"), sidecar.dump(2) + "\n");
}

ScalingWeights<double> load_scaling(const std::filesystem::path& prefix) {
  ScalingWeights<double> weights;
  const EmbeddingMatrix row = load_matrix(with_suffix(prefix, ".weights.mat"));
  if (row.rows() != 1) throw Error(ErrorKind::Shape, "weights file must be 1xD");
  weights.weights = row.transpose().cast<double>();
  const json sidecar = load_json(with_suffix(prefix, ".weights.json"));
  weights.lambda_used = sidecar.at("lambda_used").get<double>();
  weights.residual_norm = sidecar.at("residual_norm").get<double>();
  weights.path = sidecar.value("solver", std::string("cholesky")) == "eigen" ? SolvePath::Eigen : SolvePath::Cholesky;
  return weights;
}

}  // namespace airtran
