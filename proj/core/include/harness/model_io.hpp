#pragma once

#include <string>

#include <json.hpp>

#include "harness/dataset.hpp"
#include "harness/hyperopt.hpp"
#include "harness/kernel.hpp"

namespace harness {

// Everything `predict` needs: kernel structure and parameters, the
// training-data scaling, and the group hierarchy used to build designs.
struct ModelFile {
    KernelConfig kernel;
    double lambda = 1.0;
    KernelParams params;
    GroupKernelParams group_params;
    ScalingSpec scaling;
    GroupHierarchy hierarchy;
    std::vector<std::string> covariate_names;
    std::vector<std::vector<std::string>> group_names;
    nlohmann::json training_info;  // iterations, final loss, seed, variants
};

nlohmann::json model_to_json(const ModelFile& model);
ModelFile model_from_json(const nlohmann::json& j);
void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(const std::string& path);

// JSON-lines training trace: one record per iteration with loss, seed and
// cumulative wall time.
void save_trace_jsonl(const TrainTrace& trace, std::uint64_t seed, const std::string& path);

// Local fit snapshot: the dual weights plus the references (model file,
// subset) needed to rebuild cross-Grams for prediction.
nlohmann::json fitted_model_to_json(const FittedLocalModel& model,
                                    const std::string& model_reference = "",
                                    const std::string& subset_reference = "");
FittedLocalModel fitted_model_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace harness
