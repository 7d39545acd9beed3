#include "harness/model_io.hpp"

#include <fstream>

#include "harness/errors.hpp"

namespace harness {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
    std::vector<double> v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), v.size());
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("expected a JSON array of rows");
    Index rows = static_cast<Index>(j.size());
    Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j[i].size()) != cols)
            throw ConfigError("ragged JSON matrix");
        for (Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

namespace {

json kinds_to_json(const std::vector<UnivariateKernelKind>& kinds) {
    json arr = json::array();
    for (auto k : kinds)
        arr.push_back(k == UnivariateKernelKind::centered_linear ? "linear" : "poly2");
    return arr;
}

std::vector<UnivariateKernelKind> kinds_from_json(const json& arr) {
    std::vector<UnivariateKernelKind> kinds;
    for (const auto& s : arr) {
        std::string v = s.get<std::string>();
        if (v == "linear")
            kinds.push_back(UnivariateKernelKind::centered_linear);
        else if (v == "poly2")
            kinds.push_back(UnivariateKernelKind::orthogonal_poly2);
        else
            throw ConfigError("unknown kernel kind '" + v + "'");
    }
    return kinds;
}

}  // namespace

json model_to_json(const ModelFile& model) {
    json j;
    j["format"] = "harness-model/1";
    j["kernel"] = {{"order", model.kernel.order},
                   {"group_order", model.kernel.group_order},
                   {"jitter", model.kernel.jitter},
                   {"kinds", kinds_to_json(model.kernel.kinds)}};
    j["lambda"] = model.lambda;
    j["params"] = {{"kappa", vector_to_json(model.params.kappa)},
                   {"tau", matrix_to_json(model.params.tau)},
                   {"eta", vector_to_json(model.params.eta)}};
    j["group_params"] = {{"kappa", vector_to_json(model.group_params.kappa)},
                         {"tau", matrix_to_json(model.group_params.tau)},
                         {"eta", vector_to_json(model.group_params.eta)}};
    j["scaling"] = {{"min", vector_to_json(model.scaling.min)},
                    {"max", vector_to_json(model.scaling.max)},
                    {"constant", model.scaling.constant},
                    {"binary", model.scaling.binary}};
    j["hierarchy"] = {{"levels", model.hierarchy.levels},
                      {"counts", model.hierarchy.counts},
                      {"parent", model.hierarchy.parent}};
    j["covariate_names"] = model.covariate_names;
    j["group_names"] = model.group_names;
    j["training"] = model.training_info;
    return j;
}

ModelFile model_from_json(const json& j) {
    if (!j.contains("format") || j["format"] != "harness-model/1")
        throw ConfigError("not a recognized model file");
    ModelFile m;
    m.kernel.order = j["kernel"]["order"].get<int>();
    m.kernel.group_order = j["kernel"]["group_order"].get<int>();
    m.kernel.jitter = j["kernel"]["jitter"].get<double>();
    m.kernel.kinds = kinds_from_json(j["kernel"]["kinds"]);
    m.lambda = j["lambda"].get<double>();
    m.params = {vector_from_json(j["params"]["kappa"]), matrix_from_json(j["params"]["tau"]),
                vector_from_json(j["params"]["eta"])};
    m.group_params = {vector_from_json(j["group_params"]["kappa"]),
                      matrix_from_json(j["group_params"]["tau"]),
                      vector_from_json(j["group_params"]["eta"])};
    m.scaling.min = vector_from_json(j["scaling"]["min"]);
    m.scaling.max = vector_from_json(j["scaling"]["max"]);
    m.scaling.constant = j["scaling"]["constant"].get<std::vector<bool>>();
    m.scaling.binary = j["scaling"]["binary"].get<std::vector<bool>>();
    m.hierarchy.levels = j["hierarchy"]["levels"].get<int>();
    m.hierarchy.counts = j["hierarchy"]["counts"].get<std::vector<int>>();
    m.hierarchy.parent = j["hierarchy"]["parent"].get<std::vector<std::vector<int>>>();
    if (j.contains("covariate_names"))
        m.covariate_names = j["covariate_names"].get<std::vector<std::string>>();
    if (j.contains("group_names"))
        m.group_names = j["group_names"].get<std::vector<std::vector<std::string>>>();
    if (j.contains("training")) m.training_info = j["training"];
    return m;
}

void save_model(const ModelFile& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << model_to_json(model).dump(2) << '\n';
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& err) {
        throw ConfigError("malformed model JSON: " + std::string(err.what()));
    }
    return model_from_json(j);
}

json fitted_model_to_json(const FittedLocalModel& model, const std::string& model_reference,
                          const std::string& subset_reference) {
    json j;
    j["format"] = "harness-local-fit/1";
    j["f_hat"] = vector_to_json(model.f_hat);
    j["dual"] = vector_to_json(model.dual);
    j["lambda"] = model.lambda;
    j["converged"] = model.converged;
    j["iterations"] = model.iterations;
    j["grad_norm"] = model.grad_norm;
    if (!model_reference.empty()) j["model_reference"] = model_reference;
    if (!subset_reference.empty()) j["subset_reference"] = subset_reference;
    return j;
}

FittedLocalModel fitted_model_from_json(const json& j) {
    if (!j.contains("format") || j["format"] != "harness-local-fit/1")
        throw ConfigError("not a recognized local-fit file");
    FittedLocalModel model;
    model.f_hat = vector_from_json(j["f_hat"]);
    model.dual = vector_from_json(j["dual"]);
    model.lambda = j["lambda"].get<double>();
    model.converged = j["converged"].get<bool>();
    model.iterations = j["iterations"].get<int>();
    model.grad_norm = j["grad_norm"].get<double>();
    return model;
}

void save_trace_jsonl(const TrainTrace& trace, std::uint64_t seed, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (std::size_t t = 0; t < trace.losses.size(); ++t) {
        json rec = {{"iteration", t},
                    {"loss", trace.losses[t]},
                    {"seed", seed},
                    {"wall_ms", t < trace.wall_ms.size() ? trace.wall_ms[t] : 0.0}};
        out << rec.dump() << '\n';
    }
}

}  // namespace harness
