// Command-line front end: simulate benchmark data, fit kernel models,
// produce divide-and-recombine predictions, evaluate stratified metrics,
// and run full seeded replicate pipelines from a declarative config.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "harness/errors.hpp"
#include "harness/experiment.hpp"
#include "harness/io.hpp"
#include "harness/model_io.hpp"

using harness::ExperimentConfig;
using nlohmann::json;

namespace {

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig{};
    std::ifstream in(path);
    if (!in) throw harness::ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& err) {
        throw harness::ConfigError("malformed config JSON: " + std::string(err.what()));
    }
    return ExperimentConfig::from_json(j);
}

struct CommonOverrides {
    std::optional<std::uint64_t> seed;
    bool no_group = false;
    bool no_order = false;

    void apply(ExperimentConfig& config) const {
        if (seed) config.seed = *seed;
        if (no_group) config.optimizer.freeze_group = true;
        if (no_order) config.optimizer.tie_order = true;
    }
};

void add_common(CLI::App* cmd, std::string& config_path, CommonOverrides& over) {
    cmd->add_option("--config", config_path, "JSON experiment config file");
    cmd->add_option("--seed", over.seed, "master seed override");
    cmd->add_flag("--no-group", over.no_group,
                  "freeze group heterogeneity (kappa_g stays 0)");
    cmd->add_flag("--no-order", over.no_order,
                  "tie order-specific importance to 1 across orders");
}

int run_simulate(const ExperimentConfig& config, const std::string& out_csv,
                 const std::string& sidecar) {
    harness::SimConfig sim = config.sim;
    sim.seed = config.seed;
    harness::SimSetting setting = harness::SimSetting::get(config.sim_setting);
    harness::SimulatedData data = harness::generate_dataset(sim, setting);
    harness::save_dataset_csv(data.dataset, out_csv);
    if (!sidecar.empty()) {
        json j;
        j["setting"] = setting.id;
        j["interactions"] = setting.interactions;
        j["block_scales"] = {data.block_scales[0], data.block_scales[1],
                             data.block_scales[2]};
        j["coefficients"] = {
            {"alpha", harness::vector_to_json(data.coefficients.alpha)},
            {"beta", harness::vector_to_json(data.coefficients.beta)},
            {"gamma", harness::vector_to_json(data.coefficients.gamma)},
            {"zeta", harness::vector_to_json(data.coefficients.zeta)},
            {"alpha_by_group", harness::matrix_to_json(data.coefficients.alpha_g)},
            {"alpha_by_group_year", harness::matrix_to_json(data.coefficients.alpha_gt)},
            {"beta_by_group_year", harness::matrix_to_json(data.coefficients.beta_gt)},
            {"gamma_by_group_year", harness::matrix_to_json(data.coefficients.gamma_gt)},
            {"zeta_by_group_year", harness::matrix_to_json(data.coefficients.zeta_gt)}};
        json latent = json::array();
        for (harness::Index i = 0; i < data.latent.size(); ++i) {
            latent.push_back({{"linear", data.block_latent(i, 0)},
                              {"nonlinear", data.block_latent(i, 1)},
                              {"interaction", data.block_latent(i, 2)}});
        }
        j["block_latent"] = std::move(latent);
        std::ofstream out(sidecar);
        if (!out) throw harness::DataError("cannot open '" + sidecar + "' for writing");
        out << j.dump() << '\n';
    }
    std::cout << "wrote " << data.dataset.n() << " samples to " << out_csv << "\n";
    return 0;
}

int run_fit(const ExperimentConfig& config, const std::string& data_csv,
            const std::string& model_path, const std::string& trace_path) {
    harness::Dataset data = harness::load_dataset_csv(data_csv);
    harness::FitResult fit = harness::fit_dataset(data, config, config.seed);
    harness::save_model(fit.model, model_path);
    if (!trace_path.empty()) harness::save_trace_jsonl(fit.trace, config.seed, trace_path);
    std::cout << "trained " << fit.trace.iterations_done << " iterations; final loss "
              << (fit.trace.losses.empty() ? 0.0 : fit.trace.losses.back()) << "\n";
    return 0;
}

int run_predict(const ExperimentConfig& config, const std::string& model_path,
                const std::string& train_csv, const std::string& test_csv,
                const std::string& out_csv) {
    harness::ModelFile model = harness::load_model(model_path);
    harness::Dataset train = harness::load_dataset_csv(train_csv);
    harness::Dataset test = harness::load_dataset_csv(test_csv);
    harness::DnrConfig dnr = config.dnr;
    dnr.seed = config.seed;
    dnr.solver = config.solver;
    Eigen::VectorXd scores = harness::predict_with_model(model, train, test, dnr);
    harness::save_scores_csv(scores, out_csv);
    std::cout << "scored " << scores.size() << " samples to " << out_csv << "\n";
    return 0;
}

int run_evaluate(const ExperimentConfig& config, const std::string& scores_csv,
                 const std::string& data_csv, const std::string& out_json,
                 const std::string& out_csv) {
    Eigen::VectorXd scores = harness::load_scores_csv(scores_csv);
    harness::Dataset data = harness::load_dataset_csv(data_csv);
    if (scores.size() != data.n())
        throw harness::DataError("scores and dataset disagree on sample count");
    harness::StratifiedReport report = harness::stratified_report(
        scores, data.y, data.group_labels, data.group_names, config.min_group_size);
    if (!out_csv.empty()) harness::save_metrics_csv(report, out_csv);
    json j;
    j["reports"] = json::array();
    for (const auto& r : report.reports)
        j["reports"].push_back({{"scope", r.scope},
                                {"n", static_cast<long>(r.n)},
                                {"auroc", r.auroc},
                                {"prauc", r.prauc},
                                {"positive_rate", r.positive_rate}});
    j["skipped"] = json::array();
    for (const auto& s : report.skipped)
        j["skipped"].push_back(
            {{"scope", s.scope}, {"n", static_cast<long>(s.n)}, {"reason", s.reason}});
    std::ofstream out(out_json);
    if (!out) throw harness::DataError("cannot open '" + out_json + "' for writing");
    out << j.dump(2) << '\n';
    for (const auto& r : report.reports)
        std::cout << r.scope << ": AUROC " << r.auroc << ", PRAUC " << r.prauc << " (n=" << r.n
                  << ")\n";
    return 0;
}

int run_replicate(const ExperimentConfig& config, int replicates) {
    harness::ExperimentResult result = harness::run_experiment(config, replicates);
    int exit_code = 0;
    for (const auto& rep : result.replicates) {
        if (rep.failed) {
            std::cerr << "replicate " << rep.replicate << " failed at stage "
                      << rep.failed_stage << ": " << rep.message << "\n";
            if (exit_code == 0) exit_code = 4;
        }
    }
    const json& agg = result.aggregate;
    for (const char* key : {"model_retro_auroc", "model_prospective_auroc"}) {
        if (!agg.contains(key) || agg[key].is_null()) continue;
        std::cout << key << ": mean " << agg[key]["mean"].get<double>() << " sd "
                  << agg[key]["sd"].get<double>() << "\n";
    }
    std::cout << "outputs in " << config.output_dir << "\n";
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heterogeneity-aware kernel logistic regression"};
    app.require_subcommand(1);

    std::string config_path, data_csv, model_path, trace_path, train_csv, test_csv;
    std::string scores_csv, out_path, sidecar;
    int replicates = 1;
    CommonOverrides over;
    std::optional<int> setting_override;
    std::optional<std::string> outdir_override;

    CLI::App* simulate = app.add_subcommand("simulate", "generate benchmark data");
    add_common(simulate, config_path, over);
    simulate->add_option("--setting", setting_override, "simulation setting 1-4");
    simulate->add_option("--out", out_path, "output dataset CSV")->required();
    simulate->add_option("--sidecar", sidecar, "coefficients/latents JSON");

    CLI::App* fit = app.add_subcommand("fit", "train kernel hyperparameters on a dataset");
    add_common(fit, config_path, over);
    fit->add_option("--data", data_csv, "training dataset CSV")->required();
    fit->add_option("--model", model_path, "output model JSON")->required();
    fit->add_option("--trace", trace_path, "output training trace JSONL");

    CLI::App* predict = app.add_subcommand("predict", "divide-and-recombine scoring");
    add_common(predict, config_path, over);
    predict->add_option("--model", model_path, "model JSON")->required();
    predict->add_option("--train", train_csv, "training dataset CSV")->required();
    predict->add_option("--test", test_csv, "test dataset CSV")->required();
    predict->add_option("--out", out_path, "output scores CSV")->required();

    std::string report_csv;
    CLI::App* evaluate = app.add_subcommand("evaluate", "stratified AUROC/PRAUC report");
    add_common(evaluate, config_path, over);
    evaluate->add_option("--scores", scores_csv, "scores CSV")->required();
    evaluate->add_option("--data", data_csv, "dataset CSV with outcomes")->required();
    evaluate->add_option("--out", out_path, "output report JSON")->required();
    evaluate->add_option("--csv", report_csv, "optional report CSV");

    CLI::App* replicate = app.add_subcommand("replicate", "full seeded pipeline");
    add_common(replicate, config_path, over);
    replicate->add_option("--replicates", replicates, "number of replicates");
    replicate->add_option("--setting", setting_override, "simulation setting 1-4");
    replicate->add_option("--out", outdir_override, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig config = load_config(config_path);
        over.apply(config);
        if (setting_override) config.sim_setting = *setting_override;
        if (outdir_override) config.output_dir = *outdir_override;

        if (simulate->parsed()) return run_simulate(config, out_path, sidecar);
        if (fit->parsed()) return run_fit(config, data_csv, model_path, trace_path);
        if (predict->parsed())
            return run_predict(config, model_path, train_csv, test_csv, out_path);
        if (evaluate->parsed())
            return run_evaluate(config, scores_csv, data_csv, out_path, report_csv);
        if (replicate->parsed()) return run_replicate(config, replicates);
    } catch (const harness::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return err.exit_code();
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 4;
    }
    return 0;
}
