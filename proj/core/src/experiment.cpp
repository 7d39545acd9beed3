#include "harness/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "harness/errors.hpp"
#include "harness/io.hpp"
#include "harness/klr.hpp"

namespace harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    try {
        maybe(j, "seed", c.seed);
        maybe(j, "output_dir", c.output_dir);
        if (j.contains("data")) maybe(j.at("data"), "csv", c.data_csv);
        if (j.contains("simulate")) {
            const json& s = j.at("simulate");
            maybe(s, "n", c.sim.n);
            maybe(s, "p", c.sim.p);
            maybe(s, "groups", c.sim.groups);
            maybe(s, "years", c.sim.years);
            maybe(s, "setting", c.sim_setting);
            maybe(s, "base_variance", c.sim.base_variance);
            maybe(s, "group_variance", c.sim.group_variance);
            maybe(s, "year_variance", c.sim.year_variance);
        }
        if (j.contains("split")) {
            const json& s = j.at("split");
            maybe(s, "train_fraction", c.split.train_fraction);
            maybe(s, "prospective_years", c.split.prospective_years);
        }
        if (j.contains("kernel")) {
            const json& s = j.at("kernel");
            maybe(s, "order", c.kernel_order);
            maybe(s, "group_order", c.group_order);
            maybe(s, "jitter", c.jitter);
        }
        if (j.contains("solver")) {
            const json& s = j.at("solver");
            maybe(s, "lambda", c.solver.lambda);
            maybe(s, "max_iterations", c.solver.max_iterations);
            maybe(s, "tolerance", c.solver.tolerance);
            maybe(s, "damping", c.solver.damping);
        }
        if (j.contains("optimizer")) {
            const json& s = j.at("optimizer");
            maybe(s, "iterations", c.optimizer.iterations);
            maybe(s, "batch_size", c.optimizer.batch_size);
            maybe(s, "holdout_size", c.optimizer.holdout_size);
            maybe(s, "learning_rate", c.optimizer.learning_rate);
            maybe(s, "unrolled_steps", c.optimizer.unrolled_steps);
            maybe(s, "fd_step", c.optimizer.fd_step);
            maybe(s, "snapshot_interval", c.optimizer.snapshot_interval);
            maybe(s, "freeze_group", c.optimizer.freeze_group);
            maybe(s, "tie_order", c.optimizer.tie_order);
            if (s.contains("gradient")) {
                std::string g = s.at("gradient").get<std::string>();
                if (g == "finite_difference")
                    c.optimizer.gradient = GradientMethod::finite_difference;
                else if (g == "unrolled_newton")
                    c.optimizer.gradient = GradientMethod::unrolled_newton;
                else
                    throw ConfigError("unknown gradient method '" + g + "'");
            }
        }
        if (j.contains("dnr")) maybe(j.at("dnr"), "subsets", c.dnr.subsets);
        if (j.contains("evaluate")) {
            const json& s = j.at("evaluate");
            long mgs = static_cast<long>(c.min_group_size);
            maybe(s, "min_group_size", mgs);
            c.min_group_size = mgs;
            maybe(s, "export_gram_heatmap", c.export_heatmap);
            long hms = static_cast<long>(c.heatmap_max_samples);
            maybe(s, "heatmap_max_samples", hms);
            c.heatmap_max_samples = hms;
        }
        if (j.contains("baseline")) {
            const json& s = j.at("baseline");
            maybe(s, "enabled", c.baseline_enabled);
            maybe(s, "strength", c.baseline.strength);
            maybe(s, "strength_grid", c.baseline.strength_grid);
            maybe(s, "validation_fraction", c.baseline.validation_fraction);
            maybe(s, "max_iterations", c.baseline.max_iterations);
            if (s.contains("penalty")) {
                std::string pen = s.at("penalty").get<std::string>();
                if (pen == "l2")
                    c.baseline.penalty = LinearPenalty::l2;
                else if (pen == "l1")
                    c.baseline.penalty = LinearPenalty::l1;
                else
                    throw ConfigError("unknown baseline penalty '" + pen + "'");
            }
        }
    } catch (const json::exception& err) {
        throw ConfigError("malformed experiment config: " + std::string(err.what()));
    }
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["data"] = {{"csv", data_csv}};
    j["simulate"] = {{"n", sim.n},
                     {"p", sim.p},
                     {"groups", sim.groups},
                     {"years", sim.years},
                     {"setting", sim_setting},
                     {"base_variance", sim.base_variance},
                     {"group_variance", sim.group_variance},
                     {"year_variance", sim.year_variance}};
    j["split"] = {{"train_fraction", split.train_fraction},
                  {"prospective_years", split.prospective_years}};
    j["kernel"] = {{"order", kernel_order}, {"group_order", group_order}, {"jitter", jitter}};
    j["solver"] = {{"lambda", solver.lambda},
                   {"max_iterations", solver.max_iterations},
                   {"tolerance", solver.tolerance},
                   {"damping", solver.damping}};
    j["optimizer"] = {
        {"iterations", optimizer.iterations},
        {"batch_size", optimizer.batch_size},
        {"holdout_size", optimizer.holdout_size},
        {"learning_rate", optimizer.learning_rate},
        {"gradient", optimizer.gradient == GradientMethod::finite_difference
                         ? "finite_difference"
                         : "unrolled_newton"},
        {"unrolled_steps", optimizer.unrolled_steps},
        {"fd_step", optimizer.fd_step},
        {"snapshot_interval", optimizer.snapshot_interval},
        {"freeze_group", optimizer.freeze_group},
        {"tie_order", optimizer.tie_order}};
    j["dnr"] = {{"subsets", dnr.subsets}};
    j["evaluate"] = {{"min_group_size", static_cast<long>(min_group_size)},
                     {"export_gram_heatmap", export_heatmap},
                     {"heatmap_max_samples", static_cast<long>(heatmap_max_samples)}};
    j["baseline"] = {{"enabled", baseline_enabled},
                     {"penalty", baseline.penalty == LinearPenalty::l1 ? "l1" : "l2"},
                     {"strength", baseline.strength},
                     {"strength_grid", baseline.strength_grid},
                     {"validation_fraction", baseline.validation_fraction},
                     {"max_iterations", baseline.max_iterations}};
    return j;
}

FitResult fit_dataset(const Dataset& raw, const ExperimentConfig& config, std::uint64_t seed) {
    raw.validate();
    FitResult out;
    ModelFile& model = out.model;

    auto [Xs, scaling] = scale_covariates(raw.X);
    model.scaling = scaling;
    model.hierarchy = GroupHierarchy::infer(raw.group_labels);
    GroupDesign design = build_group_design(raw.group_labels, model.hierarchy);

    model.kernel.kinds = default_kernel_kinds(scaling);
    model.kernel.order = config.kernel_order;
    model.kernel.group_order =
        config.group_order > 0 ? config.group_order : model.hierarchy.levels;
    model.kernel.jitter = config.jitter;
    model.lambda = config.solver.lambda;
    model.covariate_names = raw.covariate_names;
    model.group_names = raw.group_names;

    OptimizerConfig opt = config.optimizer;
    opt.seed = seed;
    out.trace = train_sgd(Xs, design.Z, raw.y, model.kernel, config.solver, opt);
    if (out.trace.diverged)
        throw NumericError("training diverged at iteration " +
                           std::to_string(out.trace.iterations_done));

    model.params = out.trace.final_params();
    model.group_params = out.trace.final_group_params();
    model.training_info = {
        {"iterations", out.trace.iterations_done},
        {"final_loss", out.trace.losses.empty() ? 0.0 : out.trace.losses.back()},
        {"seed", seed},
        {"freeze_group", opt.freeze_group},
        {"tie_order", opt.tie_order}};
    return out;
}

Eigen::VectorXd predict_with_model(const ModelFile& model, const Dataset& train_raw,
                                   const Dataset& test_raw, const DnrConfig& dnr) {
    Eigen::MatrixXd Xtrain = apply_scaling(train_raw.X, model.scaling, /*clamp=*/true);
    Eigen::MatrixXd Xtest = apply_scaling(test_raw.X, model.scaling, /*clamp=*/true);
    GroupDesign Ztrain = build_group_design(train_raw.group_labels, model.hierarchy);
    GroupDesign Ztest = build_group_design(test_raw.group_labels, model.hierarchy);
    DnrConfig cfg = dnr;
    cfg.solver.lambda = model.lambda;
    return dnr_predict(Xtrain, Ztrain.Z, train_raw.y, Xtest, Ztest.Z, model.params,
                       model.group_params, model.kernel, cfg);
}

namespace {

json report_to_json(const StratifiedReport& report) {
    json out;
    out["reports"] = json::array();
    for (const auto& r : report.reports)
        out["reports"].push_back({{"scope", r.scope},
                                  {"n", static_cast<long>(r.n)},
                                  {"auroc", r.auroc},
                                  {"prauc", r.prauc},
                                  {"positive_rate", r.positive_rate}});
    out["skipped"] = json::array();
    for (const auto& s : report.skipped)
        out["skipped"].push_back(
            {{"scope", s.scope}, {"n", static_cast<long>(s.n)}, {"reason", s.reason}});
    return out;
}

std::vector<int> distinct_years(const Dataset& d) {
    std::set<int> ys(d.year.data(), d.year.data() + d.year.size());
    return {ys.begin(), ys.end()};
}

json evaluate_scores(const Eigen::VectorXd& scores, const Dataset& data,
                     Index min_group_size) {
    return report_to_json(
        stratified_report(scores, data.y, data.group_labels, data.group_names, min_group_size));
}

double overall_metric(const json& block, const char* key) {
    if (block.is_null() || block["reports"].empty()) return std::nan("");
    return block["reports"][0][key].get<double>();
}

void aggregate_stat(json& agg, const std::vector<double>& values, const std::string& name) {
    std::vector<double> v;
    for (double x : values)
        if (std::isfinite(x)) v.push_back(x);
    if (v.empty()) {
        agg[name] = nullptr;
        return;
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
    agg[name] = {{"mean", mean}, {"sd", std::sqrt(var)}, {"n", v.size()}};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, int replicates) {
    if (replicates < 1) throw ConfigError("replicates must be at least 1");
    fs::create_directories(config.output_dir);

    ExperimentResult result;
    for (int r = 0; r < replicates; ++r) {
        ReplicateOutcome outcome;
        outcome.replicate = r;
        outcome.seed = config.seed + static_cast<std::uint64_t>(r);
        fs::path dir = fs::path(config.output_dir) / ("replicate_" + std::to_string(r));
        fs::create_directories(dir);

        std::string stage = "data";
        try {
            Dataset data;
            if (config.data_csv.empty()) {
                SimConfig sim = config.sim;
                sim.seed = outcome.seed;
                data = generate_dataset(sim, SimSetting::get(config.sim_setting)).dataset;
            } else {
                data = load_dataset_csv(config.data_csv);
            }

            stage = "split";
            SplitSpec split = config.split;
            split.seed = outcome.seed;
            SplitIndices idx = temporal_split(data.year, split);
            Dataset train = data.subset(idx.train);
            Dataset retro = data.subset(idx.retro);
            Dataset prospective = data.subset(idx.prospective);

            stage = "train";
            FitResult fit = fit_dataset(train, config, outcome.seed);
            save_model(fit.model, (dir / "model.json").string());

            stage = "predict";
            DnrConfig dnr = config.dnr;
            dnr.seed = outcome.seed;
            dnr.solver = config.solver;
            json retro_metrics, prosp_metrics;
            if (retro.n() > 0) {
                Eigen::VectorXd scores = predict_with_model(fit.model, train, retro, dnr);
                save_scores_csv(scores, (dir / "scores_retrospective.csv").string());
                StratifiedReport rep = stratified_report(scores, retro.y, retro.group_labels,
                                                         retro.group_names,
                                                         config.min_group_size);
                save_metrics_csv(rep, (dir / "metrics_retrospective.csv").string());
                retro_metrics = report_to_json(rep);
            }
            if (prospective.n() > 0) {
                Eigen::VectorXd scores = predict_with_model(fit.model, train, prospective, dnr);
                save_scores_csv(scores, (dir / "scores_prospective.csv").string());
                StratifiedReport rep = stratified_report(scores, prospective.y,
                                                         prospective.group_labels,
                                                         prospective.group_names,
                                                         config.min_group_size);
                save_metrics_csv(rep, (dir / "metrics_prospective.csv").string());
                prosp_metrics = report_to_json(rep);
            }

            stage = "baseline";
            json base_retro, base_prosp;
            if (config.baseline_enabled) {
                Eigen::MatrixXd Xtrain =
                    apply_scaling(train.X, fit.model.scaling, /*clamp=*/true);
                GroupDesign Ztrain = build_group_design(train.group_labels,
                                                        fit.model.hierarchy);
                // Interactions with the level-1 block keep the comparator
                // linear in size; deeper blocks explode the design.
                Eigen::MatrixXd Z1 = Ztrain.Z.leftCols(Ztrain.widths[0]);
                LinearBaselineModel lin = fit_linear_baseline(
                    baseline_design(Xtrain, Z1), train.y, config.baseline, outcome.seed);
                auto score_with = [&](const Dataset& part) {
                    Eigen::MatrixXd Xp = apply_scaling(part.X, fit.model.scaling, true);
                    GroupDesign Zp = build_group_design(part.group_labels,
                                                        fit.model.hierarchy);
                    return linear_baseline_score(
                        lin, baseline_design(Xp, Zp.Z.leftCols(Zp.widths[0])));
                };
                if (retro.n() > 0)
                    base_retro = evaluate_scores(score_with(retro), retro,
                                                 config.min_group_size);
                if (prospective.n() > 0)
                    base_prosp = evaluate_scores(score_with(prospective), prospective,
                                                 config.min_group_size);
            }

            stage = "reports";
            Eigen::MatrixXd imp = importance_matrix(fit.model.params);
            std::vector<std::string> names = fit.model.covariate_names;
            if (names.empty())
                for (Index j = 0; j < imp.rows(); ++j)
                    names.push_back("x" + std::to_string(j + 1));
            save_matrix_csv(imp, names, names, "variable", (dir / "importance.csv").string());

            GroupDesign design = build_group_design(train.group_labels, fit.model.hierarchy);
            HeterogeneityReport het = heterogeneity_report(fit.model.group_params, design,
                                                           fit.model.group_names);
            {
                std::ofstream out((dir / "heterogeneity.csv").string());
                out.precision(17);
                out << "column,kappa_g";
                for (int q = 1; q <= fit.model.group_params.order(); ++q)
                    out << ",order" << q;
                out << '\n';
                for (const auto& row : het.rows) {
                    out << row.label << ',' << row.kappa_g;
                    for (Index q = 0; q < row.per_order.size(); ++q)
                        out << ',' << row.per_order[q];
                    out << '\n';
                }
                out << "global_shares,";
                for (Index q = 0; q < het.global_shares.size(); ++q)
                    out << (q ? "," : "") << het.global_shares[q];
                out << '\n';
            }

            if (config.export_heatmap) {
                std::vector<Index> order = heatmap_order(train.group_labels);
                if (static_cast<Index>(order.size()) > config.heatmap_max_samples) {
                    std::vector<Index> thin;
                    double stride = static_cast<double>(order.size()) /
                                    static_cast<double>(config.heatmap_max_samples);
                    for (Index k = 0; k < config.heatmap_max_samples; ++k)
                        thin.push_back(order[static_cast<Index>(k * stride)]);
                    order = thin;
                }
                Dataset sample = train.subset(order);
                Eigen::MatrixXd Xs = apply_scaling(sample.X, fit.model.scaling, true);
                GroupDesign Zs = build_group_design(sample.group_labels, fit.model.hierarchy);
                GramMatrix gram = kernel_matrix(Xs, Zs.Z, fit.model.params,
                                                fit.model.group_params, fit.model.kernel.kinds,
                                                0.0);
                std::vector<Index> identity(sample.n());
                std::iota(identity.begin(), identity.end(), Index{0});
                save_gram_heatmap_csv(gram.K, identity, sample.group_labels,
                                      (dir / "gram_heatmap.csv").string());
            }

            stage = "metrics";
            outcome.metrics = {{"replicate", r},
                               {"seed", outcome.seed},
                               {"sizes",
                                {{"train", static_cast<long>(train.n())},
                                 {"retrospective", static_cast<long>(retro.n())},
                                 {"prospective", static_cast<long>(prospective.n())}}},
                               {"years",
                                {{"train", distinct_years(train)},
                                 {"retrospective", distinct_years(retro)},
                                 {"prospective", distinct_years(prospective)}}},
                               {"model",
                                {{"retrospective", retro_metrics},
                                 {"prospective", prosp_metrics}}},
                               {"baseline",
                                {{"retrospective", base_retro},
                                 {"prospective", base_prosp}}},
                               {"training",
                                {{"iterations", fit.trace.iterations_done},
                                 {"final_loss", fit.trace.losses.empty()
                                                    ? 0.0
                                                    : fit.trace.losses.back()}}}};
            std::ofstream mout((dir / "metrics.json").string());
            mout << outcome.metrics.dump(2) << '\n';
        } catch (const Error& err) {
            outcome.failed = true;
            outcome.failed_stage = stage;
            outcome.message = err.what();
        } catch (const std::exception& err) {
            outcome.failed = true;
            outcome.failed_stage = stage;
            outcome.message = err.what();
        }
        result.replicates.push_back(std::move(outcome));
    }

    // Aggregate across completed replicates.
    json agg;
    agg["config"] = config.to_json();
    agg["replicates"] = json::array();
    std::vector<double> m_ra, m_rp, m_pa, m_pp, b_pa, b_ra;
    for (const auto& rep : result.replicates) {
        if (rep.failed) {
            agg["replicates"].push_back({{"replicate", rep.replicate},
                                         {"failed_stage", rep.failed_stage},
                                         {"message", rep.message}});
            continue;
        }
        const json& m = rep.metrics;
        double retro_auroc = overall_metric(m["model"]["retrospective"], "auroc");
        double retro_prauc = overall_metric(m["model"]["retrospective"], "prauc");
        double prosp_auroc = overall_metric(m["model"]["prospective"], "auroc");
        double prosp_prauc = overall_metric(m["model"]["prospective"], "prauc");
        m_ra.push_back(retro_auroc);
        m_rp.push_back(retro_prauc);
        m_pa.push_back(prosp_auroc);
        m_pp.push_back(prosp_prauc);
        b_ra.push_back(overall_metric(m["baseline"]["retrospective"], "auroc"));
        b_pa.push_back(overall_metric(m["baseline"]["prospective"], "auroc"));
        agg["replicates"].push_back({{"replicate", rep.replicate},
                                     {"seed", rep.seed},
                                     {"model_retro_auroc", retro_auroc},
                                     {"model_retro_prauc", retro_prauc},
                                     {"model_prospective_auroc", prosp_auroc},
                                     {"model_prospective_prauc", prosp_prauc}});
    }
    aggregate_stat(agg, m_ra, "model_retro_auroc");
    aggregate_stat(agg, m_rp, "model_retro_prauc");
    aggregate_stat(agg, m_pa, "model_prospective_auroc");
    aggregate_stat(agg, m_pp, "model_prospective_prauc");
    aggregate_stat(agg, b_ra, "baseline_retro_auroc");
    aggregate_stat(agg, b_pa, "baseline_prospective_auroc");
    result.aggregate = agg;

    std::ofstream aout((fs::path(config.output_dir) / "aggregate.json").string());
    aout << agg.dump(2) << '\n';
    return result;
}

}  // namespace harness
