#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "harness/baseline.hpp"
#include "harness/dataset.hpp"
#include "harness/dnr.hpp"
#include "harness/hyperopt.hpp"
#include "harness/metrics.hpp"
#include "harness/model_io.hpp"
#include "harness/simgen.hpp"

namespace harness {

// Declarative experiment description; every run is a pure function of
// (config, master seed). Parsed from a JSON config file, with CLI overrides
// applied on top.
struct ExperimentConfig {
    std::uint64_t seed = 0;

    std::string data_csv;  // empty -> simulate
    SimConfig sim;
    int sim_setting = 1;

    SplitSpec split;

    int kernel_order = 2;
    int group_order = 0;  // 0 -> hierarchy depth
    double jitter = 1e-8;

    SolverConfig solver;
    OptimizerConfig optimizer;
    DnrConfig dnr;

    Index min_group_size = 100;
    bool export_heatmap = false;
    Index heatmap_max_samples = 256;

    bool baseline_enabled = true;
    LinearBaselineConfig baseline;

    std::string output_dir = "out";

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Trains on every row of `raw` (callers split beforehand): scaling is fit
// here, the hierarchy comes from the labels, and the returned model bundles
// everything prediction needs.
struct FitResult {
    ModelFile model;
    TrainTrace trace;
};
FitResult fit_dataset(const Dataset& raw, const ExperimentConfig& config, std::uint64_t seed);

// D&R scores for `test` given the training rows the model was fit on.
// Covariates of both sets go through the model's scaling spec (test side
// clamped into the kernel domain).
Eigen::VectorXd predict_with_model(const ModelFile& model, const Dataset& train_raw,
                                   const Dataset& test_raw, const DnrConfig& dnr);

struct ReplicateOutcome {
    int replicate = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failed_stage;
    std::string message;
    nlohmann::json metrics;  // per-scope metric blocks as written to disk
};

struct ExperimentResult {
    std::vector<ReplicateOutcome> replicates;
    nlohmann::json aggregate;
};

// Full pipeline per replicate (seed = master + index): obtain data, split by
// year, scale on the training split, train, score retrospective and
// prospective sets, write metric/report files. Failures are recorded per
// replicate with their stage; completed outputs stay on disk.
ExperimentResult run_experiment(const ExperimentConfig& config, int replicates);

}  // namespace harness
