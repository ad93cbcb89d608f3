#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "adma/data.hpp"
#include "adma/losses.hpp"
#include "adma/nn.hpp"
#include "adma/optim.hpp"

namespace adma::harness {

// ---------------------------------------------------------------- config

struct DatasetSpec {
    std::string kind = "blobs";  // blobs | digits | mnist | fashion_mnist | idx
    std::string dir;             // mnist/fashion_mnist: directory with the train IDX pair
    std::string images;          // idx: explicit file paths
    std::string labels;
    std::size_t classes = 3;  // blobs
    std::size_t dims = 2;
    std::size_t per_class = 100;  // blobs and digits
    double spread = 0.1;
    std::uint64_t seed = 7;  // generation + split stream; independent of the training seed
    std::size_t limit = 0;   // stratified cap applied before the split; 0 keeps all
};

struct ModelSpec {
    std::string kind = "mlp";  // mlp | logistic | convnet
    std::vector<std::size_t> hidden{256};
    std::string activation = "elu";
    double dropout = 0.0;
    std::size_t base_channels = 8;  // convnet
};

struct LossSpec {
    std::string kind = "adma";  // adma | cce | mse | squared_hinge
    double a = 0.26;
    double epsilon = Loss::kDefaultEpsilon;
};

struct OptimizerSpec {
    std::string kind = "adam";  // sgd | adam
    double lr = 1e-3;
    double momentum = 0.0;
    bool nesterov = false;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;
};

struct ScheduleSpec {
    std::string kind = "constant";  // constant | step_decay
    double factor = 0.5;
    int every_n_epochs = 10;
};

struct TrainConfig {
    DatasetSpec dataset;
    ModelSpec model;
    LossSpec loss;
    OptimizerSpec optimizer;
    ScheduleSpec schedule;
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    std::uint64_t seed = 1;
    double weight_decay = 0.0;
    double split = 0.8;
    bool stratified = true;
    std::size_t repeats = 1;  // independent runs with seeds seed, seed+1, ...
};

nlohmann::json to_json(const TrainConfig& cfg);
// Strict: unknown keys raise, so config typos surface instead of being ignored.
TrainConfig config_from_json(const nlohmann::json& j);

Loss make_loss(const LossSpec& spec);
Dataset make_dataset(const DatasetSpec& spec);
// Input dims and class count come from the dataset.
Model build_model(const ModelSpec& spec, const Dataset& ds, std::uint64_t seed);
std::string model_desc(const ModelSpec& spec);

// ---------------------------------------------------------------- hashing

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset);
std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h);
std::uint64_t fnv1a64_f64(double v, std::uint64_t h);

// Over the canonical (sorted-key) JSON dump of the config.
std::uint64_t config_hash(const TrainConfig& cfg);
std::uint64_t hash_params(Model& model);

// ---------------------------------------------------------------- reports

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double lr = 0.0;
    double wall_time = 0.0;  // seconds spent in this epoch
};

struct RunSummary {
    double best_val_acc = 0.0;
    double first_val_acc = 0.0;
    double val_acc_variance = 0.0;  // sample variance over the last 10 epochs
    double final_val_acc = 0.0;
    double final_val_loss = 0.0;
    double final_train_acc = 0.0;
    double final_train_loss = 0.0;
};

struct RunReport {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string loss_name;
    std::string dataset_name;
    std::string model;
    std::size_t param_count = 0;
    std::size_t train_size = 0;
    std::size_t val_size = 0;
    std::uint64_t init_param_hash = 0;  // parameters right after initialization
    std::uint64_t data_order_hash = 0;  // every batch permutation, all epochs
    bool augmented = false;             // no augmentation pipeline exists; recorded explicitly
    std::vector<EpochRecord> epochs;
    RunSummary summary;
    double wall_time_seconds = 0.0;
};

RunSummary mean_summary(const std::vector<RunReport>& runs);

// ---------------------------------------------------------------- training

struct EvalResult {
    double loss = 0.0;
    double acc = 0.0;
};

// Eval-mode batched pass; accuracy is top-1 argmax, ties to the lowest index.
EvalResult evaluate(Model& model, const Dataset& ds, const Loss& loss,
                    std::size_t batch_size = 256);

// One seeded run: shuffled mini-batch training with per-epoch eval-mode
// validation. Throws on non-finite loss, naming the epoch and batch.
RunReport train(const TrainConfig& cfg);

struct RepeatedRun {
    std::vector<RunReport> runs;  // seeds cfg.seed + r
    RunSummary mean;
};

RepeatedRun train_repeated(const TrainConfig& cfg);

// ---------------------------------------------------------------- compare

struct CompareEntry {
    LossSpec loss;
    std::string loss_name;
    std::vector<RunReport> runs;
    RunSummary mean;
    std::string error;  // nonempty when this entry's training aborted
};

// Trains once per loss with identical seed, model init, and data order;
// a failing entry records its error without aborting the siblings.
std::vector<CompareEntry> compare(const TrainConfig& base, const std::vector<LossSpec>& losses);
std::string compare_table(const std::vector<CompareEntry>& entries);

// ---------------------------------------------------------------- sweep

struct SweepRow {
    double a = 0.0;
    bool flagged = false;  // a > 0.5: outside the recommended operating range
    RunSummary mean;
    std::string error;
};

struct SweepResult {
    double best_a = 0.0;
    double best_val_acc = 0.0;
    std::vector<SweepRow> rows;
};

// Trains per scaling factor with a shared seed; best row by val accuracy,
// lowest a on ties.
SweepResult sweep_a(const TrainConfig& base, const std::vector<double>& a_values);

// ---------------------------------------------------------------- gradcheck

struct GradcheckRow {
    std::string model;
    std::string loss_name;
    double max_rel_err = 0.0;
    double mean_rel_err = 0.0;
};

struct GradcheckReport {
    std::vector<GradcheckRow> rows;
    double worst = 0.0;
    bool pass = true;  // max over every row <= 1e-4
};

// Central differences (h) against the analytic gradient over every
// parameter of one model/loss pair on a fixed batch.
GradcheckRow gradcheck_model(Model& model, const std::string& desc, const Loss& loss,
                             const Tensor& inputs, const Tensor& labels, double h = 1e-6);

// Fixed suite of small dense/conv models crossed with all four losses.
GradcheckReport gradcheck(std::uint64_t seed);

// ---------------------------------------------------------------- curves

struct CurveEmission {
    CurveTable table;
    double closest_a = 0.0;  // a minimizing max deviation from max-normalized cce
    std::string path;
};

CurveEmission emit_curves(const std::vector<double>& a_values, const CurveGrid& grid,
                          const std::string& out_path);

struct ConvexityRow {
    double a = 0.0;
    bool is_convex = false;
    std::optional<double> first_violation;
};

std::vector<ConvexityRow> probe_convexity_cli(const std::vector<double>& a_values,
                                              const std::string& out_path);

// ---------------------------------------------------------------- persistence

// Shortest round-trip decimal form; keeps tabular output byte-stable.
std::string format_double(double v);

void write_metrics_csv(const std::string& path, const RunReport& report);
std::string metrics_csv_text(const RunReport& report);

nlohmann::json report_to_json(const RunReport& report);
nlohmann::json summary_to_json(const RunSummary& summary);
void write_report_json(const std::string& path, const TrainConfig& cfg,
                       const std::vector<RunReport>& runs, const RunSummary& mean);

std::string curves_csv_text(const CurveTable& table);

}  // namespace adma::harness
