#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adma/harness.hpp"

using namespace adma;
using namespace adma::harness;

namespace {

namespace fs = std::filesystem;

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.dataset.kind = "blobs";
    cfg.dataset.classes = 3;
    cfg.dataset.dims = 2;
    cfg.dataset.per_class = 40;
    cfg.dataset.spread = 0.1;
    cfg.dataset.seed = 7;
    cfg.model.kind = "logistic";
    cfg.loss = LossSpec{"adma", 0.3, Loss::kDefaultEpsilon};
    cfg.optimizer.kind = "adam";
    cfg.optimizer.lr = 0.01;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.seed = 1;
    cfg.split = 0.8;
    return cfg;
}

// frozen from a one-off calibration sweep; the interior optimum separates
// from both grid ends by three validation samples
TrainConfig sweep_fixture() {
    TrainConfig cfg;
    cfg.dataset.kind = "blobs";
    cfg.dataset.classes = 4;
    cfg.dataset.dims = 2;
    cfg.dataset.per_class = 80;
    cfg.dataset.spread = 0.22;
    cfg.dataset.seed = 7;
    cfg.model.kind = "logistic";
    cfg.optimizer.kind = "sgd";
    cfg.optimizer.lr = 2.0;
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.seed = 1;
    cfg.split = 0.8;
    return cfg;
}

std::string tmp_file(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("config json round-trips every field") {
    TrainConfig cfg = tiny_config();
    cfg.model.kind = "mlp";
    cfg.model.hidden = {32, 16};
    cfg.model.dropout = 0.1;
    cfg.schedule.kind = "step_decay";
    cfg.schedule.factor = 0.25;
    cfg.schedule.every_n_epochs = 5;
    cfg.weight_decay = 1e-4;
    cfg.repeats = 2;
    cfg.dataset.limit = 100;

    const nlohmann::json j = to_json(cfg);
    const TrainConfig back = config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("config parsing rejects unknown keys") {
    nlohmann::json j = to_json(tiny_config());
    j["lerning_rate"] = 0.1;
    try {
        config_from_json(j);
        FAIL("expected a throw");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("lerning_rate") != std::string::npos);
    }

    nlohmann::json j2 = to_json(tiny_config());
    j2["dataset"]["sped"] = 0.5;
    try {
        config_from_json(j2);
        FAIL("expected a throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sped") != std::string::npos);
        CHECK(msg.find("dataset") != std::string::npos);
    }
}

TEST_CASE("config hash tracks meaningful changes only") {
    const TrainConfig a = tiny_config();
    TrainConfig b = tiny_config();
    CHECK(config_hash(a) == config_hash(b));
    b.optimizer.lr = 0.02;
    CHECK(config_hash(a) != config_hash(b));
    TrainConfig c = tiny_config();
    c.seed = 2;
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("training is bitwise reproducible for a fixed config") {
    const TrainConfig cfg = tiny_config();
    const RunReport r1 = train(cfg);
    const RunReport r2 = train(cfg);

    CHECK(metrics_csv_text(r1) == metrics_csv_text(r2));
    CHECK(r1.init_param_hash == r2.init_param_hash);
    CHECK(r1.data_order_hash == r2.data_order_hash);
    CHECK(r1.summary.final_val_acc == r2.summary.final_val_acc);
    CHECK(r1.summary.final_train_loss == r2.summary.final_train_loss);

    CHECK(r1.dataset_name == "blobs");
    CHECK(r1.model == "logistic");
    CHECK(r1.param_count == 9);  // 2x3 weights + 3 biases
    CHECK(r1.train_size == 96);
    CHECK(r1.val_size == 24);
    CHECK(r1.seed == 1);
    CHECK(!r1.augmented);
    CHECK(r1.epochs.size() == 3);
    CHECK(r1.epochs.front().epoch == 1);
    CHECK(r1.epochs.back().lr == 0.01);
}

TEST_CASE("the training seed moves init and order but not the data") {
    const TrainConfig base = tiny_config();
    TrainConfig other = tiny_config();
    other.seed = 99;
    const RunReport r1 = train(base);
    const RunReport r2 = train(other);
    CHECK(r1.init_param_hash != r2.init_param_hash);
    CHECK(r1.data_order_hash != r2.data_order_hash);
    CHECK(r1.train_size == r2.train_size);  // dataset seed unchanged
    CHECK(r1.val_size == r2.val_size);
    CHECK(r1.config_hash != r2.config_hash);
}

TEST_CASE("zero epochs produce an evaluated but untrained report") {
    TrainConfig cfg = tiny_config();
    cfg.dataset.per_class = 100;
    cfg.epochs = 0;
    const RunReport r = train(cfg);
    CHECK(r.epochs.empty());
    CHECK(r.summary.first_val_acc == r.summary.final_val_acc);
    CHECK(r.summary.best_val_acc == r.summary.final_val_acc);
    CHECK(r.summary.final_val_loss > 0.0);

    // untrained balanced-data accuracy stays within 3 sigma of chance
    const double chance = 1.0 / 3.0;
    const double sigma = std::sqrt(chance * (1.0 - chance) / 60.0);
    CHECK(std::abs(r.summary.final_val_acc - chance) <= 3.0 * sigma);

    const std::string csv = metrics_csv_text(r);
    CHECK(csv == "epoch,train_loss,train_acc,val_loss,val_acc,lr\n");
}

TEST_CASE("repeats run consecutive seeds over one dataset") {
    TrainConfig cfg = tiny_config();
    cfg.repeats = 3;
    const RepeatedRun rep = train_repeated(cfg);
    REQUIRE(rep.runs.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(rep.runs[r].seed == cfg.seed + r);
        CHECK(rep.runs[r].train_size == rep.runs[0].train_size);
    }
    CHECK(rep.runs[0].init_param_hash != rep.runs[1].init_param_hash);
    CHECK(rep.runs[1].init_param_hash != rep.runs[2].init_param_hash);

    const double avg = (rep.runs[0].summary.final_val_acc + rep.runs[1].summary.final_val_acc +
                        rep.runs[2].summary.final_val_acc) /
                       3.0;
    CHECK(rep.mean.final_val_acc == doctest::Approx(avg).epsilon(1e-12));
}

TEST_CASE("compare pins init and data order across losses") {
    const TrainConfig base = tiny_config();
    const auto entries = compare(base, {LossSpec{"adma", 0.26, 1e-7}, LossSpec{"cce", 0.0, 1e-7},
                                        LossSpec{"mse", 0.0, 1e-7}});
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].loss_name == "adma_a0.2600");
    CHECK(entries[1].loss_name == "cce");
    CHECK(entries[2].loss_name == "mse");
    for (const CompareEntry& e : entries) {
        CHECK(e.error.empty());
        REQUIRE(e.runs.size() == 1);
        CHECK(e.runs[0].init_param_hash == entries[0].runs[0].init_param_hash);
        CHECK(e.runs[0].data_order_hash == entries[0].runs[0].data_order_hash);
    }
    const std::string table = compare_table(entries);
    CHECK(table.find("adma_a0.2600") != std::string::npos);
    CHECK(table.find("cce") != std::string::npos);
}

TEST_CASE("identical losses in a comparison give identical runs") {
    const TrainConfig base = tiny_config();
    const auto entries =
        compare(base, {LossSpec{"adma", 0.3, 1e-7}, LossSpec{"adma", 0.3, 1e-7}});
    REQUIRE(entries.size() == 2);
    CHECK(metrics_csv_text(entries[0].runs[0]) == metrics_csv_text(entries[1].runs[0]));
    CHECK(entries[0].mean.final_val_acc == entries[1].mean.final_val_acc);
}

TEST_CASE("a failing loss does not poison its siblings") {
    const TrainConfig base = tiny_config();
    const auto entries =
        compare(base, {LossSpec{"adma", 0.3, 1e-7}, LossSpec{"focal", 0.0, 1e-7}});
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].error.empty());
    CHECK(entries[0].runs.size() == 1);
    CHECK(!entries[1].error.empty());
    CHECK(entries[1].error.find("focal") != std::string::npos);
    CHECK(entries[1].runs.empty());
}

TEST_CASE("adma and cce converge together on easy blobs") {
    TrainConfig cfg = tiny_config();
    cfg.dataset.per_class = 100;
    cfg.optimizer.lr = 0.05;
    cfg.epochs = 40;
    cfg.batch_size = 32;
    const auto entries =
        compare(cfg, {LossSpec{"adma", 0.26, 1e-7}, LossSpec{"cce", 0.0, 1e-7}});
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].error.empty());
    CHECK(entries[1].error.empty());
    CHECK(entries[0].mean.final_val_acc >= 0.9);
    CHECK(entries[1].mean.final_val_acc >= 0.9);
    CHECK(std::abs(entries[0].mean.final_val_acc - entries[1].mean.final_val_acc) <= 0.02);
}

TEST_CASE("sweep returns a single element unchanged") {
    const SweepResult res = sweep_a(tiny_config(), {0.3});
    REQUIRE(res.rows.size() == 1);
    CHECK(res.best_a == 0.3);
    CHECK(res.rows[0].a == 0.3);
    CHECK(!res.rows[0].flagged);
    CHECK(res.best_val_acc == res.rows[0].mean.best_val_acc);
}

TEST_CASE("sweep flags factors beyond the recommended range") {
    const SweepResult res = sweep_a(tiny_config(), {0.3, 0.7});
    REQUIRE(res.rows.size() == 2);
    CHECK(!res.rows[0].flagged);
    CHECK(res.rows[1].flagged);
    CHECK(res.rows[1].error.empty());  // flagged is a warning, not a failure
}

TEST_CASE("sweep validates the factor list") {
    CHECK_THROWS_AS(sweep_a(tiny_config(), {}), std::invalid_argument);
    CHECK_THROWS_AS(sweep_a(tiny_config(), {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(sweep_a(tiny_config(), {-0.2}), std::invalid_argument);
    CHECK_THROWS_AS(sweep_a(tiny_config(), {1.5}), std::invalid_argument);
}

TEST_CASE("sweep lands on an interior optimum for the calibrated fixture") {
    const std::vector<double> grid{0.1, 0.2, 0.26, 0.3, 0.4, 0.5};
    const SweepResult res = sweep_a(sweep_fixture(), grid);
    REQUIRE(res.rows.size() == grid.size());
    CHECK(res.best_a == 0.4);
    CHECK(res.best_a != grid.front());
    CHECK(res.best_a != grid.back());
    CHECK(res.best_val_acc == doctest::Approx(45.0 / 64.0).epsilon(1e-12));

    // the reported best must follow the argmax / lowest-on-tie rule
    double want_a = res.rows[0].a, want_acc = res.rows[0].mean.best_val_acc;
    for (const SweepRow& row : res.rows) {
        if (row.mean.best_val_acc > want_acc) {
            want_acc = row.mean.best_val_acc;
            want_a = row.a;
        }
    }
    CHECK(res.best_a == want_a);
    CHECK(res.best_val_acc == want_acc);
}

TEST_CASE("gradcheck passes across the model zoo") {
    const GradcheckReport rep = gradcheck(3);
    CHECK(rep.pass);
    CHECK(rep.worst <= 1e-4);
    CHECK(rep.rows.size() >= 12);  // at least 3 models x 4 losses
    bool saw_dense_adma = false, saw_dense_cce = false;
    for (const GradcheckRow& row : rep.rows) {
        CHECK(row.max_rel_err >= row.mean_rel_err);
        CHECK(row.max_rel_err <= rep.worst);
        if (row.model == "dense+softmax") {
            if (row.loss_name.rfind("adma", 0) == 0) {
                saw_dense_adma = true;
                CHECK(row.max_rel_err < 1e-5);
            }
            if (row.loss_name == "cce") {
                saw_dense_cce = true;
                CHECK(row.max_rel_err < 1e-5);
            }
        }
    }
    CHECK(saw_dense_adma);
    CHECK(saw_dense_cce);
}

TEST_CASE("a frozen model rechecks to identical errors") {
    Rng data_rng(17);
    Model model = build_mlp(4, {}, 3, Activation::elu, 0.0, 23);
    Tensor x({6, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = data_rng.uniform();
    Tensor y({6, 3});
    for (std::size_t r = 0; r < 6; ++r) y(r, data_rng.below(3)) = 1.0;
    const Loss loss = Loss::adma(0.3);

    const GradcheckRow before = gradcheck_model(model, "dense+softmax", loss, x, y);

    Optimizer opt({.kind = OptimKind::sgd, .lr = 0.1});
    for (int step = 0; step < 10; ++step) {
        model.zero_grads();  // zero gradients: parameters must not drift
        opt.apply_update(model.parameters());
    }
    const GradcheckRow after = gradcheck_model(model, "dense+softmax", loss, x, y);
    CHECK(before.max_rel_err == after.max_rel_err);
    CHECK(before.mean_rel_err == after.mean_rel_err);
}

TEST_CASE("curve emission has the documented arity and bounds") {
    const std::string path = tmp_file("curves_test.csv");
    const CurveEmission em = emit_curves({0.1, 0.26, 0.5}, CurveGrid{1e-7, 1.0, 128}, path);

    REQUIRE(em.table.columns.size() == 6);
    const std::string csv = curves_csv_text(em.table);
    CHECK(csv.rfind("p,adma_a0.1000,adma_a0.2600,adma_a0.5000,cce,mse,squared_hinge\n", 0) == 0);
    CHECK(em.table.rows.size() == 128);

    double cce_max = 0.0;
    for (const CurveSample& row : em.table.rows) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(row.values[c] >= 0.0);
            CHECK(row.values[c] <= kEulerE - 1.0);
        }
        cce_max = std::max(cce_max, row.values[3]);
    }
    CHECK(cce_max > kEulerE - 1.0);  // unbounded growth toward the grid floor

    // independently recompute the closest-shape pick
    const std::size_t cce_col = 3;
    double best_dev = 0.0, best_a = 0.0;
    for (std::size_t ai = 0; ai < 3; ++ai) {
        double a_max = 0.0;
        for (const CurveSample& row : em.table.rows) a_max = std::max(a_max, row.values[ai]);
        double dev = 0.0;
        for (const CurveSample& row : em.table.rows) {
            dev = std::max(dev, std::abs(row.values[ai] / a_max - row.values[cce_col] / cce_max));
        }
        if (ai == 0 || dev < best_dev) {
            best_dev = dev;
            best_a = std::vector<double>{0.1, 0.26, 0.5}[ai];
        }
    }
    CHECK(em.closest_a == best_a);

    std::ifstream is(path);
    REQUIRE(is.good());
    std::stringstream buf;
    buf << is.rdbuf();
    CHECK(buf.str() == csv);
    fs::remove(path);
}

TEST_CASE("curve emission refuses an unwritable path") {
    CHECK_THROWS_AS(emit_curves({0.26}, CurveGrid{0.0, 1.0, 16}, "/nonexistent_dir_xyz/c.csv"),
                    std::runtime_error);
    CHECK_THROWS_AS(emit_curves({}, CurveGrid{0.0, 1.0, 16}, ""), std::invalid_argument);
}

TEST_CASE("convexity table matches the probe") {
    const std::string path = tmp_file("convexity_test.csv");
    const auto rows = probe_convexity_cli({0.1, 0.5, 0.7}, path);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].is_convex);
    CHECK(rows[1].is_convex);
    CHECK(!rows[2].is_convex);
    CHECK(!rows[0].first_violation.has_value());
    REQUIRE(rows[2].first_violation.has_value());
    CHECK(*rows[2].first_violation == doctest::Approx(0.2987).epsilon(0.02));

    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "a,is_convex,first_violation");
    fs::remove(path);
}

TEST_CASE("metrics files keep the pinned byte layout") {
    const std::string path = tmp_file("metrics_test.csv");
    const RunReport r = train(tiny_config());
    const std::string text = metrics_csv_text(r);

    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "epoch,train_loss,train_acc,val_loss,val_acc,lr");
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(line.rfind(std::to_string(rows) + ",", 0) == 0);
        CHECK(std::count(line.begin(), line.end(), ',') == 5);
    }
    CHECK(rows == 3);
    CHECK(text.find("wall") == std::string::npos);  // wall time lives in the json report only

    write_metrics_csv(path, r);
    std::ifstream is(path);
    std::stringstream buf;
    buf << is.rdbuf();
    CHECK(buf.str() == text);
    fs::remove(path);
}

TEST_CASE("report json carries hashes, flags, and summaries") {
    const RunReport r = train(tiny_config());
    const nlohmann::json j = report_to_json(r);
    CHECK(j["config_hash"].get<std::string>().size() == 16);
    CHECK(j["init_param_hash"].get<std::string>().size() == 16);
    CHECK(j["augmented"] == false);
    CHECK(j["loss"] == "adma_a0.3000");
    CHECK(j["dataset"] == "blobs");
    CHECK(j["epochs"].size() == 3);
    CHECK(j["epochs"][0].contains("wall_time"));
    CHECK(j["summary"].contains("best_val_acc"));
    CHECK(j["summary"].contains("val_acc_variance"));

    const std::string path = tmp_file("report_test.json");
    write_report_json(path, tiny_config(), {r}, r.summary);
    std::ifstream is(path);
    const nlohmann::json doc = nlohmann::json::parse(is);
    CHECK(doc.contains("config"));
    CHECK(doc.contains("config_hash"));
    CHECK(doc["runs"].size() == 1);
    CHECK(doc.contains("mean_summary"));
    CHECK(doc["config"]["seed"] == 1);
    fs::remove(path);
}

TEST_CASE("format_double round-trips shortest decimal forms") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.703125) == "0.703125");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("exploding learning rates abort with epoch and batch context") {
    TrainConfig cfg = tiny_config();
    cfg.optimizer.lr = 1e308;  // adam steps by ~lr, so logits overflow within a few batches
    try {
        train(cfg);
        FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("non-finite training loss") != std::string::npos);
        CHECK(msg.find("epoch 1, batch ") != std::string::npos);
        CHECK(msg.find("adma_a0.3000") != std::string::npos);
    }
}

TEST_CASE("evaluation is independent of the batch partition") {
    const Dataset ds = synth_blobs(3, 2, 30, 0.1, 4);
    Model model = build_mlp(2, {}, 3, Activation::elu, 0.0, 6);
    const Loss loss = Loss::adma(0.26);
    const EvalResult whole = evaluate(model, ds, loss, 256);
    const EvalResult parts = evaluate(model, ds, loss, 7);
    CHECK(whole.acc == parts.acc);
    CHECK(whole.loss == doctest::Approx(parts.loss).epsilon(1e-12));
}

TEST_CASE("the digit surrogate trains through the harness") {
    TrainConfig cfg = tiny_config();
    cfg.dataset.kind = "digits";
    cfg.dataset.per_class = 6;
    cfg.epochs = 1;
    const RunReport r = train(cfg);
    CHECK(r.dataset_name == "digits");
    CHECK(r.param_count == 7850);  // 784x10 + 10
    CHECK(r.train_size + r.val_size == 60);
}

TEST_CASE("unknown config kinds fail with a clear message") {
    TrainConfig cfg = tiny_config();
    cfg.optimizer.kind = "rmsprop";
    CHECK_THROWS_AS(train(cfg), std::invalid_argument);
    TrainConfig cfg2 = tiny_config();
    cfg2.model.kind = "transformer";
    CHECK_THROWS_AS(train(cfg2), std::invalid_argument);
    TrainConfig cfg3 = tiny_config();
    cfg3.dataset.kind = "cifar";
    CHECK_THROWS_AS(train(cfg3), std::invalid_argument);
    TrainConfig cfg4 = tiny_config();
    cfg4.schedule.kind = "cosine";
    CHECK_THROWS_AS(train(cfg4), std::invalid_argument);
}
