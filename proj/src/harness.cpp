#include "adma/harness.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace adma::harness {

using nlohmann::json;

namespace {

// rng stream tags so init, shuffling, and data generation never overlap
constexpr std::uint64_t kInitStream = 0x494E4954ULL;
constexpr std::uint64_t kShuffleStream = 0x53485546ULL;

double now_seconds() {
    const auto t = std::chrono::steady_clock::now().time_since_epoch();
    return std::chrono::duration<double>(t).count();
}

void require_keys(const json& j, const char* where, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw std::invalid_argument(std::string("unknown config key '") + key + "' in " +
                                        where);
        }
    }
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

// ---------------------------------------------------------------- config json

json to_json(const TrainConfig& cfg) {
    json d{{"kind", cfg.dataset.kind},     {"dir", cfg.dataset.dir},
           {"images", cfg.dataset.images}, {"labels", cfg.dataset.labels},
           {"classes", cfg.dataset.classes}, {"dims", cfg.dataset.dims},
           {"per_class", cfg.dataset.per_class}, {"spread", cfg.dataset.spread},
           {"seed", cfg.dataset.seed},     {"limit", cfg.dataset.limit}};
    json m{{"kind", cfg.model.kind},
           {"hidden", cfg.model.hidden},
           {"activation", cfg.model.activation},
           {"dropout", cfg.model.dropout},
           {"base_channels", cfg.model.base_channels}};
    json l{{"kind", cfg.loss.kind}, {"a", cfg.loss.a}, {"epsilon", cfg.loss.epsilon}};
    json o{{"kind", cfg.optimizer.kind},   {"lr", cfg.optimizer.lr},
           {"momentum", cfg.optimizer.momentum}, {"nesterov", cfg.optimizer.nesterov},
           {"beta1", cfg.optimizer.beta1}, {"beta2", cfg.optimizer.beta2},
           {"eps_hat", cfg.optimizer.eps_hat}};
    json s{{"kind", cfg.schedule.kind},
           {"factor", cfg.schedule.factor},
           {"every_n_epochs", cfg.schedule.every_n_epochs}};
    return json{{"dataset", d},
                {"model", m},
                {"loss", l},
                {"optimizer", o},
                {"schedule", s},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"seed", cfg.seed},
                {"weight_decay", cfg.weight_decay},
                {"split", cfg.split},
                {"stratified", cfg.stratified},
                {"repeats", cfg.repeats}};
}

TrainConfig config_from_json(const json& j) {
    require_keys(j, "config root",
                 {"dataset", "model", "loss", "optimizer", "schedule", "epochs", "batch_size",
                  "seed", "weight_decay", "split", "stratified", "repeats"});
    TrainConfig cfg;
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        require_keys(d, "dataset", {"kind", "dir", "images", "labels", "classes", "dims",
                                    "per_class", "spread", "seed", "limit"});
        maybe(d, "kind", cfg.dataset.kind);
        maybe(d, "dir", cfg.dataset.dir);
        maybe(d, "images", cfg.dataset.images);
        maybe(d, "labels", cfg.dataset.labels);
        maybe(d, "classes", cfg.dataset.classes);
        maybe(d, "dims", cfg.dataset.dims);
        maybe(d, "per_class", cfg.dataset.per_class);
        maybe(d, "spread", cfg.dataset.spread);
        maybe(d, "seed", cfg.dataset.seed);
        maybe(d, "limit", cfg.dataset.limit);
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        require_keys(m, "model", {"kind", "hidden", "activation", "dropout", "base_channels"});
        maybe(m, "kind", cfg.model.kind);
        maybe(m, "hidden", cfg.model.hidden);
        maybe(m, "activation", cfg.model.activation);
        maybe(m, "dropout", cfg.model.dropout);
        maybe(m, "base_channels", cfg.model.base_channels);
    }
    if (j.contains("loss")) {
        const json& l = j.at("loss");
        require_keys(l, "loss", {"kind", "a", "epsilon"});
        maybe(l, "kind", cfg.loss.kind);
        maybe(l, "a", cfg.loss.a);
        maybe(l, "epsilon", cfg.loss.epsilon);
    }
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        require_keys(o, "optimizer",
                     {"kind", "lr", "momentum", "nesterov", "beta1", "beta2", "eps_hat"});
        maybe(o, "kind", cfg.optimizer.kind);
        maybe(o, "lr", cfg.optimizer.lr);
        maybe(o, "momentum", cfg.optimizer.momentum);
        maybe(o, "nesterov", cfg.optimizer.nesterov);
        maybe(o, "beta1", cfg.optimizer.beta1);
        maybe(o, "beta2", cfg.optimizer.beta2);
        maybe(o, "eps_hat", cfg.optimizer.eps_hat);
    }
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        require_keys(s, "schedule", {"kind", "factor", "every_n_epochs"});
        maybe(s, "kind", cfg.schedule.kind);
        maybe(s, "factor", cfg.schedule.factor);
        maybe(s, "every_n_epochs", cfg.schedule.every_n_epochs);
    }
    maybe(j, "epochs", cfg.epochs);
    maybe(j, "batch_size", cfg.batch_size);
    maybe(j, "seed", cfg.seed);
    maybe(j, "weight_decay", cfg.weight_decay);
    maybe(j, "split", cfg.split);
    maybe(j, "stratified", cfg.stratified);
    maybe(j, "repeats", cfg.repeats);
    return cfg;
}

// ---------------------------------------------------------------- factories

Loss make_loss(const LossSpec& spec) {
    if (spec.kind == "adma") return Loss::adma(spec.a, spec.epsilon);
    if (spec.kind == "cce") return Loss::cce(spec.epsilon);
    if (spec.kind == "mse") return Loss::mse();
    if (spec.kind == "squared_hinge") return Loss::squared_hinge();
    throw std::invalid_argument("unknown loss kind '" + spec.kind + "'");
}

Dataset make_dataset(const DatasetSpec& spec) {
    namespace fs = std::filesystem;
    Dataset ds;
    if (spec.kind == "blobs") {
        ds = synth_blobs(spec.classes, spec.dims, spec.per_class, spec.spread, spec.seed);
    } else if (spec.kind == "digits") {
        ds = synth_digits(spec.per_class, spec.seed);
    } else if (spec.kind == "idx") {
        ds = load_idx(spec.images, spec.labels);
    } else if (spec.kind == "mnist" || spec.kind == "fashion_mnist") {
        if (spec.dir.empty()) {
            throw std::invalid_argument("dataset kind '" + spec.kind + "' needs dir");
        }
        const fs::path dir(spec.dir);
        ds = load_idx((dir / "train-images-idx3-ubyte").string(),
                      (dir / "train-labels-idx1-ubyte").string());
        ds.name = spec.kind;
    } else {
        throw std::invalid_argument("unknown dataset kind '" + spec.kind + "'");
    }
    return stratified_head(ds, spec.limit);
}

Model build_model(const ModelSpec& spec, const Dataset& ds, std::uint64_t seed) {
    if (spec.kind == "mlp" || spec.kind == "logistic") {
        const std::vector<std::size_t> hidden =
            spec.kind == "logistic" ? std::vector<std::size_t>{} : spec.hidden;
        return build_mlp(ds.feature_size(), hidden, ds.class_count,
                         activation_from_name(spec.activation), spec.dropout, seed);
    }
    if (spec.kind == "convnet") {
        if (ds.inputs.rank() != 4) {
            throw std::invalid_argument("convnet needs image inputs, dataset is " +
                                        shape_str(ds.inputs.shape()));
        }
        ConvNetSpec cs;
        cs.height = ds.inputs.dim(1);
        cs.width = ds.inputs.dim(2);
        cs.channels = ds.inputs.dim(3);
        cs.base_channels = spec.base_channels;
        cs.classes = ds.class_count;
        cs.dropout = spec.dropout;
        return build_convnet(cs, seed);
    }
    throw std::invalid_argument("unknown model kind '" + spec.kind + "'");
}

std::string model_desc(const ModelSpec& spec) {
    if (spec.kind == "logistic") return "logistic";
    if (spec.kind == "convnet") {
        return "convnet(base=" + std::to_string(spec.base_channels) + ")";
    }
    std::string s = "mlp[";
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(spec.hidden[i]);
    }
    return s + "]/" + spec.activation;
}

// ---------------------------------------------------------------- hashing

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a64_f64(double v, std::uint64_t h) {
    return fnv1a64_u64(std::bit_cast<std::uint64_t>(v), h);
}

std::uint64_t config_hash(const TrainConfig& cfg) { return fnv1a64(to_json(cfg).dump()); }

std::uint64_t hash_params(Model& model) {
    std::uint64_t h = kFnvOffset;
    for (const ParamRef& p : model.parameters()) {
        for (std::size_t i = 0; i < p.value->size(); ++i) h = fnv1a64_f64((*p.value)[i], h);
    }
    return h;
}

// ---------------------------------------------------------------- metrics

namespace {

std::size_t count_correct(const Tensor& pred, const Tensor& labels) {
    const std::size_t rows = pred.dim(0), cols = pred.dim(1);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* p = pred.data() + r * cols;
        const double* y = labels.data() + r * cols;
        std::size_t pi = 0, yi = 0;
        for (std::size_t c = 1; c < cols; ++c) {
            if (p[c] > p[pi]) pi = c;  // ties keep the lowest index
            if (y[c] > y[yi]) yi = c;
        }
        if (pi == yi) ++correct;
    }
    return correct;
}

RunSummary summarize(const std::vector<EpochRecord>& records) {
    RunSummary s;
    if (records.empty()) return s;
    s.first_val_acc = records.front().val_acc;
    s.best_val_acc = records.front().val_acc;
    for (const auto& r : records) s.best_val_acc = std::max(s.best_val_acc, r.val_acc);
    s.final_val_acc = records.back().val_acc;
    s.final_val_loss = records.back().val_loss;
    s.final_train_acc = records.back().train_acc;
    s.final_train_loss = records.back().train_loss;

    const std::size_t k = std::min<std::size_t>(10, records.size());
    if (k >= 2) {
        double mean = 0.0;
        for (std::size_t i = records.size() - k; i < records.size(); ++i) {
            mean += records[i].val_acc;
        }
        mean /= static_cast<double>(k);
        double ss = 0.0;
        for (std::size_t i = records.size() - k; i < records.size(); ++i) {
            const double d = records[i].val_acc - mean;
            ss += d * d;
        }
        s.val_acc_variance = ss / static_cast<double>(k - 1);
    }
    return s;
}

}  // namespace

RunSummary mean_summary(const std::vector<RunReport>& runs) {
    RunSummary m;
    if (runs.empty()) return m;
    for (const RunReport& r : runs) {
        m.best_val_acc += r.summary.best_val_acc;
        m.first_val_acc += r.summary.first_val_acc;
        m.val_acc_variance += r.summary.val_acc_variance;
        m.final_val_acc += r.summary.final_val_acc;
        m.final_val_loss += r.summary.final_val_loss;
        m.final_train_acc += r.summary.final_train_acc;
        m.final_train_loss += r.summary.final_train_loss;
    }
    const auto n = static_cast<double>(runs.size());
    m.best_val_acc /= n;
    m.first_val_acc /= n;
    m.val_acc_variance /= n;
    m.final_val_acc /= n;
    m.final_val_loss /= n;
    m.final_train_acc /= n;
    m.final_train_loss /= n;
    return m;
}

// ---------------------------------------------------------------- training

EvalResult evaluate(Model& model, const Dataset& ds, const Loss& loss, std::size_t batch_size) {
    model.train_mode(false);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& idx : batch_indices(ds.size(), batch_size, 0, 0, false)) {
        Dataset part = gather(ds, idx);
        const Tensor pred = model.forward(part.inputs);
        loss_sum += loss.batch_value(pred, part.labels) * static_cast<double>(idx.size());
        correct += count_correct(pred, part.labels);
    }
    const auto n = static_cast<double>(ds.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

RunReport train(const TrainConfig& cfg) {
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    const double t_start = now_seconds();

    const Dataset full = make_dataset(cfg.dataset);
    auto [train_ds, val_ds] =
        split(full, SplitSpec{cfg.split, cfg.dataset.seed, cfg.stratified});

    const Loss loss = make_loss(cfg.loss);
    Model model = build_model(cfg.model, full, mix_seed(cfg.seed, kInitStream));

    OptimizerConfig oc;
    oc.kind = cfg.optimizer.kind == "adam" ? OptimKind::adam : OptimKind::sgd;
    if (cfg.optimizer.kind != "adam" && cfg.optimizer.kind != "sgd") {
        throw std::invalid_argument("unknown optimizer kind '" + cfg.optimizer.kind + "'");
    }
    oc.lr = cfg.optimizer.lr;
    oc.momentum = cfg.optimizer.momentum;
    oc.nesterov = cfg.optimizer.nesterov;
    oc.beta1 = cfg.optimizer.beta1;
    oc.beta2 = cfg.optimizer.beta2;
    oc.eps_hat = cfg.optimizer.eps_hat;
    oc.weight_decay = cfg.weight_decay;
    Optimizer opt(oc);

    LrSchedule sched;
    sched.kind = cfg.schedule.kind == "step_decay" ? LrSchedule::Kind::step_decay
                                                   : LrSchedule::Kind::constant;
    if (cfg.schedule.kind != "step_decay" && cfg.schedule.kind != "constant") {
        throw std::invalid_argument("unknown schedule kind '" + cfg.schedule.kind + "'");
    }
    sched.base_lr = cfg.optimizer.lr;
    sched.factor = cfg.schedule.factor;
    sched.every_n_epochs = cfg.schedule.every_n_epochs;

    RunReport report;
    report.config_hash = config_hash(cfg);
    report.seed = cfg.seed;
    report.loss_name = loss.name();
    report.dataset_name = full.name;
    report.model = model_desc(cfg.model);
    report.param_count = model.parameter_count();
    report.train_size = train_ds.size();
    report.val_size = val_ds.size();
    report.init_param_hash = hash_params(model);

    const auto params = model.parameters();
    std::uint64_t order_hash = kFnvOffset;
    const std::uint64_t shuffle_seed = mix_seed(cfg.seed, kShuffleStream);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double t_epoch = now_seconds();
        const double lr = lr_at(sched, static_cast<int>(epoch));
        opt.set_lr(lr);

        const auto blocks =
            batch_indices(train_ds.size(), cfg.batch_size, shuffle_seed, epoch, true);
        for (const auto& block : blocks) {
            for (const std::size_t i : block) order_hash = fnv1a64_u64(i, order_hash);
        }

        model.train_mode(true);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            Dataset part = gather(train_ds, blocks[b]);
            const Tensor pred = model.forward(part.inputs);
            const double batch_loss =
                pred.all_finite() ? loss.batch_value(pred, part.labels)
                                  : std::numeric_limits<double>::quiet_NaN();
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error(
                    "non-finite training loss at epoch " + std::to_string(epoch + 1) +
                    ", batch " + std::to_string(b + 1) + " under " + loss.name() +
                    "; lower the learning rate or check the inputs");
            }
            loss_sum += batch_loss * static_cast<double>(blocks[b].size());
            correct += count_correct(pred, part.labels);

            model.zero_grads();
            model.backward(loss.batch_grad(pred, part.labels));
            opt.apply_update(params);
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = loss_sum / static_cast<double>(train_ds.size());
        rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_ds.size());
        const EvalResult ev = evaluate(model, val_ds, loss);
        rec.val_loss = ev.loss;
        rec.val_acc = ev.acc;
        rec.lr = lr;
        rec.wall_time = now_seconds() - t_epoch;
        report.epochs.push_back(rec);
    }

    report.data_order_hash = order_hash;
    if (cfg.epochs == 0) {
        // summary falls back to a single untrained evaluation
        const EvalResult ev = evaluate(model, val_ds, loss);
        report.summary.best_val_acc = ev.acc;
        report.summary.first_val_acc = ev.acc;
        report.summary.final_val_acc = ev.acc;
        report.summary.final_val_loss = ev.loss;
    } else {
        report.summary = summarize(report.epochs);
    }
    report.wall_time_seconds = now_seconds() - t_start;
    return report;
}

RepeatedRun train_repeated(const TrainConfig& cfg) {
    if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    RepeatedRun out;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        TrainConfig one = cfg;
        one.seed = cfg.seed + r;
        one.repeats = 1;
        out.runs.push_back(train(one));
    }
    out.mean = mean_summary(out.runs);
    return out;
}

// ---------------------------------------------------------------- compare

std::vector<CompareEntry> compare(const TrainConfig& base, const std::vector<LossSpec>& losses) {
    if (losses.size() < 2) throw std::invalid_argument("compare needs at least 2 losses");
    std::vector<CompareEntry> entries;
    for (const LossSpec& ls : losses) {
        CompareEntry e;
        e.loss = ls;
        e.loss_name = ls.kind;  // refined below once the kind parses
        TrainConfig cfg = base;
        cfg.loss = ls;
        try {
            e.loss_name = make_loss(ls).name();
            RepeatedRun rr = train_repeated(cfg);
            e.runs = std::move(rr.runs);
            e.mean = rr.mean;
        } catch (const std::exception& ex) {
            e.error = ex.what();  // siblings keep running
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::string compare_table(const std::vector<CompareEntry>& entries) {
    std::ostringstream os;
    os << "loss                 final_acc  first_acc  best_acc   variance\n";
    for (const CompareEntry& e : entries) {
        os << e.loss_name;
        for (std::size_t i = e.loss_name.size(); i < 21; ++i) os << ' ';
        if (!e.error.empty()) {
            os << "error: " << e.error << "\n";
            continue;
        }
        char buf[64];
        auto put = [&](double v) {
            std::snprintf(buf, sizeof(buf), "%-11.4f", v);
            os << buf;
        };
        put(e.mean.final_val_acc);
        put(e.mean.first_val_acc);
        put(e.mean.best_val_acc);
        std::snprintf(buf, sizeof(buf), "%.3e", e.mean.val_acc_variance);
        os << buf << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------- sweep

SweepResult sweep_a(const TrainConfig& base, const std::vector<double>& a_values) {
    if (a_values.empty()) throw std::invalid_argument("sweep needs at least one scaling factor");
    for (const double a : a_values) {
        if (!(a > 0.0 && a <= 1.0)) {
            throw std::invalid_argument("scaling factor " + std::to_string(a) +
                                        " outside (0, 1]");
        }
    }
    SweepResult result;
    bool have_best = false;
    for (const double a : a_values) {
        SweepRow row;
        row.a = a;
        row.flagged = AdmaParams{a}.analysis_range();
        TrainConfig cfg = base;
        cfg.loss = LossSpec{"adma", a, base.loss.epsilon};
        try {
            RepeatedRun rr = train_repeated(cfg);
            row.mean = rr.mean;
            if (!have_best || row.mean.best_val_acc > result.best_val_acc) {
                have_best = true;  // strict '>' keeps the lowest a on ties
                result.best_a = a;
                result.best_val_acc = row.mean.best_val_acc;
            }
        } catch (const std::exception& ex) {
            row.error = ex.what();
        }
        result.rows.push_back(std::move(row));
    }
    if (!have_best) throw std::runtime_error("every sweep entry failed");
    return result;
}

// ---------------------------------------------------------------- gradcheck

GradcheckRow gradcheck_model(Model& model, const std::string& desc, const Loss& loss,
                             const Tensor& inputs, const Tensor& labels, double h) {
    model.train_mode(true);
    model.zero_grads();
    const Tensor pred = model.forward(inputs);
    model.backward(loss.batch_grad(pred, labels));

    const auto params = model.parameters();
    double max_rel = 0.0, sum_rel = 0.0;
    std::size_t count = 0;
    for (const ParamRef& p : params) {
        for (std::size_t i = 0; i < p.value->size(); ++i) {
            const double saved = (*p.value)[i];
            (*p.value)[i] = saved + h;
            const double up = loss.batch_value(model.forward(inputs), labels);
            (*p.value)[i] = saved - h;
            const double down = loss.batch_value(model.forward(inputs), labels);
            (*p.value)[i] = saved;

            const double numeric = (up - down) / (2.0 * h);
            const double analytic = (*p.grad)[i];
            const double denom = std::max(std::abs(analytic), std::abs(numeric));
            const double rel = denom < 1e-8 ? 0.0 : std::abs(analytic - numeric) / denom;
            max_rel = std::max(max_rel, rel);
            sum_rel += rel;
            ++count;
        }
    }
    return {desc, loss.name(), max_rel, count ? sum_rel / static_cast<double>(count) : 0.0};
}

GradcheckReport gradcheck(std::uint64_t seed) {
    const std::vector<Loss> losses = {Loss::adma(0.26), Loss::adma(0.3), Loss::cce(),
                                      Loss::mse(), Loss::squared_hinge()};
    GradcheckReport report;

    const Dataset blobs = synth_blobs(3, 4, 4, 0.1, mix_seed(seed, 1));

    // small random image batch: 28x28 finite differences would be slow
    Rng img_rng(mix_seed(seed, 2));
    Tensor images({4, 22, 22, 1});
    for (std::size_t i = 0; i < images.size(); ++i) images[i] = img_rng.uniform();
    Tensor image_labels({4, 3});
    for (std::size_t r = 0; r < 4; ++r) image_labels(r, img_rng.below(3)) = 1.0;

    const auto run = [&](Model& model, const std::string& desc, const Tensor& x,
                         const Tensor& y) {
        for (const Loss& loss : losses) {
            report.rows.push_back(gradcheck_model(model, desc, loss, x, y, 1e-6));
        }
    };

    Model logistic = build_mlp(4, {}, 3, Activation::elu, 0.0, mix_seed(seed, 10));
    run(logistic, "dense+softmax", blobs.inputs, blobs.labels);

    Model mlp = build_mlp(4, {8}, 3, Activation::elu, 0.0, mix_seed(seed, 11));
    run(mlp, "mlp[8]/elu", blobs.inputs, blobs.labels);

    ConvNetSpec cs;
    cs.height = 22;
    cs.width = 22;
    cs.base_channels = 2;
    cs.classes = 3;
    Model convnet = build_convnet(cs, mix_seed(seed, 12));
    run(convnet, "convnet(base=2)", images, image_labels);

    for (const GradcheckRow& row : report.rows) report.worst = std::max(report.worst, row.max_rel_err);
    report.pass = report.worst <= 1e-4;
    return report;
}

// ---------------------------------------------------------------- curves

CurveEmission emit_curves(const std::vector<double>& a_values, const CurveGrid& grid,
                          const std::string& out_path) {
    if (a_values.empty()) throw std::invalid_argument("curves need at least one scaling factor");
    std::vector<Loss> kinds;
    for (const double a : a_values) kinds.push_back(Loss::adma(a));
    kinds.push_back(Loss::cce());
    kinds.push_back(Loss::mse());
    kinds.push_back(Loss::squared_hinge());

    CurveEmission out;
    out.table = curve_sweep(kinds, grid);
    out.path = out_path;

    // closest emulation of the cce shape: compare columns normalized by
    // their own maximum over the grid, score by max absolute deviation
    const std::size_t n_rows = out.table.rows.size();
    const std::size_t cce_col = a_values.size();
    double cce_max = 0.0;
    for (const CurveSample& row : out.table.rows) {
        cce_max = std::max(cce_max, row.values[cce_col]);
    }
    double best_dev = 0.0;
    for (std::size_t ai = 0; ai < a_values.size(); ++ai) {
        double a_max = 0.0;
        for (const CurveSample& row : out.table.rows) a_max = std::max(a_max, row.values[ai]);
        double dev = 0.0;
        for (std::size_t r = 0; r < n_rows; ++r) {
            const double adma_n = out.table.rows[r].values[ai] / a_max;
            const double cce_n = out.table.rows[r].values[cce_col] / cce_max;
            dev = std::max(dev, std::abs(adma_n - cce_n));
        }
        if (ai == 0 || dev < best_dev) {
            best_dev = dev;
            out.closest_a = a_values[ai];
        }
    }

    if (!out_path.empty()) {
        std::ofstream os(out_path);
        if (!os) throw std::runtime_error("cannot write curve file: " + out_path);
        os << curves_csv_text(out.table);
        if (!os) throw std::runtime_error("curve file write failed: " + out_path);
    }
    return out;
}

std::vector<ConvexityRow> probe_convexity_cli(const std::vector<double>& a_values,
                                              const std::string& out_path) {
    std::vector<ConvexityRow> rows;
    const CurveGrid grid{0.01, 1.0, 512};
    for (const double a : a_values) {
        const ConvexityReport rep = convexity_probe(a, grid);
        rows.push_back({a, rep.is_convex, rep.first_violation});
    }
    if (!out_path.empty()) {
        std::ofstream os(out_path);
        if (!os) throw std::runtime_error("cannot write convexity file: " + out_path);
        os << "a,is_convex,first_violation\n";
        for (const ConvexityRow& r : rows) {
            os << format_double(r.a) << ',' << (r.is_convex ? 1 : 0) << ','
               << (r.first_violation ? format_double(*r.first_violation) : std::string()) << "\n";
        }
        if (!os) throw std::runtime_error("convexity file write failed: " + out_path);
    }
    return rows;
}

// ---------------------------------------------------------------- persistence

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string metrics_csv_text(const RunReport& report) {
    // no wall-time column: these bytes must be identical across reruns
    std::string out = "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
    for (const EpochRecord& r : report.epochs) {
        out += std::to_string(r.epoch);
        out += ',';
        out += format_double(r.train_loss);
        out += ',';
        out += format_double(r.train_acc);
        out += ',';
        out += format_double(r.val_loss);
        out += ',';
        out += format_double(r.val_acc);
        out += ',';
        out += format_double(r.lr);
        out += '\n';
    }
    return out;
}

void write_metrics_csv(const std::string& path, const RunReport& report) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write metrics file: " + path);
    os << metrics_csv_text(report);
    if (!os) throw std::runtime_error("metrics file write failed: " + path);
}

json summary_to_json(const RunSummary& s) {
    return {{"best_val_acc", s.best_val_acc},
            {"first_val_acc", s.first_val_acc},
            {"val_acc_variance", s.val_acc_variance},
            {"final_val_acc", s.final_val_acc},
            {"final_val_loss", s.final_val_loss},
            {"final_train_acc", s.final_train_acc},
            {"final_train_loss", s.final_train_loss}};
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

json report_to_json(const RunReport& r) {
    json epochs = json::array();
    for (const EpochRecord& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"train_acc", e.train_acc},
                          {"val_loss", e.val_loss},
                          {"val_acc", e.val_acc},
                          {"lr", e.lr},
                          {"wall_time", e.wall_time}});
    }
    return {{"config_hash", hex64(r.config_hash)},
            {"seed", r.seed},
            {"loss", r.loss_name},
            {"dataset", r.dataset_name},
            {"model", r.model},
            {"param_count", r.param_count},
            {"train_size", r.train_size},
            {"val_size", r.val_size},
            {"init_param_hash", hex64(r.init_param_hash)},
            {"data_order_hash", hex64(r.data_order_hash)},
            {"augmented", r.augmented},
            {"epochs", epochs},
            {"summary", summary_to_json(r.summary)},
            {"wall_time_seconds", r.wall_time_seconds}};
}

void write_report_json(const std::string& path, const TrainConfig& cfg,
                       const std::vector<RunReport>& runs, const RunSummary& mean) {
    json doc;
    doc["config"] = to_json(cfg);
    doc["config_hash"] = hex64(config_hash(cfg));
    doc["runs"] = json::array();
    for (const RunReport& r : runs) doc["runs"].push_back(report_to_json(r));
    doc["mean_summary"] = summary_to_json(mean);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write report file: " + path);
    os << doc.dump(2) << "\n";
    if (!os) throw std::runtime_error("report file write failed: " + path);
}

std::string curves_csv_text(const CurveTable& table) {
    std::string out = "p";
    for (const std::string& c : table.columns) {
        out += ',';
        out += c;
    }
    out += '\n';
    for (const CurveSample& row : table.rows) {
        out += format_double(row.p);
        for (const double v : row.values) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

}  // namespace adma::harness
