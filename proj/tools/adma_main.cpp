#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "adma/harness.hpp"

namespace fs = std::filesystem;
using namespace adma;
using namespace adma::harness;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "runs";
    std::string dataset;
    std::string model;
    std::string loss;
    std::string optimizer;
    std::string data_dir;
    std::vector<std::size_t> hidden;
    double a = 0.26;
    double lr = 1e-3;
    double weight_decay = 0.0;
    double split = 0.8;
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    std::size_t limit = 0;
    std::size_t repeats = 1;
    std::uint64_t seed = 1;

    std::map<std::string, CLI::Option*> opts;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    o.opts["config"] = sub->add_option("--config", o.config_path, "JSON config file");
    o.opts["out-dir"] = sub->add_option("--out-dir", o.out_dir, "output directory");
    o.opts["seed"] = sub->add_option("--seed", o.seed, "training seed");
    o.opts["dataset"] =
        sub->add_option("--dataset", o.dataset, "blobs | digits | mnist | fashion_mnist | idx");
    o.opts["model"] = sub->add_option("--model", o.model, "mlp | logistic | convnet");
    o.opts["hidden"] = sub->add_option("--hidden", o.hidden, "mlp hidden widths");
    o.opts["loss"] = sub->add_option("--loss", o.loss, "adma | cce | mse | squared_hinge");
    o.opts["a"] = sub->add_option("--a", o.a, "Adma scaling factor");
    o.opts["optimizer"] = sub->add_option("--optimizer", o.optimizer, "sgd | adam");
    o.opts["lr"] = sub->add_option("--lr", o.lr, "learning rate");
    o.opts["epochs"] = sub->add_option("--epochs", o.epochs, "training epochs");
    o.opts["batch-size"] = sub->add_option("--batch-size", o.batch_size, "mini-batch size");
    o.opts["weight-decay"] = sub->add_option("--weight-decay", o.weight_decay, "L2 coefficient");
    o.opts["split"] = sub->add_option("--split", o.split, "train fraction in (0,1)");
    o.opts["limit"] = sub->add_option("--limit", o.limit, "stratified sample cap (0 = all)");
    o.opts["repeats"] = sub->add_option("--repeats", o.repeats, "independent seeded runs");
    o.opts["data-dir"] = sub->add_option("--data-dir", o.data_dir, "IDX directory");
}

bool given(const CommonOpts& o, const std::string& name) {
    return o.opts.at(name)->count() > 0;
}

TrainConfig resolve_config(const CommonOpts& o) {
    TrainConfig cfg;
    if (given(o, "config")) {
        std::ifstream is(o.config_path);
        if (!is) throw std::runtime_error("cannot open config file: " + o.config_path);
        nlohmann::json j;
        is >> j;
        cfg = config_from_json(j);
    }
    if (given(o, "seed")) cfg.seed = o.seed;
    if (given(o, "dataset")) cfg.dataset.kind = o.dataset;
    if (given(o, "model")) cfg.model.kind = o.model;
    if (given(o, "hidden")) cfg.model.hidden = o.hidden;
    if (given(o, "loss")) cfg.loss.kind = o.loss;
    if (given(o, "a")) cfg.loss.a = o.a;
    if (given(o, "optimizer")) cfg.optimizer.kind = o.optimizer;
    if (given(o, "lr")) cfg.optimizer.lr = o.lr;
    if (given(o, "epochs")) cfg.epochs = o.epochs;
    if (given(o, "batch-size")) cfg.batch_size = o.batch_size;
    if (given(o, "weight-decay")) cfg.weight_decay = o.weight_decay;
    if (given(o, "split")) cfg.split = o.split;
    if (given(o, "limit")) cfg.dataset.limit = o.limit;
    if (given(o, "repeats")) cfg.repeats = o.repeats;
    if (given(o, "data-dir")) cfg.dataset.dir = o.data_dir;
    return cfg;
}

fs::path ensure_out_dir(const CommonOpts& o) {
    fs::path dir(o.out_dir);
    fs::create_directories(dir);
    return dir;
}

LossSpec parse_loss_token(const std::string& token) {
    LossSpec spec;
    const auto colon = token.find(':');
    spec.kind = token.substr(0, colon);
    if (colon != std::string::npos) spec.a = std::stod(token.substr(colon + 1));
    return spec;
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void print_summary_line(const std::string& tag, const RunSummary& s) {
    std::printf("%s final_val_acc=%.4f first_val_acc=%.4f best_val_acc=%.4f variance=%.3e\n",
                tag.c_str(), s.final_val_acc, s.first_val_acc, s.best_val_acc,
                s.val_acc_variance);
}

int cmd_train(const CommonOpts& o) {
    const TrainConfig cfg = resolve_config(o);
    const fs::path dir = ensure_out_dir(o);
    const RepeatedRun rr = train_repeated(cfg);
    for (const RunReport& r : rr.runs) {
        const std::string name = rr.runs.size() == 1
                                     ? "metrics.csv"
                                     : "metrics_seed" + std::to_string(r.seed) + ".csv";
        write_metrics_csv((dir / name).string(), r);
    }
    write_report_json((dir / "report.json").string(), cfg, rr.runs, rr.mean);
    print_summary_line("[" + rr.runs.front().loss_name + "]", rr.mean);
    std::printf("wrote %s\n", (dir / "report.json").c_str());
    return 0;
}

int cmd_compare(const CommonOpts& o, const std::string& losses_arg) {
    const TrainConfig cfg = resolve_config(o);
    const fs::path dir = ensure_out_dir(o);
    std::vector<LossSpec> losses;
    for (const std::string& token : split_commas(losses_arg)) {
        losses.push_back(parse_loss_token(token));
    }
    const auto entries = compare(cfg, losses);

    const std::string table = compare_table(entries);
    std::fputs(table.c_str(), stdout);
    std::ofstream(dir / "compare.txt") << table;

    nlohmann::json doc;
    doc["config"] = to_json(cfg);
    doc["entries"] = nlohmann::json::array();
    bool any_error = false;
    for (const CompareEntry& e : entries) {
        nlohmann::json je{{"loss", e.loss_name}, {"error", e.error}};
        je["runs"] = nlohmann::json::array();
        for (const RunReport& r : e.runs) je["runs"].push_back(report_to_json(r));
        je["mean_summary"] = summary_to_json(e.mean);
        doc["entries"].push_back(je);
        if (!e.error.empty()) any_error = true;
        if (!e.runs.empty()) {
            write_metrics_csv((dir / ("metrics_" + e.loss_name + ".csv")).string(),
                              e.runs.front());
        }
    }
    std::ofstream(dir / "compare.json") << doc.dump(2) << "\n";
    std::printf("wrote %s\n", (dir / "compare.json").c_str());
    return any_error ? 2 : 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& grid_arg) {
    const TrainConfig cfg = resolve_config(o);
    const fs::path dir = ensure_out_dir(o);
    std::vector<double> grid;
    for (const std::string& token : split_commas(grid_arg)) grid.push_back(std::stod(token));
    const SweepResult result = sweep_a(cfg, grid);

    std::ofstream os(dir / "sweep.csv");
    os << "a,flagged,final_val_acc,first_val_acc,best_val_acc,val_acc_variance,error\n";
    for (const SweepRow& row : result.rows) {
        os << format_double(row.a) << ',' << (row.flagged ? 1 : 0) << ','
           << format_double(row.mean.final_val_acc) << ','
           << format_double(row.mean.first_val_acc) << ','
           << format_double(row.mean.best_val_acc) << ','
           << format_double(row.mean.val_acc_variance) << ',' << row.error << '\n';
        std::printf("a=%.4f%s best_val_acc=%.4f%s\n", row.a, row.flagged ? " (flagged)" : "",
                    row.mean.best_val_acc,
                    row.error.empty() ? "" : (" error: " + row.error).c_str());
    }
    std::printf("best a=%.4f best_val_acc=%.4f\n", result.best_a, result.best_val_acc);
    std::printf("wrote %s\n", (dir / "sweep.csv").c_str());
    return 0;
}

int cmd_gradcheck(const CommonOpts& o) {
    const GradcheckReport report = gradcheck(given(o, "seed") ? o.seed : 1);
    for (const GradcheckRow& row : report.rows) {
        std::printf("%-18s %-16s max_rel_err=%.3e mean_rel_err=%.3e\n", row.model.c_str(),
                    row.loss_name.c_str(), row.max_rel_err, row.mean_rel_err);
    }
    std::printf("worst=%.3e -> %s\n", report.worst, report.pass ? "ok" : "FAIL");
    return report.pass ? 0 : 1;
}

int cmd_curves(const CommonOpts& o, const std::string& a_arg, double p_min, double p_max,
               std::size_t points) {
    const fs::path dir = ensure_out_dir(o);
    std::vector<double> a_values;
    for (const std::string& token : split_commas(a_arg)) a_values.push_back(std::stod(token));
    const CurveGrid grid{p_min, p_max, points};
    const CurveEmission emission = emit_curves(a_values, grid, (dir / "curves.csv").string());
    std::printf("closest a to the cce shape: %.4f\n", emission.closest_a);
    std::printf("wrote %s\n", emission.path.c_str());
    return 0;
}

int cmd_convexity(const CommonOpts& o, const std::string& a_arg) {
    const fs::path dir = ensure_out_dir(o);
    std::vector<double> a_values;
    for (const std::string& token : split_commas(a_arg)) a_values.push_back(std::stod(token));
    const auto rows = probe_convexity_cli(a_values, (dir / "convexity.csv").string());
    for (const ConvexityRow& row : rows) {
        if (row.is_convex) {
            std::printf("a=%.4f convex\n", row.a);
        } else {
            std::printf("a=%.4f non-convex, first violation at p=%.6f\n", row.a,
                        row.first_violation.value_or(0.0));
        }
    }
    std::printf("wrote %s\n", (dir / "convexity.csv").c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adma loss training toolkit"};
    app.require_subcommand(1);

    CommonOpts train_o, compare_o, sweep_o, grad_o, curves_o, convex_o;
    std::string losses_arg = "adma:0.26,cce,mse,squared_hinge";
    std::string grid_arg = "0.1,0.2,0.26,0.3,0.4,0.5";
    std::string curves_a = "0.05,0.1,0.2,0.26,0.35,0.5";
    std::string convex_a = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.9";
    double p_min = 1e-7, p_max = 1.0;
    std::size_t points = 512;

    CLI::App* train_cmd = app.add_subcommand("train", "train one model/loss configuration");
    add_common(train_cmd, train_o);

    CLI::App* compare_cmd =
        app.add_subcommand("compare", "train the same configuration under several losses");
    add_common(compare_cmd, compare_o);
    compare_cmd->add_option("--losses", losses_arg,
                            "comma list, adma entries as adma:<a> (default four-way)");

    CLI::App* sweep_cmd = app.add_subcommand("sweep-a", "train across Adma scaling factors");
    add_common(sweep_cmd, sweep_o);
    sweep_cmd->add_option("--grid", grid_arg, "comma list of scaling factors");

    CLI::App* grad_cmd =
        app.add_subcommand("gradcheck", "finite-difference audit of every analytic gradient");
    add_common(grad_cmd, grad_o);

    CLI::App* curves_cmd = app.add_subcommand("curves", "emit loss curves for plotting");
    add_common(curves_cmd, curves_o);
    curves_cmd->add_option("--a-values", curves_a, "comma list of scaling factors");
    curves_cmd->add_option("--p-min", p_min, "grid start (> 0 keeps cce finite)");
    curves_cmd->add_option("--p-max", p_max, "grid end");
    curves_cmd->add_option("--points", points, "grid size");

    CLI::App* convex_cmd = app.add_subcommand("convexity", "probe curvature per scaling factor");
    add_common(convex_cmd, convex_o);
    convex_cmd->add_option("--a-values", convex_a, "comma list of scaling factors");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_o);
        if (compare_cmd->parsed()) return cmd_compare(compare_o, losses_arg);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_o, grid_arg);
        if (grad_cmd->parsed()) return cmd_gradcheck(grad_o);
        if (curves_cmd->parsed()) return cmd_curves(curves_o, curves_a, p_min, p_max, points);
        if (convex_cmd->parsed()) return cmd_convexity(convex_o, convex_a);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
