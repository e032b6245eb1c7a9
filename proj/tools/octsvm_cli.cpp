#include "octsvm/octsvm.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace octsvm;

namespace {

struct DataArgs {
    std::string path;
    int label_column = -1;
    std::string delimiter = ",";
    std::string header = "auto";

    void add(CLI::App* app, bool required = true) {
        auto* opt = app->add_option("--data", path, "CSV file, labels in the last column by default");
        if (required) opt->required();
        app->add_option("--label-column", label_column, "label column index, negative counts from the end");
        app->add_option("--delimiter", delimiter, "field delimiter (one character or 'tab')");
        app->add_option("--header", header, "auto, true or false")->check(CLI::IsMember({"auto", "true", "false"}));
    }

    CsvOptions csv(bool labels = true) const {
        CsvOptions o;
        if (delimiter == "tab")
            o.delimiter = '\t';
        else if (delimiter.size() == 1)
            o.delimiter = delimiter[0];
        else
            throw std::invalid_argument("--delimiter must be one character");
        o.label_column = label_column;
        o.header = header == "auto" ? HeaderMode::detect : header == "true" ? HeaderMode::present : HeaderMode::absent;
        o.labels = labels;
        return o;
    }

    Dataset load() const {
        const RawTable t = load_csv(path, csv());
        return normalize_features(t.features, t.labels, t.feature_names);
    }
};

struct CostArgs {
    double c1 = 1.0, c2 = 0.1, c3 = 0.01, alpha = 0.0;
    int depth = -1;
    double coef_bound = 10.0;

    void add(CLI::App* app, bool with_alpha) {
        app->add_option("--c1", c1, "misclassification cost");
        app->add_option("--c2", c2, "relabeling cost");
        app->add_option("--c3", c3, "split cost");
        if (with_alpha) app->add_option("--alpha", alpha, "CART cost-complexity parameter");
        app->add_option("--depth", depth, "tree depth (OCTSVM default 2, CART default 3)");
        app->add_option("--coef-bound", coef_bound, "bound W on hyperplane coefficients");
    }

    ModelConfig config(int default_depth) const {
        ModelConfig cfg;
        cfg.c1 = c1;
        cfg.c2 = c2;
        cfg.c3 = c3;
        cfg.depth = depth >= 0 ? depth : default_depth;
        cfg.coef_bound = coef_bound;
        cfg.validate();
        return cfg;
    }
};

struct BudgetArgs {
    double time_limit = 30.0;
    long node_limit = 0;
    double gap_target = 1e-6;

    void add(CLI::App* app, double default_gap) {
        gap_target = default_gap;
        app->add_option("--time-limit", time_limit, "seconds");
        app->add_option("--node-limit", node_limit, "node budget; alone it disables the time limit");
        app->add_option("--gap-target", gap_target, "relative gap at which the search stops");
    }

    Budget budget(const CLI::App* app) const {
        Budget b;
        b.time_limit = time_limit;
        b.gap_target = gap_target;
        if (node_limit > 0) {
            b.node_limit = node_limit;
            if (app->count("--time-limit") == 0) b.time_limit = std::numeric_limits<double>::infinity();
        }
        b.validate();
        return b;
    }
};

std::ostream* open_output(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return &std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot write " + path);
    return &file;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classification trees with SVM splits and label relabeling"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "train one model on a CSV file");
    DataArgs train_data;
    CostArgs train_costs;
    BudgetArgs train_budget;
    std::string method_name = "OCTSVM", model_out;
    std::uint64_t seed = 1;
    double min_leaf = 0.05;
    bool verbose = false;
    train_data.add(train);
    train_costs.add(train, true);
    train_budget.add(train, 1e-6);
    train->add_option("--method", method_name, "OCTSVM, RESVM or CART");
    train->add_option("--seed", seed, "accepted for interface symmetry; training is deterministic");
    train->add_option("--min-leaf-fraction", min_leaf, "CART minimum leaf size as a fraction of n");
    train->add_option("--out", model_out, "model file (JSON)");
    train->add_flag("--verbose", verbose, "print the solver log to stderr");

    // predict
    auto* pred = app.add_subcommand("predict", "label rows of a CSV file with a saved model");
    DataArgs pred_data;
    std::string model_in, pred_out;
    bool unlabeled = false;
    pred_data.add(pred);
    pred->add_option("--model", model_in, "model file")->required();
    pred->add_option("--out", pred_out, "predictions, one per line (default stdout)");
    pred->add_flag("--unlabeled", unlabeled, "the file has no label column");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a noise-robustness experiment");
    std::string spec_path, report_out, format = "csv";
    bool progress = false;
    exp->add_option("--spec", spec_path, "experiment spec (key = value lines)")->required();
    exp->add_option("--out", report_out, "report path; the summary goes to <out>.summary.txt")->required();
    exp->add_option("--format", format, "csv or tsv")->check(CLI::IsMember({"csv", "tsv"}));
    exp->add_flag("--progress", progress, "print one line per cell to stderr");

    // export-model
    auto* exp_model = app.add_subcommand("export-model", "write the LP-format text of the built model");
    std::string export_spec, export_out, export_method = "OCTSVM";
    DataArgs export_data;
    CostArgs export_costs;
    exp_model->add_option("--spec", export_spec, "experiment spec; uses its dataset, first grid values and depth");
    export_data.add(exp_model, false);
    export_costs.add(exp_model, false);
    exp_model->add_option("--method", export_method, "OCTSVM or RESVM");
    exp_model->add_option("--out", export_out, "output file (default stdout)");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "compare brute force and branch-and-bound on a tiny dataset");
    DataArgs oracle_data;
    CostArgs oracle_costs;
    BudgetArgs oracle_budget;
    std::string oracle_method = "OCTSVM";
    oracle_data.add(oracle);
    oracle_costs.add(oracle, false);
    oracle_budget.add(oracle, 1e-7);
    oracle->add_option("--method", oracle_method, "OCTSVM or RESVM");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (train->parsed()) {
            const Method method = parse_method(method_name);
            const Dataset data = train_data.load();
            TrainSettings settings;
            if (train_costs.depth >= 0) settings.octsvm_depth = settings.cart_depth = train_costs.depth;
            settings.coef_bound = train_costs.coef_bound;
            settings.min_leaf_fraction = min_leaf;
            settings.budget = train_budget.budget(train);
            if (verbose) settings.branch.log = &std::cerr;
            const Hyperparameters h{train_costs.c1, train_costs.c2, train_costs.c3, train_costs.alpha};
            const TrainedModel m = train_model(method, data, h, settings);
            std::cout << "method=" << to_string(method) << ' ' << h.describe(method)
                      << " train_accuracy=" << fmt(accuracy(m, data).accuracy_percent);
            if (method != Method::cart) std::cout << " status=" << to_string(m.status) << " gap=" << fmt(m.gap);
            std::cout << '\n';
            if (method == Method::cart)
                std::cout << to_text(m.cart);
            if (!model_out.empty()) save_model(m, model_out);
        } else if (pred->parsed()) {
            const TrainedModel m = load_model(model_in);
            const RawTable t = load_csv(pred_data.path, pred_data.csv(!unlabeled));
            if (t.cols() != static_cast<int>(m.scaling.dims()))
                throw std::invalid_argument("data has " + std::to_string(t.cols()) + " features, model expects " +
                                            std::to_string(m.scaling.dims()));
            std::vector<int> labels = unlabeled ? std::vector<int>(t.rows(), 1) : t.labels;
            const Dataset data = apply_scaling(m.scaling, t.features, labels, t.feature_names);
            std::ofstream file;
            std::ostream& out = *open_output(pred_out, file);
            for (int i = 0; i < data.size(); ++i) out << m.predict(data.row(i)) << '\n';
            if (!unlabeled) std::cerr << "accuracy=" << fmt(accuracy(m, data).accuracy_percent) << '\n';
        } else if (exp->parsed()) {
            const ExperimentSpec spec = load_spec(spec_path);
            const Report report = run_experiment(spec, progress ? &std::cerr : nullptr);
            const std::string summary = write_report(report, report_out, format);
            int failed = 0;
            for (const ReportRow& r : report.rows) failed += r.ok() ? 0 : 1;
            std::cout << aggregate_table(report);
            std::cout << "rows=" << report.rows.size() << " failed=" << failed << " report=" << report_out
                      << " summary=" << summary << '\n';
        } else if (exp_model->parsed()) {
            Method method = parse_method(export_method);
            Dataset data;
            ModelConfig cfg;
            if (!export_spec.empty()) {
                const ExperimentSpec spec = load_spec(export_spec);
                const RawTable t = load_csv(spec.dataset, spec.csv);
                data = normalize_features(t.features, t.labels, t.feature_names);
                cfg.c1 = spec.grids.c1.front();
                cfg.c2 = spec.grids.c2.front();
                cfg.c3 = spec.grids.c3.front();
                cfg.depth = spec.train.octsvm_depth;
                cfg.coef_bound = spec.train.coef_bound;
                if (exp_model->count("--method") == 0) {
                    method = Method::octsvm;
                    for (Method m : spec.methods)
                        if (m == Method::octsvm || m == Method::resvm) {
                            method = m;
                            break;
                        }
                }
            } else {
                if (export_data.path.empty()) throw std::invalid_argument("export-model needs --spec or --data");
                data = export_data.load();
                cfg = export_costs.config(2);
            }
            if (method == Method::cart) throw std::invalid_argument("CART has no optimization model");
            const MinlpModel model = method == Method::octsvm
                                         ? build_octsvm_model(data, TreeTopology(cfg.depth), cfg)
                                         : build_resvm_model(data, cfg.c1, cfg.c2, cfg.coef_bound);
            std::ofstream file;
            write_lp(model, *open_output(export_out, file));
        } else if (oracle->parsed()) {
            const Method method = parse_method(oracle_method);
            const Dataset data = oracle_data.load();
            const ModelConfig cfg = oracle_costs.config(1);
            if (method == Method::cart) throw std::invalid_argument("oracle supports OCTSVM and RESVM");
            const MinlpModel model = method == Method::octsvm
                                         ? build_octsvm_model(data, TreeTopology(cfg.depth), cfg)
                                         : build_resvm_model(data, cfg.c1, cfg.c2, cfg.coef_bound);
            const SolveResult brute = brute_force_solve(model);
            const SolveResult bnb = branch_and_bound(model, oracle_budget.budget(oracle));
            std::cout << "brute_force " << brute.summary() << '\n';
            std::cout << "branch_and_bound " << bnb.summary() << '\n';
            const double diff = std::abs(brute.objective() - bnb.objective());
            std::cout << "difference=" << fmt(diff) << (diff <= 1e-6 ? " agree" : " DISAGREE") << '\n';
            return diff <= 1e-6 ? 0 : 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "octsvm: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
