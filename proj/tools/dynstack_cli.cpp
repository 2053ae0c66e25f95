// dynstack: command-line driver for simulations, graph experiments and
// stand-alone stacking fits. Every run writes manifest.txt into --out; running
// `dynstack --config <manifest> --out <dir>` repeats it.

#include "dynstack/dynstack.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace dynstack;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string out = ".";
    unsigned threads = 1;
};

struct GridOptions {
    double lambda_min = 1e-4;
    double lambda_max = 1e4;
    int lambda_points = 21;
    int cv_folds = 10;

    void add_to(CLI::App* app) {
        app->add_option("--lambda-min", lambda_min, "smallest penalty on the CV grid")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--lambda-max", lambda_max, "largest penalty on the CV grid")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--lambda-points", lambda_points, "log-spaced grid points")->capture_default_str()->check(CLI::Range(1, 1000));
        app->add_option("--cv-folds", cv_folds, "folds for penalty selection")->capture_default_str()->check(CLI::Range(2, 1000));
    }

    FitConfig config(std::uint64_t seed) const {
        if (lambda_max < lambda_min) throw InvalidArgument("--lambda-max is below --lambda-min");
        FitConfig f;
        f.lambda_grid = log_grid(lambda_min, lambda_max, lambda_points);
        f.folds = cv_folds;
        f.seed = seed;
        return f;
    }
};

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read '" + path + "'");
    return in;
}

class OutputDir {
public:
    explicit OutputDir(const std::string& dir) : dir_(dir) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
    }

    template <class Writer>
    void write(const std::string& name, Writer&& writer) const {
        const auto path = dir_ / name;
        std::ofstream out(path);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        writer(out);
        out.flush();
        if (!out) throw Error("failed while writing '" + path.string() + "'");
    }

private:
    fs::path dir_;
};

std::string manifest_value(const std::string& v) {
    const bool plain = !v.empty() && std::all_of(v.begin(), v.end(), [](unsigned char c) {
        return std::isalnum(c) || std::strchr("_./:+-", c) != nullptr;
    });
    return plain ? v : '"' + v + '"';
}

// Global seed plus the section of the subcommand that ran. Options left unset
// without a default are omitted so that the manifest parses back unchanged.
void write_manifest(const OutputDir& dir, const CLI::App& app) {
    const auto* sub = app.get_subcommands().front();
    dir.write("manifest.txt", [&](std::ostream& out) {
        out << "# dynstack run manifest; replay with: dynstack --config manifest.txt --out <dir>\n";
        out << "seed=" << app.get_option("--seed")->as<std::uint64_t>() << '\n';
        out << '[' << sub->get_name() << "]\n";
        for (const auto* opt : sub->get_options()) {
            if (!opt->get_configurable() || opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
            const auto& name = opt->get_lnames().front();
            if (opt->get_type_size() == 0) {
                out << name << '=' << (opt->count() > 0 ? "true" : "false") << '\n';
                continue;
            }
            std::vector<std::string> values = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
            if (values.empty()) {
                const auto def = opt->get_default_str();
                if (def.empty()) continue;
                if (def.front() == '[' && def.back() == ']') {
                    out << name << '=' << def << '\n';
                    continue;
                }
                values.push_back(def);
            }
            if (values.size() == 1 && opt->get_expected_max() <= 1) {
                out << name << '=' << manifest_value(values.front()) << '\n';
                continue;
            }
            out << name << "=[";
            for (std::size_t k = 0; k < values.size(); ++k) out << (k ? "," : "") << manifest_value(values[k]);
            out << "]\n";
        }
    });
}

// --- simulate --------------------------------------------------------------

struct SimulateOptions {
    std::vector<int> cases{1, 2, 3};
    std::size_t n = 2000;
    std::size_t reps = 50;
    std::vector<std::string> methods;
    bool raw = false;
    int interior_knots = 6;
    int degree = 3;
    GridOptions grid;
};

void add_simulate(CLI::App& app, SimulateOptions& o) {
    auto* sub = app.add_subcommand("simulate", "varying-coefficient simulation study (AUC per case and method)")->configurable();
    sub->add_option("--case", o.cases, "simulation cases to run")->capture_default_str()->check(CLI::Range(1, 3));
    sub->add_option("--n", o.n, "rows per dataset (half train, half test)")->capture_default_str()->check(CLI::Range(4, 100000000));
    sub->add_option("--reps", o.reps, "repetitions per case")->capture_default_str()->check(CLI::Range(1, 1000000));
    std::vector<std::string> names;
    for (auto m : all_sim_methods()) names.emplace_back(to_string(m));
    o.methods = names;
    sub->add_option("--methods", o.methods, "methods to evaluate")->capture_default_str()->check(CLI::IsMember(names))->delimiter(',');
    sub->add_flag("--raw", o.raw, "also write per-repetition AUCs");
    sub->add_option("--interior-knots", o.interior_knots, "interior knots of the coefficient splines")->capture_default_str()->check(CLI::Range(0, 100));
    sub->add_option("--degree", o.degree, "spline degree")->capture_default_str()->check(CLI::Range(0, 10));
    o.grid.add_to(sub);
}

void run_simulate(const GlobalOptions& g, const SimulateOptions& o, const CLI::App& app) {
    SimConfig cfg;
    cfg.cases = o.cases;
    cfg.methods.clear();
    for (const auto& m : o.methods) cfg.methods.push_back(parse_sim_method(m));
    cfg.n = o.n;
    cfg.reps = o.reps;
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.interior_knots = o.interior_knots;
    cfg.degree = o.degree;
    cfg.fit = o.grid.config(0);
    const auto report = run_simulation(cfg);

    const OutputDir dir(g.out);
    dir.write("simulation.csv", [&](std::ostream& out) { write_sim_report(out, report); });
    if (o.raw) dir.write("simulation_raw.csv", [&](std::ostream& out) { write_sim_raw(out, report); });
    write_manifest(dir, app);
    write_sim_report(std::cout, report);
}

// --- graph-experiment ------------------------------------------------------

struct GraphOptions {
    std::string edges, labels, features;
    std::string covariate = "closeness";
    double test_fraction = 0.8;
    std::size_t reps = 100;
    std::string positive_label;
    bool lcc = false;
    std::size_t bins = 100;
    int level1_folds = 10;
    int ica_iterations = 100;
    double nb_alpha = 1.0;
    int interior_knots = 6;
    int degree = 3;
    std::size_t curve_points = 200;
    GridOptions grid;
};

void add_graph(CLI::App& app, GraphOptions& o) {
    auto* sub = app.add_subcommand("graph-experiment", "local + relational stacking on a labelled graph")->configurable();
    sub->add_option("--edges", o.edges, "edge list: `id1 id2 [weight]` per line")->required()->check(CLI::ExistingFile);
    sub->add_option("--labels", o.labels, "labels: `node_id,label` CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--features", o.features, "node text: `node_id term[:weight] ...`")->required()->check(CLI::ExistingFile);
    sub->add_option("--covariate", o.covariate, "stacking covariate")->capture_default_str()->check(CLI::IsMember({"degree", "closeness"}));
    sub->add_option("--test-fraction", o.test_fraction, "share of nodes held out")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sub->add_option("--reps", o.reps, "random splits")->capture_default_str()->check(CLI::Range(1, 1000000));
    sub->add_option("--positive-label", o.positive_label, "labels starting with this prefix are positive")->required();
    sub->add_flag("--lcc", o.lcc, "restrict to the largest connected component");
    sub->add_option("--bins", o.bins, "equal-width bins for a closeness covariate")->capture_default_str()->check(CLI::Range(1, 100000));
    sub->add_option("--level1-folds", o.level1_folds, "folds for building level-1 training rows")->capture_default_str()->check(CLI::Range(2, 1000));
    sub->add_option("--ica-iterations", o.ica_iterations, "maximum ICA sweeps")->capture_default_str()->check(CLI::Range(1, 100000));
    sub->add_option("--nb-alpha", o.nb_alpha, "naive Bayes smoothing")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--interior-knots", o.interior_knots, "interior knots of the coefficient splines")->capture_default_str()->check(CLI::Range(0, 100));
    sub->add_option("--degree", o.degree, "spline degree")->capture_default_str()->check(CLI::Range(0, 10));
    sub->add_option("--curve-points", o.curve_points, "grid points for curves.csv")->capture_default_str()->check(CLI::Range(2, 100000));
    o.grid.add_to(sub);
}

void run_graph(const GlobalOptions& g, const GraphOptions& o, const CLI::App& app) {
    auto edges = open_in(o.edges);
    auto labels = open_in(o.labels);
    auto features = open_in(o.features);
    const auto corpus = load_corpus(edges, labels, features, o.lcc);

    GraphExperimentConfig cfg;
    cfg.covariate = parse_covariate_kind(o.covariate);
    cfg.test_fraction = o.test_fraction;
    cfg.reps = o.reps;
    cfg.seed = g.seed;
    cfg.positive_prefix = o.positive_label;
    cfg.level1_folds = o.level1_folds;
    cfg.ica_max_iterations = o.ica_iterations;
    cfg.nb_alpha = o.nb_alpha;
    cfg.interior_knots = o.interior_knots;
    cfg.degree = o.degree;
    cfg.fit = o.grid.config(0);
    cfg.bins = o.bins;
    cfg.curve_points = o.curve_points;
    cfg.threads = g.threads;
    const auto result = run_graph_experiment(corpus.graph, corpus.features, cfg);
    const auto spec = default_bin_spec(result, cfg.bins);

    const OutputDir dir(g.out);
    dir.write("accuracy.csv", [&](std::ostream& out) { write_accuracy_table(out, result); });
    dir.write("comparison.csv", [&](std::ostream& out) { write_comparisons(out, result); });
    for (std::size_t m = 0; m < graph_methods().size(); ++m)
        dir.write("binned_" + graph_methods()[m] + ".csv",
                  [&](std::ostream& out) { write_binned_csv(out, pooled_binned_accuracy(result, m, spec)); });
    dir.write("binned_delta.csv", [&](std::ostream& out) { write_binned_deltas(out, result, spec); });
    dir.write("curves.csv", [&](std::ostream& out) { write_curves(out, result.reps.front().model, cfg.curve_points); });
    dir.write("per_rep.csv", [&](std::ostream& out) { write_per_rep(out, result); });
    dir.write("covariate.csv", [&](std::ostream& out) { write_covariate_csv(out, result.graph, result.covariate); });
    dir.write("ica_predictions.csv", [&](std::ostream& out) { write_ica_predictions(out, result.graph, result.first_ica); });
    dir.write("failures.csv", [&](std::ostream& out) {
        out << "rep,detail\n";
        for (const auto& rep : result.reps)
            for (auto f : rep.failures) {
                std::replace(f.begin(), f.end(), ',', ';');
                std::replace(f.begin(), f.end(), '\n', ' ');
                out << rep.rep << ',' << f << '\n';
            }
    });
    write_manifest(dir, app);
    write_accuracy_table(std::cout, result);
}

// --- centrality ------------------------------------------------------------

struct CentralityOptions {
    std::string edges;
    std::string kind = "closeness";
    bool whole_graph = false;
};

void add_centrality(CLI::App& app, CentralityOptions& o) {
    auto* sub = app.add_subcommand("centrality", "per-node degree or closeness centrality")->configurable();
    sub->add_option("--edges", o.edges, "edge list")->required()->check(CLI::ExistingFile);
    sub->add_option("--kind", o.kind, "covariate")->capture_default_str()->check(CLI::IsMember({"degree", "closeness"}));
    sub->add_flag("--whole-graph", o.whole_graph, "skip the reduction to the largest connected component");
}

void run_centrality(const GlobalOptions& g, const CentralityOptions& o, const CLI::App& app) {
    auto in = open_in(o.edges);
    auto graph = parse_edge_list(in);
    if (graph.empty()) throw Error("edge file '" + o.edges + "' has no edges");
    if (!o.whole_graph) graph = largest_connected_component(graph);
    const auto kind = parse_covariate_kind(o.kind);
    const auto cov = compute_covariate(graph, kind, g.threads);
    const OutputDir dir(g.out);
    dir.write("centrality.csv", [&](std::ostream& out) { write_covariate_csv(out, graph, cov); });
    write_manifest(dir, app);
}

// --- stack-fit / stack-predict / curves ------------------------------------

struct StackFitOptions {
    std::string level1;
    std::string provenance;
    std::string kind = "dynamic";
    std::string design = "m1";
    std::string penalty = "none";
    std::optional<double> lambda;
    int interior_knots = 6;
    int degree = 3;
    GridOptions grid;
};

void add_stack_fit(CLI::App& app, StackFitOptions& o) {
    auto* sub = app.add_subcommand("stack-fit", "fit a level-1 model to a `y,z_1..z_p,u` CSV")->configurable();
    sub->add_option("--level1", o.level1, "level-1 CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--provenance", o.provenance, "column descriptions, `z_j<TAB>text` per line")->check(CLI::ExistingFile);
    sub->add_option("--kind", o.kind, "model family")->capture_default_str()->check(CLI::IsMember({"dynamic", "static"}));
    sub->add_option("--design", o.design, "static design")->capture_default_str()->check(CLI::IsMember({"m1", "m2", "m3"}));
    sub->add_option("--penalty", o.penalty, "static penalty")->capture_default_str()->check(CLI::IsMember({"none", "ridge", "lasso"}));
    sub->add_option("--lambda", o.lambda, "fixed penalty; cross-validated over the grid when absent")->check(CLI::NonNegativeNumber);
    sub->add_option("--interior-knots", o.interior_knots, "interior knots of the coefficient splines")->capture_default_str()->check(CLI::Range(0, 100));
    sub->add_option("--degree", o.degree, "spline degree")->capture_default_str()->check(CLI::Range(0, 10));
    o.grid.add_to(sub);
}

void write_grid(std::ostream& out, const GridSelection& sel) {
    out << "lambda,cv_nll\n";
    for (const auto& s : sel.scores) out << format_real(s.value) << ',' << format_real(s.score) << '\n';
}

void run_stack_fit(const GlobalOptions& g, const StackFitOptions& o, const CLI::App& app) {
    auto in = open_in(o.level1);
    auto data = read_level1_csv(in);
    if (!o.provenance.empty()) {
        auto pin = open_in(o.provenance);
        auto cols = read_provenance(pin);
        if (cols.size() != data.p()) throw Error("provenance lists " + std::to_string(cols.size()) + " columns, data has " + std::to_string(data.p()));
        data.columns = std::move(cols);
    }
    const auto fit = o.grid.config(g.seed);
    std::optional<GridSelection> sel;
    StackModel model;
    if (o.kind == "dynamic") {
        const auto basis = basis_for(data, o.interior_knots, o.degree);
        if (o.lambda) {
            model = fit_dynamic(data, *o.lambda, basis, fit.newton);
        } else {
            sel.emplace();
            model = fit_dynamic_cv(data, fit, basis, &*sel);
        }
        for (const auto& w : std::get<DynamicStackModel>(model).warnings) std::cerr << "warning: " << w << '\n';
    } else {
        const auto design = parse_static_design(o.design);
        const auto penalty = parse_penalty(o.penalty);
        if (o.lambda || penalty == Penalty::none) {
            model = fit_static(data, design, penalty, o.lambda.value_or(0.0), fit.newton);
        } else {
            sel.emplace();
            model = fit_static_cv(data, design, penalty, fit, &*sel);
        }
    }
    const OutputDir dir(g.out);
    dir.write("model.txt", [&](std::ostream& out) { write_model(out, model); });
    if (sel) dir.write("cv.csv", [&](std::ostream& out) { write_grid(out, *sel); });
    write_manifest(dir, app);
}

struct StackPredictOptions {
    std::string model;
    std::string level1;
};

void add_stack_predict(CLI::App& app, StackPredictOptions& o) {
    auto* sub = app.add_subcommand("stack-predict", "apply a fitted level-1 model")->configurable();
    sub->add_option("--model", o.model, "model file from stack-fit")->required()->check(CLI::ExistingFile);
    sub->add_option("--level1", o.level1, "level-1 CSV; y is carried through")->required()->check(CLI::ExistingFile);
}

void run_stack_predict(const GlobalOptions& g, const StackPredictOptions& o, const CLI::App& app) {
    auto min = open_in(o.model);
    const auto model = read_model(min);
    auto din = open_in(o.level1);
    const auto data = read_level1_csv(din);
    const Eigen::VectorXd p = std::visit(
        [&](const auto& m) -> Eigen::VectorXd {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DynamicStackModel>) return predict_dynamic(m, data);
            else return predict_static(m, data);
        },
        model);
    const OutputDir dir(g.out);
    dir.write("predictions.csv", [&](std::ostream& out) {
        out << "row,y,probability\n";
        for (std::size_t i = 0; i < data.rows(); ++i) out << i << ',' << data.y[i] << ',' << format_real(p(static_cast<Eigen::Index>(i))) << '\n';
    });
    write_manifest(dir, app);
}

struct CurvesOptions {
    std::string model;
    std::size_t points = 200;
};

void add_curves(CLI::App& app, CurvesOptions& o) {
    auto* sub = app.add_subcommand("curves", "coefficient curves of a dynamic model")->configurable();
    sub->add_option("--model", o.model, "dynamic model file")->required()->check(CLI::ExistingFile);
    sub->add_option("--points", o.points, "grid points")->capture_default_str()->check(CLI::Range(2, 1000000));
}

void run_curves(const GlobalOptions& g, const CurvesOptions& o, const CLI::App& app) {
    auto in = open_in(o.model);
    const auto model = read_model(in);
    const auto* dyn = std::get_if<DynamicStackModel>(&model);
    if (!dyn) throw Error("'" + o.model + "' is a static model; curves need a dynamic one");
    const OutputDir dir(g.out);
    dir.write("curves.csv", [&](std::ostream& out) { write_curves(out, *dyn, o.points); });
    write_manifest(dir, app);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic (varying-coefficient) stacking for node classification"};
    app.set_config("--config", "", "replay a run from its manifest.txt");
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--seed", g.seed, "master seed")->capture_default_str();
    app.add_option("--out", g.out, "output directory")->capture_default_str()->configurable(false);
    // Thread count does not affect results, so it stays out of the manifest.
    app.add_option("--threads", g.threads, "worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u))->configurable(false);

    SimulateOptions sim;
    GraphOptions graph;
    CentralityOptions cent;
    StackFitOptions fit;
    StackPredictOptions pred;
    CurvesOptions curves;
    add_simulate(app, sim);
    add_graph(app, graph);
    add_centrality(app, cent);
    add_stack_fit(app, fit);
    add_stack_predict(app, pred);
    add_curves(app, curves);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("simulate")) run_simulate(g, sim, app);
        else if (app.got_subcommand("graph-experiment")) run_graph(g, graph, app);
        else if (app.got_subcommand("centrality")) run_centrality(g, cent, app);
        else if (app.got_subcommand("stack-fit")) run_stack_fit(g, fit, app);
        else if (app.got_subcommand("stack-predict")) run_stack_predict(g, pred, app);
        else if (app.got_subcommand("curves")) run_curves(g, curves, app);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
