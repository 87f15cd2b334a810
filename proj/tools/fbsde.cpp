// Experiment driver: run one configuration, sweep over N or M, or evaluate
// the convergence diagnostics for a set of assumption constants.

#include "fbsde/diagnostics.hpp"
#include "fbsde/error.hpp"
#include "fbsde/experiment.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/regression.hpp"
#include "fbsde/solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace fbsde;

struct RunFlags {
    std::string problem = "example1";
    std::string method = "differentiation";
    std::size_t N = 32;
    std::size_t M = 5;
    std::size_t paths = 15000;
    std::uint64_t seed = 1;
    std::size_t fine_n = 20480;
    double ridge = 1e-10;
    int inner_iters = 3;
    std::string f_mode;  // empty: per-method default
    bool fresh_noise = false;
    bool center_features = false;
    std::string out;
    std::string checkpoint;
    std::string box_policy = "adaptive";
    std::optional<double> box_radius;
    ProblemOptions popts;

    // CLI11 binds plain members; copied into popts after parsing.
    std::optional<double> kappa_y, kappa_z, sigma_bar, r, T, x0, value;
    std::optional<std::size_t> d1;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
    app->add_option("--problem", f.problem, "example1 | example2 | brownian-linear | constant")
        ->capture_default_str();
    app->add_option("--method", f.method, "differentiation | direct")->capture_default_str();
    app->add_option("--N", f.N, "time steps")->capture_default_str();
    app->add_option("--M", f.M, "Markovian iterations")->capture_default_str();
    app->add_option("--paths", f.paths, "Monte Carlo paths")->capture_default_str();
    app->add_option("--seed", f.seed, "Brownian seed")->capture_default_str();
    app->add_option("--fine-n", f.fine_n, "fine reference steps (divisible by every N)")->capture_default_str();
    app->add_option("--ridge", f.ridge, "relative ridge (times trace(G)/P)")->capture_default_str();
    app->add_option("--inner-iters", f.inner_iters, "linearization passes per time step")->capture_default_str();
    app->add_option("--f-mode", f.f_mode, "implicit-yz | explicit-ynext (default depends on method)");
    app->add_flag("--fresh-noise", f.fresh_noise, "new increments for every iteration");
    app->add_flag("--center-features", f.center_features, "expand fitted polynomials about the box center");
    app->add_option("--out", f.out, "also write the CSV to this file");
    app->add_option("--box-policy", f.box_policy, "adaptive | fixed | none")->capture_default_str();
    app->add_option("--box-radius", f.box_radius, "half-width of the default truncation box");
    app->add_option("--kappa-y", f.kappa_y, "example1 coupling of y in the drift");
    app->add_option("--kappa-z", f.kappa_z, "example1 coupling of z in the drift");
    app->add_option("--sigma-bar", f.sigma_bar, "example1 diffusion scale");
    app->add_option("--r", f.r, "example1 discount rate");
    app->add_option("--d1", f.d1, "example1 dimension");
    app->add_option("--T", f.T, "horizon");
    app->add_option("--x0", f.x0, "initial value (every component)");
    app->add_option("--value", f.value, "terminal value of the constant problem");
}

ProblemSpec build_problem(RunFlags& f) {
    f.popts.kappa_y = f.kappa_y;
    f.popts.kappa_z = f.kappa_z;
    f.popts.sigma_bar = f.sigma_bar;
    f.popts.r = f.r;
    f.popts.T = f.T;
    f.popts.x0 = f.x0;
    f.popts.value = f.value;
    f.popts.d1 = f.d1;
    return make_problem(f.problem, f.popts);
}

SolverConfig build_solver(const RunFlags& f) {
    SolverConfig cfg;
    cfg.N = f.N;
    cfg.M = f.M;
    cfg.num_paths = f.paths;
    cfg.method = parse_method(f.method);
    cfg.seed = f.seed;
    cfg.fine_n = f.fine_n;
    cfg.regression.ridge = f.ridge;
    cfg.regression.inner_iters = f.inner_iters;
    if (!f.f_mode.empty()) cfg.regression.f_mode = parse_f_mode(f.f_mode);
    cfg.fresh_noise = f.fresh_noise;
    cfg.center_features = f.center_features;
    cfg.box_radius = f.box_radius;
    if (f.box_policy == "adaptive") {
        cfg.box_policy = BoxPolicy::adaptive;
    } else if (f.box_policy == "fixed") {
        cfg.box_policy = BoxPolicy::fixed;
    } else if (f.box_policy == "none") {
        cfg.box_policy = BoxPolicy::none;
    } else {
        throw InvalidArgument("unknown box policy '" + f.box_policy + "' (expected adaptive, fixed or none)");
    }
    cfg.validate();
    return cfg;
}

// Writes to stdout and, if requested, to a file.
class CsvSink {
public:
    explicit CsvSink(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw InvalidArgument("cannot open output file '" + path + "'");
        }
    }
    void line(const std::string& s) {
        std::cout << s << '\n';
        if (file_) *file_ << s << '\n';
    }
    void flush() {
        std::cout.flush();
        if (file_) file_->flush();
    }

private:
    std::unique_ptr<std::ofstream> file_;
};

void note_loss_increases(const IterationResult& res) {
    if (res.loss_increases > 0) {
        std::cerr << "note: inner-loop loss increased in " << res.loss_increases << " fitted step(s)\n";
    }
}

int cmd_run(RunFlags& f) {
    const ProblemSpec pb = build_problem(f);
    const SolverConfig cfg = build_solver(f);
    const ExperimentContext ctx(pb, cfg.seed, cfg.num_paths, cfg.fine_n, cfg.N);
    CsvSink sink(f.out);
    const RunOutput out = run_experiment(ctx, cfg);
    sink.line(csv_header());
    sink.line(to_csv_row(out.record));
    sink.flush();
    note_loss_increases(out.result);
    if (!f.checkpoint.empty()) write_checkpoint(out.result, cfg, f.checkpoint);
    return 0;
}

int cmd_sweep(RunFlags& f, const std::string& what, const std::vector<std::size_t>& values) {
    if (values.empty()) throw InvalidArgument("sweep needs at least one value");
    if (what != "N" && what != "M") throw InvalidArgument("--sweep must be N or M");
    const ProblemSpec pb = build_problem(f);
    SolverConfig cfg = build_solver(f);
    const std::size_t base = what == "N" ? lcm_of(values) : cfg.N;
    if (cfg.fine_n % base != 0) {
        throw InvalidArgument("fineN (" + std::to_string(cfg.fine_n) + ") must be divisible by every swept N (lcm " +
                              std::to_string(base) + ")");
    }
    const ExperimentContext ctx(pb, cfg.seed, cfg.num_paths, cfg.fine_n, base);
    CsvSink sink(f.out);
    sink.line(csv_header());
    std::vector<std::pair<double, double>> pts;
    for (std::size_t v : values) {
        if (v == 0) throw InvalidArgument("sweep values must be positive");
        (what == "N" ? cfg.N : cfg.M) = v;
        const RunOutput out = run_experiment(ctx, cfg);
        sink.line(to_csv_row(out.record));
        sink.flush();
        note_loss_increases(out.result);
        pts.emplace_back(static_cast<double>(v), out.record.total);
    }
    if (what == "N" && pts.size() >= 2) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "# fitted_rate_total=%.6f", fit_rate(pts));
        sink.line(buf);
    }
    sink.flush();
    return 0;
}

int cmd_diagnose(const std::string& constants_path, const std::string& problem, double h, bool json,
                 const std::string& out) {
    AssumptionConstants c;
    if (!constants_path.empty()) {
        c = load_constants(constants_path);
    } else if (problem == "example1") {
        c = example1_constants();
    } else if (problem == "example2") {
        c = example2_constants();
    } else {
        throw InvalidArgument("diagnose needs --constants <file> or --problem example1|example2");
    }
    const DiagnosticsReport rep = check_conditions(c, h);
    const std::string js = to_json(rep).dump(2);
    if (json) {
        std::cout << js << '\n';
    } else {
        std::cout << format_table(rep);
    }
    if (!out.empty()) {
        std::ofstream o(out);
        if (!o) throw InvalidArgument("cannot open output file '" + out + "'");
        o << js << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled FBSDE solver: Markovian iteration experiments and convergence diagnostics"};
    app.set_config("--config", "", "TOML/INI file with option values (flags override it)");
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "solve one configuration and print a CSV record");
    add_run_flags(run, run_flags);
    run->add_option("--checkpoint", run_flags.checkpoint, "write every fitted field as JSON");

    RunFlags sweep_flags;
    std::string sweep_what = "N";
    std::vector<std::size_t> sweep_values;
    auto* sweep = app.add_subcommand("sweep", "run a list of N or M values on one Brownian sample");
    add_run_flags(sweep, sweep_flags);
    sweep->add_option("--sweep", sweep_what, "N | M")->capture_default_str();
    sweep->add_option("--values", sweep_values, "comma-separated values")->delimiter(',')->required();

    std::string constants_path, diag_problem;
    double diag_h = 0.0;
    bool diag_json = false;
    std::string diag_out;
    auto* diag = app.add_subcommand("diagnose", "evaluate the convergence constants and conditions");
    diag->add_option("--constants", constants_path, "key = value file with the assumption constants");
    diag->add_option("--problem", diag_problem, "use the built-in constants of example1 or example2");
    diag->add_option("--step", diag_h, "step size for the A, B, D constants (default T/1024)");
    diag->add_flag("--json", diag_json, "print JSON instead of the table");
    diag->add_option("--out", diag_out, "also write the JSON report to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*run) return cmd_run(run_flags);
        if (*sweep) return cmd_sweep(sweep_flags, sweep_what, sweep_values);
        if (*diag) return cmd_diagnose(constants_path, diag_problem, diag_h, diag_json, diag_out);
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const RankDeficient& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
