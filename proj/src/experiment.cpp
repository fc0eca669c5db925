#include "parseq/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "parseq/chordcheck.hpp"
#include "parseq/models.hpp"
#include "parseq/parallel.hpp"
#include "parseq/rng.hpp"

namespace parseq {

const char* experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::S5: return "s5";
        case ExperimentKind::Gru: return "gru";
        case ExperimentKind::Langevin: return "langevin";
        case ExperimentKind::CustomLds: return "custom-lds";
    }
    return "unknown";
}

ExperimentKind parse_experiment(const std::string& name) {
    if (name == "s5") return ExperimentKind::S5;
    if (name == "gru") return ExperimentKind::Gru;
    if (name == "langevin") return ExperimentKind::Langevin;
    if (name == "custom-lds") return ExperimentKind::CustomLds;
    throw std::invalid_argument("unknown experiment: " + name);
}

std::uint64_t derive_run_seed(std::uint64_t root_seed, const std::string& experiment,
                              const std::string& method, std::size_t seq_len,
                              std::size_t dim, std::size_t seed_index,
                              std::size_t batch_index) {
    return mix_seed(root_seed, hash_string(experiment), hash_string(method), seq_len,
                    dim, seed_index, batch_index);
}

namespace {

Scheme scheme_for(const std::string& method, double elk_scale) {
    if (method == "newton") return Scheme::newton();
    if (method == "quasi-newton") return Scheme::quasi_newton();
    if (method == "picard") return Scheme::picard();
    if (method == "jacobi") return Scheme::jacobi();
    if (method == "scale-elk") return Scheme::scale_elk(elk_scale);
    if (method == "clip-elk") return Scheme::clip_elk();
    throw std::invalid_argument("unknown method: " + method);
}

std::size_t default_dim(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::S5: return 5;
        case ExperimentKind::Gru: return 16;
        case ExperimentKind::Langevin: return 8;
        case ExperimentKind::CustomLds: return 4;
    }
    return 4;
}

struct ProblemInstance {
    DynamicsFunction f;
    std::vector<double> x0;
};

ProblemInstance build_instance(const ExperimentConfig& config, std::size_t seq_len,
                               std::size_t dim, std::uint64_t seed) {
    switch (config.experiment) {
        case ExperimentKind::S5: {
            PermutationWordProblem problem = random_word_problem(dim, seq_len, seed);
            return {permutation_word_dynamics(problem), problem.x0};
        }
        case ExperimentKind::Gru: {
            GruParameters params = random_gru(dim, dim, seq_len, seed);
            return {gru_dynamics(params), std::vector<double>(dim, 0.0)};
        }
        case ExperimentKind::Langevin: {
            LangevinSpec spec = random_langevin(dim, config.mixture_k, seq_len,
                                                config.epsilon, seed);
            auto x0 = spec.x0;
            return {langevin_dynamics(spec), std::move(x0)};
        }
        case ExperimentKind::CustomLds: {
            LinearDynamicsSpec spec = random_linear_dynamics(dim, seq_len, seed);
            auto x0 = spec.x0;
            return {linear_dynamics(spec), std::move(x0)};
        }
    }
    throw std::logic_error("build_instance: unknown experiment");
}

void validate(const ExperimentConfig& config) {
    if (config.methods.empty()) throw std::invalid_argument("no methods given");
    if (config.seq_lens.empty()) throw std::invalid_argument("no sequence lengths given");
    if (config.seeds < 1 || config.batch < 1) {
        throw std::invalid_argument("seeds and batch must be positive");
    }
    if (config.tolerance < 0.0) throw std::invalid_argument("tolerance must be >= 0");
    if (config.epsilon <= 0.0) throw std::invalid_argument("epsilon must be > 0");
    if (config.mixture_k < 1) throw std::invalid_argument("mixture-k must be >= 1");
    for (const auto& m : config.methods) {
        if (m != "sequential") scheme_for(m, config.elk_scale);  // throws on bad name
    }
}

ResultRow run_cell(const ExperimentConfig& config, const std::string& method,
                   std::size_t seq_len, std::size_t dim, std::size_t seed_index,
                   std::size_t batch_index) {
    ResultRow row;
    row.experiment = experiment_name(config.experiment);
    row.method = method;
    row.seq_len = seq_len;
    row.dim = dim;
    row.seed = seed_index;
    row.batch_index = batch_index;

    const std::uint64_t run_seed = derive_run_seed(
        config.root_seed, row.experiment, method, seq_len, dim, seed_index, batch_index);
    ProblemInstance instance = build_instance(config, seq_len, dim, run_seed);

    using clock = std::chrono::steady_clock;
    const auto tic = clock::now();
    if (method == "sequential") {
        // Baseline rollout: one state per step, recorded as T iterations.
        StateTrajectory traj;
        traj.x0 = instance.x0;
        traj.length = seq_len;
        traj.dim = dim;
        traj.states = instance.f.rollout(instance.x0);
        row.iterations = seq_len;
        row.converged = true;
        row.final_merit = residual_and_merit(instance.x0, traj, instance.f).second;
    } else {
        SolverConfig solver;
        solver.tolerance = config.tolerance;
        solver.evaluation = config.evaluation;
        solver.jacobian_mode = JacobianMode::analytic();
        try {
            SolveReport report =
                solve(instance.f, instance.x0, solver, scheme_for(method, config.elk_scale));
            row.iterations = report.iterations;
            row.converged = report.converged;
            row.final_merit = report.merit_history.back();
        } catch (const DivergedError& err) {
            row.iterations = err.iteration;
            row.converged = false;
            row.final_merit = err.merit;
        }
    }
    row.wall_nanos =
        std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - tic).count();
    return row;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool row_ok(const ResultRow& row) {
    // Jacobi needing exactly T iterations is expected behaviour, not failure.
    return row.converged || (row.method == "jacobi" && row.iterations == row.seq_len);
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream& log) {
    validate(config);
    std::vector<std::size_t> dims = config.dims;
    if (dims.empty()) dims.push_back(default_dim(config.experiment));

    struct CellKey {
        std::size_t method, seq, dim, seed, batch;
    };
    std::vector<CellKey> cells;
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
        for (std::size_t t = 0; t < config.seq_lens.size(); ++t) {
            for (std::size_t d = 0; d < dims.size(); ++d) {
                for (std::size_t s = 0; s < config.seeds; ++s) {
                    for (std::size_t b = 0; b < config.batch; ++b) {
                        cells.push_back({m, t, d, s, b});
                    }
                }
            }
        }
    }

    ExperimentOutcome outcome;
    outcome.rows.resize(cells.size());
    parallel_for(
        0, cells.size(),
        [&](std::size_t i) {
            const CellKey& c = cells[i];
            outcome.rows[i] = run_cell(config, config.methods[c.method],
                                       config.seq_lens[c.seq], dims[c.dim], c.seed,
                                       c.batch);
        },
        /*grain=*/1);

    outcome.all_ok = std::all_of(outcome.rows.begin(), outcome.rows.end(), row_ok);

    // Per-(method, T, D) median iteration summary, figure style.
    std::map<std::tuple<std::string, std::size_t, std::size_t>, std::vector<double>>
        groups;
    for (const ResultRow& row : outcome.rows) {
        groups[{row.method, row.seq_len, row.dim}].push_back(
            static_cast<double>(row.iterations));
    }
    log << "experiment " << experiment_name(config.experiment) << ": " << cells.size()
        << " runs, " << (outcome.all_ok ? "all ok" : "FAILURES") << "\n";
    log << std::left << std::setw(14) << "method" << std::right << std::setw(8) << "T"
        << std::setw(6) << "D" << std::setw(8) << "runs" << std::setw(14)
        << "median-iters" << "\n";
    for (const auto& [key, iters] : groups) {
        log << std::left << std::setw(14) << std::get<0>(key) << std::right
            << std::setw(8) << std::get<1>(key) << std::setw(6) << std::get<2>(key)
            << std::setw(8) << iters.size() << std::setw(14) << median(iters) << "\n";
    }

    if (!config.output.empty()) {
        std::ofstream out(config.output);
        if (!out) throw std::runtime_error("cannot open output file: " + config.output);
        if (config.format == OutputFormat::Csv) {
            write_csv(out, outcome.rows);
        } else {
            write_jsonl(out, outcome.rows);
        }
        log << "wrote " << outcome.rows.size() << " rows to " << config.output << "\n";
    }
    return outcome;
}

void write_csv(std::ostream& out, std::span<const ResultRow> rows) {
    out << "experiment,method,T,D,seed,batch_index,iterations,converged,final_merit,"
           "wall_nanos\n";
    for (const ResultRow& r : rows) {
        out << r.experiment << ',' << r.method << ',' << r.seq_len << ',' << r.dim << ','
            << r.seed << ',' << r.batch_index << ',' << r.iterations << ','
            << (r.converged ? "true" : "false") << ','
            << std::setprecision(17) << r.final_merit << ',' << r.wall_nanos << "\n";
    }
}

void write_jsonl(std::ostream& out, std::span<const ResultRow> rows) {
    for (const ResultRow& r : rows) {
        nlohmann::ordered_json j;
        j["experiment"] = r.experiment;
        j["method"] = r.method;
        j["T"] = r.seq_len;
        j["D"] = r.dim;
        j["seed"] = r.seed;
        j["batch_index"] = r.batch_index;
        j["iterations"] = r.iterations;
        j["converged"] = r.converged;
        j["final_merit"] = r.final_merit;
        j["wall_nanos"] = r.wall_nanos;
        out << j.dump() << "\n";
    }
}

// ---------------------------------------------------------------------------
// Verify suites
// ---------------------------------------------------------------------------

namespace {

TransitionMatrix random_transition(Rng& rng, std::size_t d, int tag_pick) {
    switch (tag_pick) {
        case 0: return TransitionMatrix::identity(d);
        case 1: return TransitionMatrix::zero(d);
        case 2: return TransitionMatrix::scaled_identity(d, rng.uniform(-1.0, 1.0));
        case 3: {
            std::vector<double> diag(d);
            for (double& v : diag) v = rng.uniform(-1.0, 1.0);
            return TransitionMatrix::diagonal(std::move(diag));
        }
        case 4: {
            std::vector<std::uint32_t> perm(d);
            for (std::size_t i = 0; i < d; ++i) perm[i] = static_cast<std::uint32_t>(i);
            for (std::size_t i = d; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
            return TransitionMatrix::permutation(std::move(perm));
        }
        default: {
            std::vector<double> vals(d * d);
            for (double& v : vals) v = rng.uniform(-1.0, 1.0) / static_cast<double>(d);
            return TransitionMatrix::dense(d, std::move(vals));
        }
    }
}

SuiteResult scan_suite() {
    SuiteResult result{"scan-vs-sequential", true, ""};
    Rng rng(0x5eed5ca11);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t t_len = 1 + rng.below(129);
        const std::size_t d = 1 + rng.below(6);
        const int tag_pick = static_cast<int>(rng.below(7));  // 6 = mixed
        std::vector<AffineElement> elems;
        elems.reserve(t_len);
        for (std::size_t t = 0; t < t_len; ++t) {
            const int pick = tag_pick == 6 ? static_cast<int>(rng.below(6)) : tag_pick;
            AffineElement e{random_transition(rng, d, pick), std::vector<double>(d)};
            for (double& v : e.b) v = rng.uniform(-1.0, 1.0);
            elems.push_back(std::move(e));
        }
        std::vector<double> x0(d);
        for (double& v : x0) v = rng.uniform(-1.0, 1.0);

        StateTrajectory seq = evaluate_lds_sequential(x0, elems);
        StateTrajectory par = evaluate_lds_parallel(x0, elems);
        for (std::size_t i = 0; i < seq.states.size(); ++i) {
            const double err = std::abs(par.states[i] - seq.states[i]) /
                               std::max(1.0, std::abs(seq.states[i]));
            worst = std::max(worst, err);
        }
    }
    result.passed = worst <= 1e-8;
    std::ostringstream detail;
    detail << "max relative deviation " << worst;
    result.detail = detail.str();
    return result;
}

std::vector<std::pair<std::string, ProblemInstance>> verify_dynamics() {
    std::vector<std::pair<std::string, ProblemInstance>> out;
    {
        PermutationWordProblem p = random_word_problem(3, 4, 11);
        out.emplace_back("word", ProblemInstance{permutation_word_dynamics(p), p.x0});
    }
    {
        GruParameters p = random_gru(2, 2, 4, 12);
        out.emplace_back("gru",
                         ProblemInstance{gru_dynamics(p), std::vector<double>(2, 0.0)});
    }
    {
        LangevinSpec spec = random_langevin(2, 2, 4, 1e-5, 13);
        auto x0 = spec.x0;
        out.emplace_back("langevin", ProblemInstance{langevin_dynamics(spec), x0});
    }
    return out;
}

std::vector<Scheme> all_schemes() {
    return {Scheme::newton(),
            Scheme::quasi_newton(),
            Scheme::picard(),
            Scheme::jacobi(),
            Scheme::scale_elk(0.5, Scheme::Kind::Newton),
            Scheme::clip_elk()};
}

SuiteResult chord_suite() {
    SuiteResult result{"chord-sigma-nilpotency", true, ""};
    double worst = 0.0;
    for (auto& [name, instance] : verify_dynamics()) {
        StateTrajectory truth;
        truth.x0 = instance.x0;
        truth.length = instance.f.horizon;
        truth.dim = instance.f.dim;
        truth.states = instance.f.rollout(instance.x0);
        for (const Scheme& scheme : all_schemes()) {
            BlockSystem sys = build_block_system(instance.f, truth, instance.x0, scheme);
            worst = std::max(worst, nilpotency_defect(sys));
        }
    }
    result.passed = worst <= 1e-8;
    std::ostringstream detail;
    detail << "max ||M^T||_F " << worst << " over 6 schemes x 3 dynamics";
    result.detail = detail.str();
    return result;
}

SuiteResult prefix_suite() {
    SuiteResult result{"prefix-exactness", true, ""};
    double worst = 0.0;
    for (auto& [name, instance] : verify_dynamics()) {
        const std::size_t t_len = instance.f.horizon;
        const std::size_t d = instance.f.dim;
        std::vector<double> truth = instance.f.rollout(instance.x0);
        for (const Scheme& scheme : all_schemes()) {
            for (std::size_t i = 1; i <= t_len; ++i) {
                SolverConfig config;
                config.tolerance = 0.0;
                config.max_iterations = i;
                SolveReport report = solve(instance.f, instance.x0, config, scheme);
                for (std::size_t t = 1; t <= i; ++t) {
                    for (std::size_t j = 0; j < d; ++j) {
                        const double want = truth[(t - 1) * d + j];
                        const double got = report.trajectory.state(t)[j];
                        worst = std::max(worst, std::abs(got - want) /
                                                    std::max(1.0, std::abs(want)));
                    }
                }
            }
        }
    }
    result.passed = worst <= 1e-6;
    std::ostringstream detail;
    detail << "max relative prefix deviation " << worst;
    result.detail = detail.str();
    return result;
}

}  // namespace

std::vector<SuiteResult> run_verify_suites() {
    return {scan_suite(), chord_suite(), prefix_suite()};
}

}  // namespace parseq
