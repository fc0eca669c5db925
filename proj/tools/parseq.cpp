// Experiment harness: evaluates nonlinear recursions with fixed-point methods
// backed by a parallel scan and reports iterations-to-converge per method.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "parseq/experiment.hpp"

namespace {

int run_command(const parseq::ExperimentConfig& config) {
    try {
        parseq::ExperimentOutcome outcome = parseq::run_experiment(config, std::cout);
        return outcome.all_ok ? 0 : 1;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}

int verify_command() {
    bool all = true;
    for (const parseq::SuiteResult& suite : parseq::run_verify_suites()) {
        std::cout << (suite.passed ? "[PASS] " : "[FAIL] ") << suite.name << " ("
                  << suite.detail << ")\n";
        all = all && suite.passed;
    }
    std::cout << (all ? "verify: all suites passed\n" : "verify: FAILURES\n");
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parseq: parallel evaluation of nonlinear recursions"};
    app.require_subcommand(1);

    parseq::ExperimentConfig config;
    std::string experiment = "s5";
    std::string methods = "newton,quasi-newton,picard";
    std::string seq_lens = "64";
    std::string dims;
    std::string eval = "scan";
    std::string format = "csv";

    CLI::App* run = app.add_subcommand("run", "run an experiment grid");
    run->add_option("--experiment", experiment, "s5 | gru | langevin | custom-lds")
        ->capture_default_str();
    run->add_option("--methods", methods,
                    "comma list: newton,quasi-newton,picard,jacobi,scale-elk,clip-elk,"
                    "sequential")
        ->capture_default_str();
    run->add_option("--seq-lens", seq_lens, "comma list of sequence lengths T")
        ->capture_default_str();
    run->add_option("--dims", dims, "comma list of state dimensions D");
    run->add_option("--seeds", config.seeds, "random seeds per cell")
        ->capture_default_str();
    run->add_option("--batch", config.batch, "independent problems per seed")
        ->capture_default_str();
    run->add_option("--tol", config.tolerance, "merit tolerance")
        ->capture_default_str();
    run->add_option("--epsilon", config.epsilon, "Langevin step size")
        ->capture_default_str();
    run->add_option("--mixture-k", config.mixture_k, "Langevin mixture components")
        ->capture_default_str();
    run->add_option("--elk-k", config.elk_scale, "scale-elk factor k")
        ->capture_default_str();
    run->add_option("--eval", eval, "scan | sequential")->capture_default_str();
    run->add_option("--output", config.output, "result file path");
    run->add_option("--format", format, "csv | jsonl")->capture_default_str();
    run->add_option("--root-seed", config.root_seed, "root seed")
        ->capture_default_str();

    CLI::App* verify = app.add_subcommand("verify", "run the bundled property suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (verify->parsed()) return verify_command();

    auto split = [](const std::string& csv) {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (start <= csv.size()) {
            std::size_t comma = csv.find(',', start);
            if (comma == std::string::npos) comma = csv.size();
            if (comma > start) out.push_back(csv.substr(start, comma - start));
            start = comma + 1;
        }
        return out;
    };

    try {
        config.experiment = parseq::parse_experiment(experiment);
        config.methods = split(methods);
        for (const std::string& s : split(seq_lens)) {
            config.seq_lens.push_back(std::stoull(s));
        }
        for (const std::string& s : split(dims)) config.dims.push_back(std::stoull(s));
        if (eval == "scan") {
            config.evaluation = parseq::Evaluation::ParallelScan;
        } else if (eval == "sequential") {
            config.evaluation = parseq::Evaluation::SequentialLds;
        } else {
            throw std::invalid_argument("unknown --eval value: " + eval);
        }
        if (format == "csv") {
            config.format = parseq::OutputFormat::Csv;
        } else if (format == "jsonl") {
            config.format = parseq::OutputFormat::Jsonl;
        } else {
            throw std::invalid_argument("unknown --format value: " + format);
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }

    return run_command(config);
}
