#include <doctest.h>

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "parseq/experiment.hpp"

using namespace parseq;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig config;
    config.experiment = ExperimentKind::S5;
    config.methods = {"newton"};
    config.seq_lens = {8};
    config.dims = {5};
    config.seeds = 2;
    config.batch = 2;
    return config;
}

// Strip the wall_nanos column (last CSV field) for determinism comparisons.
std::string without_wall_nanos(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t comma = line.rfind(',');
        out << line.substr(0, comma) << "\n";
    }
    return out.str();
}

}  // namespace

TEST_CASE("csv header is stable") {
    std::ostringstream out;
    write_csv(out, {});
    CHECK(out.str() ==
          "experiment,method,T,D,seed,batch_index,iterations,converged,final_merit,"
          "wall_nanos\n");
}

TEST_CASE("newton on the word problem needs one iteration per row") {
    std::ostringstream log;
    ExperimentConfig config = small_config();
    config.seq_lens = {8, 64};
    config.seeds = 3;
    ExperimentOutcome outcome = run_experiment(config, log);
    CHECK(outcome.all_ok);
    CHECK(outcome.rows.size() == 2 * 3 * 2);
    for (const ResultRow& row : outcome.rows) {
        CHECK(row.iterations == 1);
        CHECK(row.converged);
        CHECK(row.final_merit <= config.tolerance);
    }
}

TEST_CASE("jacobi takes exactly T iterations on the word problem") {
    std::ostringstream log;
    ExperimentConfig config = small_config();
    config.methods = {"jacobi"};
    config.seq_lens = {8};
    ExperimentOutcome outcome = run_experiment(config, log);
    CHECK(outcome.all_ok);
    for (const ResultRow& row : outcome.rows) {
        CHECK(row.iterations == 8);
        CHECK(row.converged);
    }
}

TEST_CASE("a length-one sequence converges in one iteration for every method") {
    std::ostringstream log;
    ExperimentConfig config;
    config.experiment = ExperimentKind::CustomLds;
    config.methods = {"newton", "quasi-newton", "picard", "jacobi", "scale-elk",
                      "clip-elk"};
    config.seq_lens = {1};
    config.dims = {3};
    config.seeds = 2;
    config.batch = 2;
    ExperimentOutcome outcome = run_experiment(config, log);
    CHECK(outcome.all_ok);
    for (const ResultRow& row : outcome.rows) {
        CHECK(row.iterations == 1);
        CHECK(row.converged);
    }
}

TEST_CASE("result files are byte-identical apart from wall_nanos") {
    ExperimentConfig config = small_config();
    config.methods = {"newton", "picard"};
    std::ostringstream log1, log2;
    ExperimentOutcome a = run_experiment(config, log1);
    ExperimentOutcome b = run_experiment(config, log2);
    std::ostringstream csv_a, csv_b;
    write_csv(csv_a, a.rows);
    write_csv(csv_b, b.rows);
    CHECK(without_wall_nanos(csv_a.str()) == without_wall_nanos(csv_b.str()));

    std::ostringstream jsonl;
    write_jsonl(jsonl, a.rows);
    // One JSON object per row, same field names as the CSV schema.
    CHECK(jsonl.str().find("\"experiment\"") != std::string::npos);
    CHECK(jsonl.str().find("\"batch_index\"") != std::string::npos);
    CHECK(jsonl.str().find("\"wall_nanos\"") != std::string::npos);
}

TEST_CASE("per-run seeds differ across grid coordinates") {
    const std::uint64_t base = derive_run_seed(0, "s5", "newton", 8, 5, 0, 0);
    CHECK(base != derive_run_seed(0, "s5", "newton", 8, 5, 0, 1));
    CHECK(base != derive_run_seed(0, "s5", "newton", 8, 5, 1, 0));
    CHECK(base != derive_run_seed(0, "s5", "newton", 16, 5, 0, 0));
    CHECK(base != derive_run_seed(0, "s5", "picard", 8, 5, 0, 0));
    CHECK(base != derive_run_seed(1, "s5", "newton", 8, 5, 0, 0));
    CHECK(base != derive_run_seed(0, "gru", "newton", 8, 5, 0, 0));
    CHECK(base == derive_run_seed(0, "s5", "newton", 8, 5, 0, 0));
}

TEST_CASE("invalid configurations are rejected") {
    std::ostringstream log;
    ExperimentConfig config = small_config();
    config.methods = {"not-a-method"};
    CHECK_THROWS_AS(run_experiment(config, log), std::invalid_argument);
    config = small_config();
    config.seq_lens.clear();
    CHECK_THROWS_AS(run_experiment(config, log), std::invalid_argument);
    config = small_config();
    config.tolerance = -1.0;
    CHECK_THROWS_AS(run_experiment(config, log), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment("nope"), std::invalid_argument);
}

TEST_CASE("sequential baseline rows record T iterations and zero merit") {
    std::ostringstream log;
    ExperimentConfig config = small_config();
    config.methods = {"sequential"};
    ExperimentOutcome outcome = run_experiment(config, log);
    CHECK(outcome.all_ok);
    for (const ResultRow& row : outcome.rows) {
        CHECK(row.iterations == row.seq_len);
        CHECK(row.converged);
        CHECK(row.final_merit == 0.0);
    }
}

TEST_CASE("verify suites pass on this build") {
    for (const SuiteResult& suite : run_verify_suites()) {
        INFO(suite.name, ": ", suite.detail);
        CHECK(suite.passed);
    }
}
