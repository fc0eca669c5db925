#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "parseq/fixedpoint.hpp"

namespace parseq {

enum class ExperimentKind { S5, Gru, Langevin, CustomLds };
enum class OutputFormat { Csv, Jsonl };

const char* experiment_name(ExperimentKind kind);
ExperimentKind parse_experiment(const std::string& name);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::S5;
    // newton, quasi-newton, picard, jacobi, scale-elk, clip-elk, sequential
    std::vector<std::string> methods;
    std::vector<std::size_t> seq_lens;
    std::vector<std::size_t> dims;  // empty: per-experiment default
    std::size_t seeds = 10;
    std::size_t batch = 16;
    double tolerance = 5e-4;
    double epsilon = 1e-5;     // Langevin step
    std::size_t mixture_k = 2; // Langevin mixture components
    double elk_scale = 0.1;    // k for the scale-elk method
    Evaluation evaluation = Evaluation::ParallelScan;
    std::string output;        // empty: no file written
    OutputFormat format = OutputFormat::Csv;
    std::uint64_t root_seed = 0;
};

struct ResultRow {
    std::string experiment;
    std::string method;
    std::size_t seq_len = 0;      // T
    std::size_t dim = 0;          // D
    std::size_t seed = 0;
    std::size_t batch_index = 0;
    std::size_t iterations = 0;
    bool converged = false;
    double final_merit = 0.0;
    std::int64_t wall_nanos = 0;
};

struct ExperimentOutcome {
    std::vector<ResultRow> rows;
    bool all_ok = false;  // every row converged (or was expected not to)
};

// Runs every (method, T, D, seed, batch member) cell, writes the result file
// when configured, and prints a per-(method, T, D) median-iterations summary.
ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

// Header: experiment,method,T,D,seed,batch_index,iterations,converged,final_merit,wall_nanos
void write_csv(std::ostream& out, std::span<const ResultRow> rows);
void write_jsonl(std::ostream& out, std::span<const ResultRow> rows);

// Per-run dynamics seed: the published derivation chain
// mix_seed(root, hash(experiment), hash(method), T, D, seed_index, batch_index).
std::uint64_t derive_run_seed(std::uint64_t root_seed, const std::string& experiment,
                              const std::string& method, std::size_t seq_len,
                              std::size_t dim, std::size_t seed_index,
                              std::size_t batch_index);

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// The bundled property suites behind `parseq verify`: scan-vs-sequential
// equivalence, chord-system nilpotency across all schemes and dynamics, and
// per-iteration prefix exactness.
std::vector<SuiteResult> run_verify_suites();

}  // namespace parseq
