#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "foamgpt/agent.hpp"

namespace foamgpt {

struct Suite {
    std::string name;
    std::vector<TaskSpec> tasks;
    std::filesystem::path fixtures_root;
};

enum class RunnerKind { Mock, Real };

struct BenchConfig {
    std::vector<BackendConfig> backends;
    RunnerKind runner = RunnerKind::Mock;
    int parallelism = 1;
    std::filesystem::path output_dir;
    std::vector<Pricing> pricing_table;  // default table when empty
    AgentConfig agent;
    int repeat = 1;
};

class SuiteError : public std::runtime_error {
public:
    enum class Kind { Schema, MissingFixture, Io };

    SuiteError(Kind k, const std::string& message) : std::runtime_error(message), kind(k) {}

    Kind kind;
};

// Parses a suite JSON file; baseline cases and provided files resolve against
// the suite's fixtures_root.
Suite load_suite(const std::filesystem::path& path);

// Runs every (task x backend x repeat) trial, up to cfg.parallelism at a time,
// each in its own workdir under output_dir. Records append to
// <output_dir>/<suite>.results.jsonl as they complete; the returned list is in
// deterministic suite order.
std::vector<TrialRecord> run_suite(const Suite& suite, const BenchConfig& cfg);

enum class TableFormat { Markdown, Csv };

std::string render_table(const std::vector<TrialRecord>& records, TableFormat format);

void persist_records(const std::vector<TrialRecord>& records,
                     const std::filesystem::path& path);
std::vector<TrialRecord> load_records(const std::filesystem::path& path);

// 71000 -> "71k"; small counts stay plain.
std::string format_token_count(std::int64_t tokens);
// 250000 micro-USD -> "$0.25"; keeps 2-3 decimals as the report tables do.
std::string format_cost_dollars(MicroUsd cost);

}  // namespace foamgpt
