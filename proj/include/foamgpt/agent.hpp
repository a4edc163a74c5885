#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "foamgpt/case_model.hpp"
#include "foamgpt/llm_backend.hpp"

namespace foamgpt {

struct IterationLimits {
    int max_iterations = 20;
    int per_run_wall_seconds = 600;
    double token_budget_fraction = 0.8;
};

enum class TaskKind { Generate, Modify };

struct ProvidedFile {
    std::string path;  // case-relative destination
    std::string bytes;
};

struct TaskSpec {
    std::string id;
    std::string label;  // display name for report rows; falls back to id
    TaskKind kind = TaskKind::Generate;
    std::string description;
    std::optional<CaseTree> baseline_case;  // required for modify tasks
    std::vector<ProvidedFile> provided_files;
    std::string provided_label;  // e.g. "polyMesh"; joined basenames when empty
    std::vector<Assertion> assertions;
    std::string solver_hint;
    IterationLimits limits;
    // Paper-recorded observations per model (pass | fail | not_tested); kept as
    // metadata for comparison, never asserted against live runs.
    std::map<std::string, std::string> expected;
    std::string note;

    std::string display_label() const { return label.empty() ? id : label; }
    std::vector<std::string> provided_display() const;
};

struct Command {
    std::string program;
    std::vector<std::string> args;

    std::string display() const;
};

enum class PlanOrigin { Llm, Fallback };

struct ExecutionPlan {
    std::vector<std::string> files_to_generate;
    std::vector<Command> commands;  // nonempty; solver last
    std::vector<std::string> copies;
    std::string solver;
    PlanOrigin origin = PlanOrigin::Llm;
    std::vector<std::string> warnings;
};

enum class ErrorSource { ExitCode, FatalPattern, Timeout, Validation };

struct ErrorReport {
    ErrorSource source = ErrorSource::Validation;
    std::string excerpt;
    std::string command;
    std::optional<std::string> keyword;
};

struct RunOutcome {
    bool success = true;
    std::optional<ErrorReport> error;
};

struct CommandResult {
    int exit_code = 0;
    std::string log;
    bool timed_out = false;
};

// Executes a single plan command in a case directory. RealRunner spawns the
// actual OpenFOAM executables; MockRunner substitutes static validation.
class Runner {
public:
    virtual ~Runner() = default;
    virtual CommandResult run(const Command& cmd, const std::filesystem::path& case_dir,
                              const ExecutionPlan& plan) = 0;
    virtual bool available(const Command& cmd) const = 0;
};

class RealRunner final : public Runner {
public:
    explicit RealRunner(int wall_seconds = 600) : wall_seconds_(wall_seconds) {}
    CommandResult run(const Command& cmd, const std::filesystem::path& case_dir,
                      const ExecutionPlan& plan) override;
    bool available(const Command& cmd) const override;

private:
    int wall_seconds_;
};

class MockRunner final : public Runner {
public:
    MockRunner() = default;

    // Scripted outcome per solver invocation: nullopt = forced pass, string =
    // forced failure with that fatal message. Exhausted schedule falls back to
    // static validation.
    void set_schedule(std::vector<std::optional<std::string>> schedule);

    CommandResult run(const Command& cmd, const std::filesystem::path& case_dir,
                      const ExecutionPlan& plan) override;
    bool available(const Command&) const override { return true; }

private:
    std::vector<std::optional<std::string>> schedule_;
    std::size_t next_ = 0;
};

enum class TrialOutcome { Success, FailedMaxIterations, FailedUnrecoverable, FailedTaskCheck };

std::string to_string(TrialOutcome outcome);
std::optional<TrialOutcome> trial_outcome_from_string(std::string_view s);

struct TrialRecord {
    std::string task_id;
    std::string label;
    std::vector<std::string> files_provided;
    std::string backend_model;
    int iterations_used = 0;
    TrialOutcome outcome = TrialOutcome::FailedUnrecoverable;
    UsageTotals usage;
    MicroUsd cost = 0;
    std::optional<ErrorReport> final_error;
    std::string transcript_path;  // relative to the trial/results root
    std::string final_case_dir;   // relative; empty when no iteration completed
    std::string failure_note;
};

class AgentError : public std::runtime_error {
public:
    enum class Kind { NoFilesFound, NoPlanPossible, BudgetImpossible, RunnerUnavailable };

    AgentError(Kind k, const std::string& message) : std::runtime_error(message), kind(k) {}

    Kind kind;
};

// Zero-shot by default: the hook interface exists, the null implementation
// returns nothing.
class RetrievalHook {
public:
    virtual ~RetrievalHook() = default;
    virtual std::vector<std::string> retrieve(const std::string& query) = 0;
};

class NullRetrieval final : public RetrievalHook {
public:
    std::vector<std::string> retrieve(const std::string&) override { return {}; }
};

struct AgentConfig {
    std::string system_prompt;   // file-emission protocol prompt
    std::string planner_prompt;  // plan-eliciting prompt
    RetrievalHook* retrieval = nullptr;  // nullptr = disabled
};

// One planning call; malformed plans fall back to the solver-hint template.
ExecutionPlan build_plan(const TaskSpec& task, Backend& backend, const AgentConfig& cfg);

// Extracts `FILE: <path>` + fenced block sections (also fences whose first
// line is a `// <path>` comment). Later duplicates override earlier ones.
// Throws AgentError{NoFilesFound} when nothing matches.
std::vector<std::pair<std::string, std::string>> interpret_files(const std::string& response);

// Runs plan commands in order, capturing each log to `log.<program>`; stops at
// the first failure.
RunOutcome execute_commands(const std::filesystem::path& case_dir, const ExecutionPlan& plan,
                            Runner& runner);

std::optional<ErrorReport> extract_error(const std::string& log_text, int exit_code);

// Builds the correction request under the context budget: case files are
// dropped mesh-first (the file implicated by err is kept last), then the error
// excerpt is truncated. The task description is never dropped.
ChatRequest compose_retry(const TaskSpec& task, const CaseTree& current_case,
                          const ErrorReport& err, const Pricing& pricing,
                          const IterationLimits& limits, const AgentConfig& cfg);

TrialRecord run_agent(const TaskSpec& task, Backend& backend, Runner& runner,
                      const std::filesystem::path& workdir, const AgentConfig& cfg);

// check_task per the benchmark contract: assertions evaluated on the case AST.
CheckResult check_task(const CaseTree& tree, const TaskSpec& task);

// Single-line JSON for JSONL persistence; parsing throws std::runtime_error
// with a field-naming message on schema problems.
std::string trial_record_to_json(const TrialRecord& record);
TrialRecord trial_record_from_json(const std::string& line);

std::string to_string(ErrorSource source);
std::optional<ErrorSource> error_source_from_string(std::string_view s);

}  // namespace foamgpt
