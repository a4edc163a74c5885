#include "foamgpt/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace foamgpt {

namespace {

constexpr const char* kDefaultSystemPrompt =
    "You are an OpenFOAM case engineer targeting the OpenFOAM-v2406 release. "
    "You produce complete, runnable case files.\n"
    "Emit every file exactly in this format:\n"
    "FILE: <case-relative path>\n"
    "```\n"
    "<complete file contents>\n"
    "```\n"
    "Rules: emit whole files, never fragments; every dictionary starts with its "
    "FoamFile header block; no commentary between file blocks.";

constexpr const char* kDefaultPlannerPrompt =
    "You plan OpenFOAM case builds. Reply with one JSON object and no prose:\n"
    "{\"files\": [\"<case-relative paths to generate>\"], "
    "\"commands\": [\"<programs to run, in order>\"], \"solver\": \"<solver program>\"}\n"
    "The solver must be the final command.";

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.emplace_back(text.substr(start));
            break;
        }
        std::string line(text.substr(start, nl - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = nl + 1;
    }
    return lines;
}

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string basename_of(std::string_view path) {
    std::size_t slash = path.rfind('/');
    return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

// Appends one JSON object per LLM exchange; also accumulates usage.
class Transcript {
public:
    explicit Transcript(const fs::path& path) : out_(path, std::ios::app) {}

    void exchange(const std::string& phase, int iteration, const ChatRequest& req,
                  const ChatResponse& resp) {
        usage_ += resp.usage;
        if (!out_) return;
        json messages = json::array();
        for (const ChatMessage& m : req.messages)
            messages.push_back({{"role", m.role}, {"content", m.content}});
        json entry = {
            {"phase", phase},
            {"iteration", iteration},
            {"timestamp", now_iso8601()},
            {"request",
             {{"model", req.model}, {"temperature", req.temperature}, {"messages", messages}}},
            {"response",
             {{"content", resp.content},
              {"finish_reason", resp.finish_reason},
              {"usage",
               {{"input_tokens", resp.usage.input_tokens},
                {"output_tokens", resp.usage.output_tokens}}}}},
        };
        out_ << entry.dump() << '\n';
        out_.flush();
    }

    void note(const std::string& event, const json& detail) {
        if (!out_) return;
        json entry = {{"event", event}, {"timestamp", now_iso8601()}, {"detail", detail}};
        out_ << entry.dump() << '\n';
        out_.flush();
    }

    const UsageTotals& usage() const { return usage_; }

private:
    std::ofstream out_;
    UsageTotals usage_;
};

const std::string& system_prompt_of(const AgentConfig& cfg) {
    static const std::string fallback = kDefaultSystemPrompt;
    return cfg.system_prompt.empty() ? fallback : cfg.system_prompt;
}

const std::string& planner_prompt_of(const AgentConfig& cfg) {
    static const std::string fallback = kDefaultPlannerPrompt;
    return cfg.planner_prompt.empty() ? fallback : cfg.planner_prompt;
}

}  // namespace

std::vector<std::string> TaskSpec::provided_display() const {
    std::vector<std::string> out;
    if (!provided_label.empty()) {
        out.push_back(provided_label);
        return out;
    }
    for (const ProvidedFile& f : provided_files) out.push_back(basename_of(f.path));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string Command::display() const {
    std::string s = program;
    for (const std::string& a : args) {
        s += ' ';
        s += a;
    }
    return s;
}

std::string to_string(ErrorSource source) {
    switch (source) {
        case ErrorSource::ExitCode: return "exit_code";
        case ErrorSource::FatalPattern: return "fatal_pattern";
        case ErrorSource::Timeout: return "timeout";
        case ErrorSource::Validation: return "validation";
    }
    return "unknown";
}

std::optional<ErrorSource> error_source_from_string(std::string_view s) {
    if (s == "exit_code") return ErrorSource::ExitCode;
    if (s == "fatal_pattern") return ErrorSource::FatalPattern;
    if (s == "timeout") return ErrorSource::Timeout;
    if (s == "validation") return ErrorSource::Validation;
    return std::nullopt;
}

std::string trial_record_to_json(const TrialRecord& record) {
    json j;
    j["task_id"] = record.task_id;
    j["label"] = record.label;
    j["files_provided"] = record.files_provided;
    j["backend_model"] = record.backend_model;
    j["iterations_used"] = record.iterations_used;
    j["outcome"] = to_string(record.outcome);
    j["usage"] = {{"input_tokens", record.usage.input_tokens},
                  {"output_tokens", record.usage.output_tokens}};
    j["cost_micro_usd"] = record.cost;
    if (record.final_error) {
        j["final_error"] = {{"source", to_string(record.final_error->source)},
                            {"excerpt", record.final_error->excerpt},
                            {"command", record.final_error->command}};
        if (record.final_error->keyword)
            j["final_error"]["keyword"] = *record.final_error->keyword;
    } else {
        j["final_error"] = nullptr;
    }
    j["transcript_path"] = record.transcript_path;
    j["final_case_dir"] = record.final_case_dir;
    j["failure_note"] = record.failure_note;
    return j.dump();
}

TrialRecord trial_record_from_json(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw std::runtime_error("record line is not a JSON object");
    for (const char* field : {"task_id", "outcome", "usage"})
        if (!j.contains(field))
            throw std::runtime_error(std::string("record is missing field '") + field + "'");

    TrialRecord r;
    r.task_id = j["task_id"].get<std::string>();
    r.label = j.value("label", r.task_id);
    if (j.contains("files_provided"))
        for (const json& f : j["files_provided"]) r.files_provided.push_back(f.get<std::string>());
    r.backend_model = j.value("backend_model", "");
    r.iterations_used = j.value("iterations_used", 0);
    auto outcome = trial_outcome_from_string(j["outcome"].get<std::string>());
    if (!outcome)
        throw std::runtime_error("unknown outcome '" + j["outcome"].get<std::string>() + "'");
    r.outcome = *outcome;
    r.usage.input_tokens = j["usage"].value("input_tokens", 0);
    r.usage.output_tokens = j["usage"].value("output_tokens", 0);
    r.cost = j.value("cost_micro_usd", static_cast<MicroUsd>(0));
    if (j.contains("final_error") && j["final_error"].is_object()) {
        ErrorReport err;
        const json& e = j["final_error"];
        auto source = error_source_from_string(e.value("source", ""));
        err.source = source.value_or(ErrorSource::Validation);
        err.excerpt = e.value("excerpt", "");
        err.command = e.value("command", "");
        if (e.contains("keyword")) err.keyword = e["keyword"].get<std::string>();
        r.final_error = std::move(err);
    }
    r.transcript_path = j.value("transcript_path", "");
    r.final_case_dir = j.value("final_case_dir", "");
    r.failure_note = j.value("failure_note", "");
    return r;
}

std::string to_string(TrialOutcome outcome) {
    switch (outcome) {
        case TrialOutcome::Success: return "success";
        case TrialOutcome::FailedMaxIterations: return "failed_max_iterations";
        case TrialOutcome::FailedUnrecoverable: return "failed_unrecoverable";
        case TrialOutcome::FailedTaskCheck: return "failed_task_check";
    }
    return "unknown";
}

std::optional<TrialOutcome> trial_outcome_from_string(std::string_view s) {
    if (s == "success") return TrialOutcome::Success;
    if (s == "failed_max_iterations") return TrialOutcome::FailedMaxIterations;
    if (s == "failed_unrecoverable") return TrialOutcome::FailedUnrecoverable;
    if (s == "failed_task_check") return TrialOutcome::FailedTaskCheck;
    return std::nullopt;
}

//
// Builder
//

namespace {

// Finds the first balanced top-level JSON object in free-form model output.
std::optional<json> extract_json_object(const std::string& text) {
    std::size_t start = text.find('{');
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth == 0) {
                    json parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
                    break;
                }
            }
        }
        start = text.find('{', start + 1);
    }
    return std::nullopt;
}

std::optional<ExecutionPlan> plan_from_json(const json& j) {
    ExecutionPlan plan;
    if (j.contains("files") && j["files"].is_array())
        for (const json& f : j["files"])
            if (f.is_string()) plan.files_to_generate.push_back(f.get<std::string>());
    if (j.contains("commands") && j["commands"].is_array()) {
        for (const json& c : j["commands"]) {
            if (c.is_string()) {
                plan.commands.push_back({c.get<std::string>(), {}});
            } else if (c.is_array() && !c.empty() && c[0].is_string()) {
                Command cmd{c[0].get<std::string>(), {}};
                for (std::size_t i = 1; i < c.size(); ++i)
                    if (c[i].is_string()) cmd.args.push_back(c[i].get<std::string>());
                plan.commands.push_back(std::move(cmd));
            }
        }
    }
    if (j.contains("copies") && j["copies"].is_array())
        for (const json& c : j["copies"])
            if (c.is_string()) plan.copies.push_back(c.get<std::string>());
    if (j.contains("solver") && j["solver"].is_string())
        plan.solver = j["solver"].get<std::string>();

    if (plan.commands.empty()) return std::nullopt;
    if (plan.solver.empty()) plan.solver = plan.commands.back().program;
    if (plan.commands.back().program != plan.solver) plan.commands.push_back({plan.solver, {}});
    return plan;
}

bool task_has_path(const TaskSpec& task, std::string_view suffix) {
    for (const ProvidedFile& f : task.provided_files)
        if (f.path.size() >= suffix.size() &&
            f.path.compare(f.path.size() - suffix.size(), suffix.size(), suffix) == 0)
            return true;
    if (task.baseline_case)
        for (const auto& [path, entry] : task.baseline_case->entries)
            if (path.size() >= suffix.size() &&
                path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
                return true;
    return false;
}

ExecutionPlan fallback_plan(const TaskSpec& task) {
    if (task.solver_hint.empty())
        throw AgentError(AgentError::Kind::NoPlanPossible,
                         "plan response was malformed and the task has no solver hint");
    ExecutionPlan plan;
    plan.origin = PlanOrigin::Fallback;
    plan.solver = task.solver_hint;
    RequirementSet reqs = required_artifacts(task.solver_hint);
    plan.files_to_generate = reqs.required_files;

    bool has_mesh = task_has_path(task, "polyMesh/boundary");
    bool has_blockmesh = task_has_path(task, "blockMeshDict");
    if (has_blockmesh || !has_mesh) {
        plan.commands.push_back({"blockMesh", {}});
        if (!has_blockmesh) plan.files_to_generate.push_back("system/blockMeshDict");
    }
    bool wants_setfields =
        task_has_path(task, "setFieldsDict") ||
        std::find(reqs.required_files.begin(), reqs.required_files.end(),
                  "system/setFieldsDict") != reqs.required_files.end();
    if (wants_setfields) plan.commands.push_back({"setFields", {}});
    plan.commands.push_back({plan.solver, {}});
    for (const ProvidedFile& f : task.provided_files) plan.copies.push_back(f.path);
    return plan;
}

std::string plan_user_message(const TaskSpec& task) {
    std::ostringstream os;
    os << "Task: " << task.description << "\n";
    os << "Task kind: " << (task.kind == TaskKind::Modify ? "modify an existing case"
                                                          : "generate a new case")
       << "\n";
    if (!task.solver_hint.empty()) os << "Solver hint: " << task.solver_hint << "\n";
    if (!task.provided_files.empty()) {
        os << "Provided files:";
        for (const ProvidedFile& f : task.provided_files) os << ' ' << f.path;
        os << "\n";
    }
    return os.str();
}

ExecutionPlan build_plan_impl(const TaskSpec& task, Backend& backend, const AgentConfig& cfg,
                              Transcript* transcript) {
    ChatRequest req;
    req.model = backend.pricing().model;
    req.temperature = 0.0;
    req.messages.push_back({"system", planner_prompt_of(cfg)});
    req.messages.push_back({"user", plan_user_message(task)});

    ChatResponse resp = backend.send_chat(req);
    if (transcript) transcript->exchange("plan", 0, req, resp);

    if (auto obj = extract_json_object(resp.content)) {
        if (auto plan = plan_from_json(*obj)) {
            plan->origin = PlanOrigin::Llm;
            for (const ProvidedFile& f : task.provided_files)
                if (std::find(plan->copies.begin(), plan->copies.end(), f.path) ==
                    plan->copies.end())
                    plan->copies.push_back(f.path);
            return *plan;
        }
    }
    ExecutionPlan plan = fallback_plan(task);
    plan.warnings.push_back("plan response was not a usable JSON plan; fell back to the '" +
                            task.solver_hint + "' template");
    if (transcript) transcript->note("plan_fallback", plan.warnings.back());
    return plan;
}

}  // namespace

ExecutionPlan build_plan(const TaskSpec& task, Backend& backend, const AgentConfig& cfg) {
    return build_plan_impl(task, backend, cfg, nullptr);
}

//
// Interpreter
//

std::vector<std::pair<std::string, std::string>> interpret_files(const std::string& response) {
    std::vector<std::string> lines = split_lines(response);
    std::vector<std::string> order;
    std::map<std::string, std::string> content_by_path;

    auto record = [&](const std::string& path, std::string content) {
        if (content_by_path.find(path) == content_by_path.end()) order.push_back(path);
        content_by_path[path] = std::move(content);
    };

    auto is_fence = [](const std::string& line) { return trim(line).rfind("```", 0) == 0; };

    std::size_t i = 0;
    while (i < lines.size()) {
        std::string t = trim(lines[i]);
        if (t.rfind("FILE:", 0) == 0) {
            std::string path = trim(t.substr(5));
            std::size_t j = i + 1;
            while (j < lines.size() && trim(lines[j]).empty()) ++j;
            if (!path.empty() && j < lines.size() && is_fence(lines[j])) {
                std::vector<std::string> body;
                std::size_t k = j + 1;
                while (k < lines.size() && trim(lines[k]) != "```") body.push_back(lines[k++]);
                record(path, join_lines(body));
                i = k < lines.size() ? k + 1 : k;
                continue;
            }
            ++i;
            continue;
        }
        if (is_fence(lines[i])) {
            std::vector<std::string> body;
            std::size_t k = i + 1;
            while (k < lines.size() && trim(lines[k]) != "```") body.push_back(lines[k++]);
            // Accept a leading `// <path>` comment as the file name.
            if (!body.empty()) {
                std::string first = trim(body.front());
                if (first.rfind("//", 0) == 0) {
                    std::string path = trim(first.substr(2));
                    if (!path.empty() && path.find(' ') == std::string::npos &&
                        path.find('/') != std::string::npos) {
                        body.erase(body.begin());
                        record(path, join_lines(body));
                    }
                }
            }
            i = k < lines.size() ? k + 1 : k;
            continue;
        }
        ++i;
    }

    if (order.empty())
        throw AgentError(AgentError::Kind::NoFilesFound,
                         "response contained no FILE blocks");
    std::vector<std::pair<std::string, std::string>> files;
    files.reserve(order.size());
    for (const std::string& path : order) files.emplace_back(path, content_by_path[path]);
    return files;
}

//
// Error monitor
//

namespace {

std::string strip_token_punct(std::string token) {
    auto is_punct = [](char c) {
        return c == '\'' || c == '"' || c == ',' || c == ';' || c == ':' || c == '.' ||
               c == '(' || c == ')';
    };
    while (!token.empty() && is_punct(token.front())) token.erase(token.begin());
    while (!token.empty() && is_punct(token.back())) token.pop_back();
    return token;
}

std::optional<std::string> extract_keyword(const std::string& excerpt) {
    std::size_t pos = excerpt.find("keyword ");
    if (pos != std::string::npos) {
        std::istringstream is(excerpt.substr(pos + 8));
        std::string token;
        if (is >> token) {
            token = strip_token_punct(token);
            if (!token.empty()) return token;
        }
    }
    pos = excerpt.find(" not found");
    if (pos != std::string::npos) {
        // Quoted token right before "not found".
        std::string head = excerpt.substr(0, pos);
        for (char quote : {'\'', '"'}) {
            std::size_t close = head.rfind(quote);
            if (close == std::string::npos || close == 0) continue;
            std::size_t open = head.rfind(quote, close - 1);
            if (open == std::string::npos) continue;
            std::string token = head.substr(open + 1, close - open - 1);
            if (!token.empty() && token.find(' ') == std::string::npos) return token;
        }
    }
    return std::nullopt;
}

constexpr std::size_t kMaxExcerptLines = 40;

}  // namespace

std::optional<ErrorReport> extract_error(const std::string& log_text, int exit_code) {
    std::vector<std::string> lines = split_lines(log_text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find("FOAM FATAL ERROR") == std::string::npos &&
            lines[i].find("FOAM FATAL IO ERROR") == std::string::npos)
            continue;
        std::vector<std::string> excerpt;
        for (std::size_t j = i; j < lines.size() && excerpt.size() < kMaxExcerptLines; ++j) {
            excerpt.push_back(lines[j]);
            if (lines[j].find("FOAM exiting") != std::string::npos ||
                lines[j].find("FOAM aborting") != std::string::npos)
                break;
        }
        ErrorReport report;
        report.source = ErrorSource::FatalPattern;
        report.excerpt = join_lines(excerpt);
        report.keyword = extract_keyword(report.excerpt);
        return report;
    }
    if (exit_code != 0) {
        ErrorReport report;
        report.source = ErrorSource::ExitCode;
        std::size_t start = lines.size() > kMaxExcerptLines ? lines.size() - kMaxExcerptLines : 0;
        std::vector<std::string> tail(lines.begin() + start, lines.end());
        report.excerpt = join_lines(tail);
        if (report.excerpt.empty())
            report.excerpt = "process exited with code " + std::to_string(exit_code) + "\n";
        return report;
    }
    return std::nullopt;
}

//
// Runners
//

bool RealRunner::available(const Command& cmd) const {
    if (cmd.program.find('/') != std::string::npos)
        return ::access(cmd.program.c_str(), X_OK) == 0;
    const char* path_env = std::getenv("PATH");
    if (!path_env) return false;
    std::string path(path_env);
    std::size_t start = 0;
    while (start <= path.size()) {
        std::size_t colon = path.find(':', start);
        std::string dir = path.substr(start, colon == std::string::npos ? std::string::npos
                                                                         : colon - start);
        if (!dir.empty() && ::access((dir + "/" + cmd.program).c_str(), X_OK) == 0) return true;
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    return false;
}

CommandResult RealRunner::run(const Command& cmd, const fs::path& case_dir,
                              const ExecutionPlan&) {
    int pipefd[2];
    if (::pipe(pipefd) != 0) return {127, "pipe() failed\n", false};

    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(pipefd[0]);
        ::close(pipefd[1]);
        return {127, "fork() failed\n", false};
    }
    if (pid == 0) {
        ::close(pipefd[0]);
        ::dup2(pipefd[1], STDOUT_FILENO);
        ::dup2(pipefd[1], STDERR_FILENO);
        ::close(pipefd[1]);
        if (::chdir(case_dir.c_str()) != 0) _exit(127);
        std::vector<char*> argv;
        argv.push_back(const_cast<char*>(cmd.program.c_str()));
        for (const std::string& a : cmd.args) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        ::execvp(cmd.program.c_str(), argv.data());
        _exit(127);
    }

    ::close(pipefd[1]);
    CommandResult result;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(wall_seconds_);
    char buf[4096];
    bool open = true;
    while (open) {
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                             deadline - std::chrono::steady_clock::now())
                             .count();
        if (remaining <= 0) {
            ::kill(pid, SIGKILL);
            result.timed_out = true;
            break;
        }
        struct pollfd pfd{pipefd[0], POLLIN, 0};
        int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining, 1000)));
        if (rc > 0) {
            ssize_t n = ::read(pipefd[0], buf, sizeof buf);
            if (n <= 0)
                open = false;
            else
                result.log.append(buf, static_cast<std::size_t>(n));
        }
    }
    ::close(pipefd[0]);
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (result.timed_out)
        result.exit_code = 124;
    else if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);
    else
        result.exit_code = 1;
    return result;
}

void MockRunner::set_schedule(std::vector<std::optional<std::string>> schedule) {
    schedule_ = std::move(schedule);
    next_ = 0;
}

namespace {

std::string synth_fatal_log(const std::string& program, const std::string& message) {
    return "--> FOAM FATAL ERROR:\n" + message + "\n\n    From " + program +
           "\n\nFOAM exiting\n";
}

std::string synth_ok_log(const std::string& program) {
    return "// mock run: " + program + " completed\nEnd\n";
}

}  // namespace

CommandResult MockRunner::run(const Command& cmd, const fs::path& case_dir,
                              const ExecutionPlan& plan) {
    bool is_solver = cmd.program == plan.solver;
    if (next_ < schedule_.size()) {
        if (!is_solver) return {0, synth_ok_log(cmd.program), false};
        const auto& item = schedule_[next_++];
        if (!item) return {0, synth_ok_log(cmd.program), false};
        return {1, synth_fatal_log(cmd.program, *item), false};
    }
    if (cmd.program == "blockMesh" && !fs::exists(case_dir / "system/blockMeshDict"))
        return {1, synth_fatal_log(cmd.program, "cannot find file \"system/blockMeshDict\""),
                false};
    if (cmd.program == "setFields" && !fs::exists(case_dir / "system/setFieldsDict"))
        return {1, synth_fatal_log(cmd.program, "cannot find file \"system/setFieldsDict\""),
                false};
    if (is_solver) {
        CaseTree tree = load_case(case_dir);
        std::vector<Violation> violations = validate_case(tree, required_artifacts(plan.solver));
        for (const Violation& v : violations) {
            if (v.severity != Severity::Fatal) continue;
            return {1, synth_fatal_log(cmd.program, v.message + " (" + v.path + ")"), false};
        }
    }
    return {0, synth_ok_log(cmd.program), false};
}

RunOutcome execute_commands(const fs::path& case_dir, const ExecutionPlan& plan,
                            Runner& runner) {
    for (const Command& cmd : plan.commands) {
        if (!runner.available(cmd))
            throw AgentError(AgentError::Kind::RunnerUnavailable,
                             "runner cannot execute '" + cmd.program +
                                 "' (is the OpenFOAM environment sourced?)");
        CommandResult result = runner.run(cmd, case_dir, plan);
        std::ofstream log(case_dir / ("log." + cmd.program), std::ios::trunc);
        log << result.log;
        log.close();

        if (result.timed_out) {
            ErrorReport report;
            report.source = ErrorSource::Timeout;
            report.excerpt = "command timed out: " + cmd.display() + "\n";
            report.command = cmd.display();
            return {false, report};
        }
        std::optional<ErrorReport> report = extract_error(result.log, result.exit_code);
        if (report) {
            report->command = cmd.display();
            return {false, std::move(report)};
        }
    }
    return {true, std::nullopt};
}

//
// Prompt composition under a token budget
//

namespace {

struct FileSection {
    std::string path;
    std::string text;
};

std::string file_block(const FileSection& f) {
    return "FILE: " + f.path + "\n```\n" + f.text + "```\n";
}

std::vector<FileSection> case_sections(const CaseTree& tree) {
    std::vector<FileSection> files;
    for (const auto& [path, entry] : tree.entries) {
        if (const FoamFile* file = entry.file())
            files.push_back({path, serialize_foam_file(*file)});
    }
    return files;
}

// Drop order: mesh dictionaries, then schemes, then the rest; the implicated
// file always survives longest.
std::vector<std::size_t> drop_order(const std::vector<FileSection>& files,
                                    const ErrorReport& err) {
    std::optional<std::size_t> implicated;
    if (err.keyword) {
        for (std::size_t i = 0; i < files.size() && !implicated; ++i)
            if (files[i].path.find(*err.keyword) != std::string::npos) implicated = i;
        for (std::size_t i = 0; i < files.size() && !implicated; ++i)
            if (files[i].text.find(*err.keyword) != std::string::npos) implicated = i;
    }
    if (!implicated) {
        for (std::size_t i = 0; i < files.size() && !implicated; ++i)
            if (!files[i].path.empty() &&
                err.excerpt.find(basename_of(files[i].path)) != std::string::npos)
                implicated = i;
    }
    auto group = [](const std::string& path) {
        if (path.find("blockMeshDict") != std::string::npos ||
            path.find("polyMesh") != std::string::npos)
            return 0;
        if (path.find("fvSchemes") != std::string::npos) return 1;
        return 2;
    };
    std::vector<std::size_t> order;
    for (int g = 0; g <= 2; ++g)
        for (std::size_t i = 0; i < files.size(); ++i)
            if (group(files[i].path) == g && implicated != i) order.push_back(i);
    if (implicated) order.push_back(*implicated);
    return order;
}

std::string truncate_excerpt(const std::string& excerpt, std::size_t max_lines) {
    std::vector<std::string> lines = split_lines(excerpt);
    if (lines.size() <= max_lines) return excerpt;
    lines.resize(max_lines);
    lines.push_back("[error excerpt truncated]");
    return join_lines(lines);
}

ChatRequest build_file_request(const TaskSpec& task, const CaseTree* current_case,
                               const ErrorReport* err, const Pricing& pricing,
                               const IterationLimits& limits, const AgentConfig& cfg) {
    std::int64_t budget = std::numeric_limits<std::int64_t>::max();
    if (pricing.context_length > 0)
        budget = static_cast<std::int64_t>(limits.token_budget_fraction *
                                           static_cast<double>(pricing.context_length));

    std::vector<FileSection> files;
    if (current_case) files = case_sections(*current_case);
    std::vector<std::size_t> dropped_order =
        err ? drop_order(files, *err) : drop_order(files, ErrorReport{});
    std::size_t dropped = 0;

    std::string excerpt = err ? err->excerpt : std::string();
    std::size_t excerpt_lines = split_lines(excerpt).size();

    std::vector<std::string> context;
    if (cfg.retrieval) context = cfg.retrieval->retrieve(task.description);

    auto assemble = [&]() {
        std::ostringstream user;
        user << task.description << "\n";
        if (err) {
            user << "\nThe previous attempt failed";
            if (!err->command.empty()) user << " while running `" << err->command << "`";
            user << ". Reported error:\n" << truncate_excerpt(excerpt, excerpt_lines);
        }
        std::vector<bool> is_dropped(files.size(), false);
        for (std::size_t i = 0; i < dropped; ++i) is_dropped[dropped_order[i]] = true;
        bool any = false;
        for (std::size_t i = 0; i < files.size(); ++i) {
            if (is_dropped[i]) continue;
            if (!any) {
                user << "\nCurrent case files:\n";
                any = true;
            }
            user << file_block(files[i]);
        }
        for (const std::string& snippet : context) user << "\nContext:\n" << snippet << "\n";
        user << "\nEmit every corrected or new file as 'FILE: <case-relative path>' followed "
                "by a fenced code block.";
        if (err) user << " Fix the reported error.";

        ChatRequest req;
        req.model = pricing.model;
        req.temperature = 0.0;
        req.messages.push_back({"system", system_prompt_of(cfg)});
        req.messages.push_back({"user", user.str()});
        return req;
    };

    ChatRequest req = assemble();
    while (estimate_request_tokens(req) > budget && dropped < dropped_order.size()) {
        ++dropped;
        req = assemble();
    }
    while (estimate_request_tokens(req) > budget && excerpt_lines > 1) {
        excerpt_lines = excerpt_lines / 2;
        req = assemble();
    }
    if (estimate_request_tokens(req) > budget && !excerpt.empty()) {
        excerpt = truncate_excerpt(excerpt, 1).substr(0, 160);
        excerpt_lines = 1;
        req = assemble();
    }
    if (estimate_request_tokens(req) > budget)
        throw AgentError(AgentError::Kind::BudgetImpossible,
                         "minimal request exceeds " + std::to_string(budget) +
                             " token budget for model " + pricing.model);
    return req;
}

}  // namespace

ChatRequest compose_retry(const TaskSpec& task, const CaseTree& current_case,
                          const ErrorReport& err, const Pricing& pricing,
                          const IterationLimits& limits, const AgentConfig& cfg) {
    return build_file_request(task, &current_case, &err, pricing, limits, cfg);
}

CheckResult check_task(const CaseTree& tree, const TaskSpec& task) {
    return check_assertions(tree, task.assertions);
}

//
// The loop
//

namespace {

CaseTree seed_case(const TaskSpec& task) {
    CaseTree tree = task.baseline_case ? *task.baseline_case : CaseTree{};
    tree.root_name = task.id;
    for (const ProvidedFile& f : task.provided_files) {
        bool textual = f.bytes.find('\0') == std::string::npos;
        bool parsed = false;
        if (textual && f.path.find("polyMesh/") == std::string::npos) {
            try {
                FoamFile file = parse_foam_file(f.bytes);
                tree.put_file(f.path, std::move(file));
                parsed = true;
            } catch (const FoamParseError&) {
            }
        } else if (f.path == "constant/polyMesh/boundary") {
            try {
                FoamFile file = parse_foam_file(f.bytes);
                tree.put_file(f.path, std::move(file));
                parsed = true;
            } catch (const FoamParseError&) {
            }
        }
        if (!parsed) tree.put_blob(f.path, f.bytes);
    }
    return tree;
}

void write_record_json(const fs::path& path, const TrialRecord& record) {
    std::ofstream out(path, std::ios::trunc);
    out << trial_record_to_json(record) << '\n';
}

ErrorReport validation_report(const std::vector<Violation>& violations) {
    ErrorReport report;
    report.source = ErrorSource::Validation;
    report.command = "static validation";
    std::ostringstream os;
    int listed = 0;
    for (const Violation& v : violations) {
        if (v.severity != Severity::Fatal) continue;
        os << describe(v) << '\n';
        if (++listed == 10) break;
    }
    report.excerpt = os.str();
    report.keyword = extract_keyword(report.excerpt);
    return report;
}

}  // namespace

TrialRecord run_agent(const TaskSpec& task, Backend& backend, Runner& runner,
                      const fs::path& workdir, const AgentConfig& cfg) {
    fs::create_directories(workdir);
    Transcript transcript(workdir / "transcript.jsonl");

    TrialRecord record;
    record.task_id = task.id;
    record.label = task.display_label();
    record.files_provided = task.provided_display();
    record.backend_model = backend.pricing().model;
    record.transcript_path = "transcript.jsonl";
    record.outcome = TrialOutcome::FailedUnrecoverable;

    const Pricing& pricing = backend.pricing();
    const int max_iters = std::max(1, task.limits.max_iterations);

    try {
        ExecutionPlan plan = build_plan_impl(task, backend, cfg, &transcript);

        CaseTree current = seed_case(task);
        ChatRequest request =
            build_file_request(task, &current, nullptr, pricing, task.limits, cfg);

        for (int k = 1; k <= max_iters; ++k) {
            record.iterations_used = k;
            ChatResponse response = backend.send_chat(request);
            transcript.exchange("files", k, request, response);

            ErrorReport err;
            bool have_error = false;
            try {
                auto generated = interpret_files(response.content);
                CaseTree candidate = current;
                for (auto& [path, content] : generated) {
                    if (candidate.entries.count(path))
                        transcript.note("override", json{{"path", path}, {"iteration", k}});
                    bool parsed = false;
                    if (content.find('\0') == std::string::npos &&
                        path.find("polyMesh/") == std::string::npos) {
                        try {
                            candidate.put_file(path, parse_foam_file(content));
                            parsed = true;
                        } catch (const FoamParseError& e) {
                            candidate.warnings.push_back("generated " + path +
                                                         " kept as blob: " + e.what());
                        }
                    }
                    if (!parsed) candidate.put_blob(path, content);
                }
                current = std::move(candidate);

                fs::path iter_dir = workdir / ("iter_" + std::to_string(k));
                write_case(current, iter_dir);
                record.final_case_dir = "iter_" + std::to_string(k);

                std::vector<Violation> violations =
                    validate_case(current, required_artifacts(plan.solver));
                bool fatal = std::any_of(violations.begin(), violations.end(),
                                         [](const Violation& v) {
                                             return v.severity == Severity::Fatal;
                                         });
                if (fatal) {
                    err = validation_report(violations);
                    have_error = true;
                    transcript.note("validation_failed",
                                    json{{"iteration", k}, {"excerpt", err.excerpt}});
                } else {
                    RunOutcome outcome = execute_commands(iter_dir, plan, runner);
                    if (outcome.success) {
                        record.outcome = TrialOutcome::Success;
                        record.final_error.reset();
                        record.usage = transcript.usage();
                        record.cost = compute_cost(record.usage, pricing);
                        write_record_json(workdir / "record.json", record);
                        return record;
                    }
                    err = *outcome.error;
                    have_error = true;
                }
            } catch (const AgentError& e) {
                if (e.kind != AgentError::Kind::NoFilesFound) throw;
                err.source = ErrorSource::Validation;
                err.command = "interpreter";
                err.excerpt =
                    "The response contained no FILE blocks. Remember: emit each file as "
                    "'FILE: <case-relative path>' followed by a fenced code block.\n";
                have_error = true;
            }

            record.final_error = err;
            if (!have_error || k == max_iters) break;
            request = compose_retry(task, current, err, pricing, task.limits, cfg);
        }
        record.outcome = TrialOutcome::FailedMaxIterations;
    } catch (const BackendError& e) {
        record.outcome = TrialOutcome::FailedUnrecoverable;
        record.failure_note = e.what();
    } catch (const AgentError& e) {
        record.outcome = TrialOutcome::FailedUnrecoverable;
        record.failure_note = e.what();
    } catch (const CaseIoError& e) {
        record.outcome = TrialOutcome::FailedUnrecoverable;
        record.failure_note = e.what();
    }

    record.usage = transcript.usage();
    record.cost = compute_cost(record.usage, pricing);
    write_record_json(workdir / "record.json", record);
    return record;
}

}  // namespace foamgpt
