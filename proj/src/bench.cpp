#include "foamgpt/bench.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace foamgpt {

namespace {

std::string read_text_file(const fs::path& path, SuiteError::Kind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SuiteError(kind, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Assertion assertion_from_json(const json& j, const std::string& task_id) {
    if (!j.is_object() || !j.contains("file") || !j.contains("op"))
        throw SuiteError(SuiteError::Kind::Schema,
                         "task '" + task_id + "': assertion needs 'file' and 'op'");
    Assertion a;
    a.file = j["file"].get<std::string>();
    a.path = j.value("path", "");
    a.op = j["op"].get<std::string>();
    if (j.contains("value")) a.values.push_back(j["value"].get<std::string>());
    if (j.contains("values"))
        for (const json& v : j["values"]) a.values.push_back(v.get<std::string>());
    return a;
}

}  // namespace

Suite load_suite(const fs::path& path) {
    std::string text = read_text_file(path, SuiteError::Kind::Io);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw SuiteError(SuiteError::Kind::Schema, "suite file is not a JSON object: " +
                                                       path.string());
    if (!j.contains("name") || !j.contains("tasks") || !j["tasks"].is_array())
        throw SuiteError(SuiteError::Kind::Schema,
                         "suite needs 'name' and a 'tasks' array: " + path.string());

    Suite suite;
    suite.name = j["name"].get<std::string>();
    suite.fixtures_root =
        fs::weakly_canonical(path.parent_path() / j.value("fixtures_root", "."));

    std::set<std::string> seen_ids;
    for (const json& tj : j["tasks"]) {
        if (!tj.is_object() || !tj.contains("id"))
            throw SuiteError(SuiteError::Kind::Schema, "every task needs an 'id'");
        TaskSpec task;
        task.id = tj["id"].get<std::string>();
        if (!seen_ids.insert(task.id).second)
            throw SuiteError(SuiteError::Kind::Schema, "duplicate task id '" + task.id + "'");
        task.label = tj.value("label", "");
        std::string kind = tj.value("kind", "generate");
        if (kind == "modify")
            task.kind = TaskKind::Modify;
        else if (kind == "generate")
            task.kind = TaskKind::Generate;
        else
            throw SuiteError(SuiteError::Kind::Schema,
                             "task '" + task.id + "': unknown kind '" + kind + "'");
        task.description = tj.value("description", "");
        task.solver_hint = tj.value("solver_hint", "");
        task.provided_label = tj.value("provided_label", "");
        task.note = tj.value("note", "");

        if (tj.contains("case")) {
            fs::path case_dir = suite.fixtures_root / tj["case"].get<std::string>();
            if (!fs::is_directory(case_dir))
                throw SuiteError(SuiteError::Kind::MissingFixture,
                                 "task '" + task.id + "': case fixture missing: " +
                                     case_dir.string());
            task.baseline_case = load_case(case_dir);
        }
        if (task.kind == TaskKind::Modify && !task.baseline_case)
            throw SuiteError(SuiteError::Kind::Schema,
                             "task '" + task.id + "': modify tasks need a 'case'");

        if (tj.contains("provided_files")) {
            for (const json& pf : tj["provided_files"]) {
                if (!pf.is_object() || !pf.contains("path") || !pf.contains("from"))
                    throw SuiteError(SuiteError::Kind::Schema,
                                     "task '" + task.id +
                                         "': provided_files entries need 'path' and 'from'");
                fs::path src = suite.fixtures_root / pf["from"].get<std::string>();
                if (!fs::is_regular_file(src))
                    throw SuiteError(SuiteError::Kind::MissingFixture,
                                     "task '" + task.id + "': provided fixture missing: " +
                                         src.string());
                task.provided_files.push_back(
                    {pf["path"].get<std::string>(),
                     read_text_file(src, SuiteError::Kind::MissingFixture)});
            }
        }
        if (tj.contains("assertions"))
            for (const json& aj : tj["assertions"])
                task.assertions.push_back(assertion_from_json(aj, task.id));
        if (tj.contains("expected") && tj["expected"].is_object())
            for (auto& [model, verdict] : tj["expected"].items())
                task.expected[model] = verdict.get<std::string>();
        if (tj.contains("limits") && tj["limits"].is_object()) {
            const json& lj = tj["limits"];
            task.limits.max_iterations = lj.value("max_iterations", task.limits.max_iterations);
            task.limits.per_run_wall_seconds =
                lj.value("per_run_wall_seconds", task.limits.per_run_wall_seconds);
            task.limits.token_budget_fraction =
                lj.value("token_budget_fraction", task.limits.token_budget_fraction);
        }
        suite.tasks.push_back(std::move(task));
    }
    return suite;
}

namespace {

std::string backend_label(const BackendConfig& cfg, std::size_t index) {
    if (!cfg.model.empty()) return cfg.model;
    return "backend" + std::to_string(index);
}

struct TrialSlot {
    std::size_t backend_index = 0;
    std::size_t task_index = 0;
    int repeat = 0;
};

}  // namespace

std::vector<TrialRecord> run_suite(const Suite& suite, const BenchConfig& cfg) {
    const std::vector<Pricing> pricing =
        cfg.pricing_table.empty() ? default_pricing_table() : cfg.pricing_table;
    fs::create_directories(cfg.output_dir);
    const fs::path results_path = cfg.output_dir / (suite.name + ".results.jsonl");

    std::vector<TrialSlot> slots;
    for (std::size_t b = 0; b < cfg.backends.size(); ++b)
        for (std::size_t t = 0; t < suite.tasks.size(); ++t)
            for (int r = 0; r < std::max(1, cfg.repeat); ++r) slots.push_back({b, t, r});

    std::vector<TrialRecord> records(slots.size());
    std::mutex log_mutex;
    std::ofstream results_log(results_path, std::ios::app);
    std::atomic<std::size_t> cursor{0};

    auto run_one = [&](std::size_t index) {
        const TrialSlot& slot = slots[index];
        const TaskSpec& task = suite.tasks[slot.task_index];
        const BackendConfig& backend_cfg = cfg.backends[slot.backend_index];

        std::string sub = suite.name + "/" + backend_label(backend_cfg, slot.backend_index) +
                          "/" + task.id;
        if (cfg.repeat > 1) sub += "_r" + std::to_string(slot.repeat + 1);
        fs::path workdir = cfg.output_dir / sub;

        TrialRecord record;
        try {
            std::unique_ptr<Backend> backend =
                make_trial_backend(backend_cfg, pricing, task.id);

            std::unique_ptr<Runner> runner;
            if (cfg.runner == RunnerKind::Mock)
                runner = std::make_unique<MockRunner>();
            else
                runner = std::make_unique<RealRunner>(task.limits.per_run_wall_seconds);

            record = run_agent(task, *backend, *runner, workdir, cfg.agent);

            if (record.outcome == TrialOutcome::Success && !task.assertions.empty()) {
                CaseTree final_case = load_case(workdir / record.final_case_dir);
                CheckResult check = check_task(final_case, task);
                if (!check.passed()) {
                    record.outcome = TrialOutcome::FailedTaskCheck;
                    ErrorReport err;
                    err.source = ErrorSource::Validation;
                    err.command = "check_task";
                    std::ostringstream os;
                    for (const std::string& f : check.failed_assertions) os << f << '\n';
                    err.excerpt = os.str();
                    record.final_error = std::move(err);
                    record.failure_note = "task assertions not satisfied";
                }
            }
        } catch (const std::exception& e) {
            record.task_id = task.id;
            record.label = task.display_label();
            record.files_provided = task.provided_display();
            record.backend_model = backend_cfg.model;
            record.outcome = TrialOutcome::FailedUnrecoverable;
            record.failure_note = e.what();
        }
        record.transcript_path = sub + "/transcript.jsonl";
        if (!record.final_case_dir.empty()) record.final_case_dir = sub + "/" +
                                                                    record.final_case_dir;
        {
            std::lock_guard<std::mutex> lock(log_mutex);
            results_log << trial_record_to_json(record) << '\n';
            results_log.flush();
        }
        records[index] = std::move(record);
    };

    int workers = std::max(1, std::min<int>(cfg.parallelism,
                                            static_cast<int>(slots.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < slots.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = cursor.fetch_add(1);
                    if (i >= slots.size()) return;
                    run_one(i);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }
    return records;
}

std::string format_token_count(std::int64_t tokens) {
    if (tokens < 1000) return std::to_string(tokens);
    return std::to_string((tokens + 500) / 1000) + "k";
}

std::string format_cost_dollars(MicroUsd cost) {
    MicroUsd millis = (cost + (cost >= 0 ? 500 : -500)) / 1000;  // round to 3 decimals
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%03lld", millis < 0 ? "-" : "",
                  static_cast<long long>(std::abs(millis) / 1000),
                  static_cast<long long>(std::abs(millis) % 1000));
    std::string s = buf;
    if (s.back() == '0') s.pop_back();  // 0.250 -> 0.25, but 0.056 stays
    return "$" + s;
}

namespace {

std::string result_cell(const TrialRecord& r) {
    if (r.outcome == TrialOutcome::Success) return "✓";
    std::string head;
    if (r.final_error) {
        for (const std::string& line : [&] {
                 std::vector<std::string> lines;
                 std::istringstream is(r.final_error->excerpt);
                 std::string l;
                 while (std::getline(is, l)) lines.push_back(l);
                 return lines;
             }()) {
            if (line.empty() || line.find("FOAM FATAL") != std::string::npos) continue;
            head = line;
            break;
        }
        if (head.empty() && !r.final_error->excerpt.empty()) {
            std::istringstream is(r.final_error->excerpt);
            std::getline(is, head);
        }
    }
    if (head.empty()) head = r.failure_note.empty() ? to_string(r.outcome) : r.failure_note;
    if (head.size() > 64) head = head.substr(0, 61) + "...";
    return head;
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

std::string render_table(const std::vector<TrialRecord>& records, TableFormat format) {
    const std::vector<std::string> header = {"case",   "file provided", "iterations",
                                             "result", "total token",   "token cost"};
    std::vector<std::vector<std::string>> rows;
    for (const TrialRecord& r : records) {
        rows.push_back({r.label, join(r.files_provided, ", "),
                        std::to_string(r.iterations_used), result_cell(r),
                        format_token_count(r.usage.total()), format_cost_dollars(r.cost)});
    }

    std::ostringstream os;
    if (format == TableFormat::Markdown) {
        os << "| " << join(header, " | ") << " |\n";
        os << "|";
        for (std::size_t i = 0; i < header.size(); ++i) os << " --- |";
        os << "\n";
        for (const auto& row : rows) os << "| " << join(row, " | ") << " |\n";
    } else {
        std::vector<std::string> escaped = header;
        os << join(escaped, ",") << "\n";
        for (const auto& row : rows) {
            std::vector<std::string> cells;
            for (const std::string& c : row) cells.push_back(csv_escape(c));
            os << join(cells, ",") << "\n";
        }
    }
    return os.str();
}

void persist_records(const std::vector<TrialRecord>& records, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::app);
    if (!out) throw SuiteError(SuiteError::Kind::Io, "cannot write " + path.string());
    for (const TrialRecord& r : records) out << trial_record_to_json(r) << '\n';
    if (!out) throw SuiteError(SuiteError::Kind::Io, "short write to " + path.string());
}

std::vector<TrialRecord> load_records(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw SuiteError(SuiteError::Kind::Io, "cannot read " + path.string());
    std::vector<TrialRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records.push_back(trial_record_from_json(line));
        } catch (const std::exception& e) {
            throw SuiteError(SuiteError::Kind::Schema,
                             path.string() + " line " + std::to_string(line_no) + ": " +
                                 e.what());
        }
    }
    return records;
}

}  // namespace foamgpt
