#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "foamgpt/app_config.hpp"
#include "foamgpt/bench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace foamgpt;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitDataErr = 65;
constexpr int kExitNoInput = 66;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Where a provided file lands in the case when no explicit placement is given.
std::string infer_case_path(const std::string& basename) {
    static const std::set<std::string> system_files = {
        "blockMeshDict",  "controlDict",       "fvSchemes",        "fvSolution",
        "setFieldsDict",  "decomposeParDict",  "snappyHexMeshDict"};
    static const std::set<std::string> polymesh_files = {"boundary", "points", "faces",
                                                         "owner", "neighbour"};
    static const std::set<std::string> constant_files = {
        "g", "transportProperties", "turbulenceProperties", "kinematicCloudProperties",
        "thermophysicalProperties"};
    if (system_files.count(basename)) return "system/" + basename;
    if (polymesh_files.count(basename)) return "constant/polyMesh/" + basename;
    if (constant_files.count(basename)) return "constant/" + basename;
    return "0/" + basename;
}

json value_to_json(const FoamValue& v);

json dict_to_json(const FoamDict& dict) {
    json entries = json::array();
    for (const DictEntry& e : dict.entries())
        entries.push_back({{"key", e.key}, {"value", value_to_json(e.value)}});
    return entries;
}

json value_to_json(const FoamValue& v) {
    if (const Atom* a = v.as_atom()) return {{"atom", a->lexeme}};
    if (const Number* n = v.as_number()) return {{"number", n->value}, {"lexeme", n->lexeme}};
    if (const auto* d = std::get_if<DimensionSet>(&v.node)) {
        json dims = json::array();
        for (int e : d->exponents) dims.push_back(e);
        return {{"dimensions", dims}};
    }
    if (const auto* vec = std::get_if<VectorLike>(&v.node)) {
        json comps = json::array();
        for (const Number& n : vec->components) comps.push_back(n.value);
        return {{"vector", comps}};
    }
    if (const FoamList* list = v.as_list()) {
        json items = json::array();
        for (const FoamValue& item : list->items) items.push_back(value_to_json(item));
        json out = {{"list", items},
                    {"style", list->style == ListStyle::Inline ? "inline" : "parenthesized"}};
        if (list->size_prefix) out["size_prefix"] = *list->size_prefix;
        return out;
    }
    if (const FoamDict* dict = v.as_dict()) return {{"dict", dict_to_json(*dict)}};
    return {{"raw", std::get<Raw>(v.node).text}};
}

AppConfig resolve_config(const std::string& config_path, bool explicit_config) {
    if (fs::exists(config_path)) return load_app_config(config_path);
    if (explicit_config) throw ConfigError("config file not found: " + config_path);
    return default_app_config();
}

int exit_code_for(TrialOutcome outcome) {
    switch (outcome) {
        case TrialOutcome::Success: return 0;
        case TrialOutcome::FailedMaxIterations: return 2;
        case TrialOutcome::FailedTaskCheck: return 2;
        case TrialOutcome::FailedUnrecoverable: return 3;
    }
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"foamgpt - LLM-driven OpenFOAM case generation, validation and benchmarking"};
    app.require_subcommand(1);

    std::string config_path = "./foamgpt.json";
    bool verbose = false;
    auto* config_opt = app.add_option("--config", config_path, "JSON config file");
    app.add_flag("--verbose", verbose, "chatty progress output");

    // generate
    auto* gen = app.add_subcommand("generate", "generate a case from a task description");
    std::string description;
    gen->add_option("description", description, "natural-language task")->required();
    std::vector<std::string> provides;
    gen->add_option("--provide", provides, "file to hand the agent (local[:case/path])");
    std::string gen_backend;
    gen->add_option("--backend", gen_backend, "backend name from config");
    std::string gen_runner;
    gen->add_option("--runner", gen_runner, "mock or real")
        ->check(CLI::IsMember({"mock", "real"}));
    std::string gen_out = "agent-run";
    gen->add_option("--out", gen_out, "work directory for the trial");
    std::string gen_solver;
    gen->add_option("--solver", gen_solver, "solver hint for the planner");
    int gen_max_iters = 0;
    gen->add_option("--max-iterations", gen_max_iters, "iteration cap override");

    // validate
    auto* val = app.add_subcommand("validate", "statically validate a case directory");
    std::string val_case;
    val->add_option("case_dir", val_case, "case directory")->required();
    std::string val_solver;
    val->add_option("--solver", val_solver, "solver whose requirements apply");

    // bench
    auto* bench = app.add_subcommand("bench", "run a benchmark suite");
    std::string suite_path;
    bench->add_option("suite", suite_path, "suite JSON file")->required();
    std::vector<std::string> bench_backends;
    bench->add_option("--backend", bench_backends, "backend name(s) from config");
    int bench_parallel = 1;
    bench->add_option("--parallel", bench_parallel, "concurrent trials")
        ->check(CLI::PositiveNumber);
    std::string bench_out = "bench-out";
    bench->add_option("--out", bench_out, "output directory");
    std::string bench_runner;
    bench->add_option("--runner", bench_runner, "mock or real")
        ->check(CLI::IsMember({"mock", "real"}));

    // cost
    auto* cost = app.add_subcommand("cost", "token cost for a model");
    std::string cost_model;
    cost->add_option("--model", cost_model, "model name")->required();
    long long cost_in = 0, cost_out = 0;
    cost->add_option("--input", cost_in, "input tokens")->required();
    cost->add_option("--output", cost_out, "output tokens")->required();

    // parse
    auto* parse_cmd = app.add_subcommand("parse", "dump a dictionary AST as JSON");
    std::string parse_path;
    parse_cmd->add_option("file", parse_path, "dictionary file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    AppConfig cfg;
    try {
        cfg = resolve_config(config_path, config_opt->count() > 0);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(gen)) {
            TaskSpec task;
            task.id = "cli-generate";
            task.kind = TaskKind::Generate;
            task.description = description;
            task.solver_hint = gen_solver;
            task.limits = cfg.limits;
            if (gen_max_iters > 0) task.limits.max_iterations = gen_max_iters;
            for (const std::string& spec : provides) {
                std::string local = spec, dest;
                std::size_t colon = spec.find(':');
                if (colon != std::string::npos) {
                    local = spec.substr(0, colon);
                    dest = spec.substr(colon + 1);
                }
                if (!fs::is_regular_file(local)) {
                    std::cerr << "provided file not found: " << local << "\n";
                    return kExitNoInput;
                }
                if (dest.empty()) dest = infer_case_path(fs::path(local).filename().string());
                task.provided_files.push_back({dest, read_text(local)});
            }

            std::string backend_name = gen_backend.empty() ? cfg.default_backend : gen_backend;
            auto it = cfg.backends.find(backend_name);
            if (it == cfg.backends.end()) {
                std::cerr << "unknown backend '" << backend_name << "'; configured:";
                for (const auto& [name, _] : cfg.backends) std::cerr << ' ' << name;
                std::cerr << "\n";
                return kExitUsage;
            }

            RunnerKind runner_kind = cfg.runner;
            if (!gen_runner.empty())
                runner_kind = gen_runner == "real" ? RunnerKind::Real : RunnerKind::Mock;

            std::unique_ptr<Backend> backend;
            try {
                backend = make_backend(it->second, cfg.pricing_table);
            } catch (const BackendError& e) {
                std::cerr << "backend error: " << e.what() << "\n";
                return 3;
            }
            std::unique_ptr<Runner> runner;
            if (runner_kind == RunnerKind::Mock)
                runner = std::make_unique<MockRunner>();
            else
                runner = std::make_unique<RealRunner>(task.limits.per_run_wall_seconds);

            TrialRecord record =
                run_agent(task, *backend, *runner, gen_out, agent_config_from(cfg));
            std::cout << "outcome:    " << to_string(record.outcome) << "\n"
                      << "iterations: " << record.iterations_used << "\n"
                      << "tokens:     " << record.usage.total() << "\n"
                      << "cost:       " << format_usd(record.cost) << "\n";
            if (!record.final_case_dir.empty())
                std::cout << "case:       " << (fs::path(gen_out) / record.final_case_dir).string()
                          << "\n";
            if (record.final_error && verbose)
                std::cout << "last error:\n" << record.final_error->excerpt << "\n";
            return exit_code_for(record.outcome);
        }

        if (app.got_subcommand(val)) {
            if (!fs::is_directory(val_case)) {
                std::cerr << "case directory not found: " << val_case << "\n";
                return kExitNoInput;
            }
            CaseTree tree = load_case(val_case);
            std::string solver = val_solver;
            if (solver.empty()) {
                if (const FoamFile* control = tree.find_file("system/controlDict")) {
                    const FoamValue* application = control->body.find("application");
                    if (application && application->as_atom())
                        solver = application->as_atom()->lexeme;
                }
            }
            if (solver.empty()) solver = "unknown";
            RequirementSet reqs = required_artifacts(solver);
            std::vector<Violation> violations = validate_case(tree, reqs);
            bool fatal = false;
            for (const Violation& v : violations) {
                std::cout << describe(v) << "\n";
                fatal = fatal || v.severity == Severity::Fatal;
            }
            std::cout << violations.size() << " violation(s), solver '" << solver << "'"
                      << (reqs.heuristic ? " (heuristic requirements)" : "") << "\n";
            return fatal ? 1 : 0;
        }

        if (app.got_subcommand(bench)) {
            if (!fs::is_regular_file(suite_path)) {
                std::cerr << "suite file not found: " << suite_path << "\n";
                return kExitNoInput;
            }
            Suite suite;
            try {
                suite = load_suite(suite_path);
            } catch (const SuiteError& e) {
                std::cerr << "suite error: " << e.what() << "\n";
                return e.kind == SuiteError::Kind::Schema ? kExitDataErr : kExitNoInput;
            }

            BenchConfig bcfg;
            bcfg.parallelism = bench_parallel;
            bcfg.output_dir = bench_out;
            bcfg.pricing_table = cfg.pricing_table;
            bcfg.agent = agent_config_from(cfg);
            bcfg.runner = cfg.runner;
            if (!bench_runner.empty())
                bcfg.runner = bench_runner == "real" ? RunnerKind::Real : RunnerKind::Mock;

            std::vector<std::string> names = bench_backends;
            if (names.empty()) names.push_back(cfg.default_backend);
            for (const std::string& name : names) {
                auto it = cfg.backends.find(name);
                if (it == cfg.backends.end()) {
                    std::cerr << "unknown backend '" << name << "'\n";
                    return kExitUsage;
                }
                bcfg.backends.push_back(it->second);
            }

            std::vector<TrialRecord> records = run_suite(suite, bcfg);
            std::string markdown = render_table(records, TableFormat::Markdown);
            std::cout << markdown;
            std::ofstream(fs::path(bench_out) / (suite.name + ".table.md")) << markdown;
            std::ofstream(fs::path(bench_out) / (suite.name + ".table.csv"))
                << render_table(records, TableFormat::Csv);
            std::cout << records.size() << " trial(s) recorded under " << bench_out << "\n";
            return 0;
        }

        if (app.got_subcommand(cost)) {
            const Pricing* pricing = find_pricing(cfg.pricing_table, cost_model);
            if (!pricing) {
                std::cerr << "unknown model '" << cost_model << "'; priced models:";
                for (const Pricing& p : cfg.pricing_table) std::cerr << ' ' << p.model;
                std::cerr << "\n";
                return kExitUsage;
            }
            UsageTotals usage{cost_in, cost_out};
            std::cout << format_usd(compute_cost(usage, *pricing)) << "\n";
            return 0;
        }

        if (app.got_subcommand(parse_cmd)) {
            if (!fs::is_regular_file(parse_path)) {
                std::cerr << "file not found: " << parse_path << "\n";
                return kExitNoInput;
            }
            try {
                FoamFile file = parse_foam_file(read_text(parse_path));
                json out = {{"header", dict_to_json(file.header)},
                            {"body", dict_to_json(file.body)}};
                std::cout << out.dump(2) << "\n";
                return 0;
            } catch (const FoamParseError& e) {
                std::cerr << "parse error: " << e.what() << "\n";
                return kExitDataErr;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
