#include "foamgpt/app_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace foamgpt {

MicroUsd usd_to_micro(double usd) { return std::llround(usd * 1e6); }

AppConfig default_app_config() {
    AppConfig cfg;
    cfg.pricing_table = default_pricing_table();
    BackendConfig local;
    local.kind = BackendKind::Http;
    local.base_url = "http://localhost:11434";
    local.api_key_env = "";
    local.model = "qwq-32b";
    cfg.backends["local"] = local;
    cfg.default_backend = "local";
    cfg.runner = RunnerKind::Mock;
    return cfg;
}

namespace {

BackendConfig backend_from_json(const std::string& name, const json& j) {
    BackendConfig cfg;
    std::string kind = j.value("kind", "http");
    if (kind == "http")
        cfg.kind = BackendKind::Http;
    else if (kind == "scripted")
        cfg.kind = BackendKind::Scripted;
    else
        throw ConfigError("backend '" + name + "': unknown kind '" + kind + "'");
    cfg.base_url = j.value("base_url", "");
    cfg.api_key_env = j.value("api_key_env", "");
    cfg.model = j.value("model", "");
    cfg.timeout_seconds = j.value("timeout_seconds", 300);
    cfg.script_path = j.value("script_path", "");
    if (cfg.kind == BackendKind::Http && cfg.base_url.empty())
        throw ConfigError("backend '" + name + "': http backends need base_url");
    if (cfg.kind == BackendKind::Scripted && cfg.script_path.empty())
        throw ConfigError("backend '" + name + "': scripted backends need script_path");
    return cfg;
}

}  // namespace

AppConfig load_app_config(const fs::path& file) {
    AppConfig cfg = default_app_config();
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file: " + file.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ConfigError("config file is not a JSON object: " + file.string());

    if (j.contains("pricing") && j["pricing"].is_array()) {
        cfg.pricing_table.clear();
        for (const json& pj : j["pricing"]) {
            Pricing p;
            p.model = pj.value("model", "");
            if (p.model.empty()) throw ConfigError("pricing rows need a model name");
            p.input_per_million = usd_to_micro(pj.value("input_usd_per_million", 0.0));
            p.output_per_million = usd_to_micro(pj.value("output_usd_per_million", 0.0));
            p.context_length = pj.value("context_length", 0);
            cfg.pricing_table.push_back(std::move(p));
        }
    }
    if (j.contains("backends") && j["backends"].is_object()) {
        cfg.backends.clear();
        for (auto& [name, bj] : j["backends"].items())
            cfg.backends[name] = backend_from_json(name, bj);
    }
    if (j.contains("default_backend")) cfg.default_backend = j["default_backend"];
    if (!cfg.backends.empty() && !cfg.backends.count(cfg.default_backend)) {
        if (j.contains("default_backend"))
            throw ConfigError("default_backend '" + cfg.default_backend +
                              "' is not in the backends map");
        cfg.default_backend = cfg.backends.begin()->first;
    }
    std::string runner = j.value("runner", "mock");
    if (runner == "mock")
        cfg.runner = RunnerKind::Mock;
    else if (runner == "real")
        cfg.runner = RunnerKind::Real;
    else
        throw ConfigError("unknown runner '" + runner + "' (use mock or real)");
    if (j.contains("system_prompt")) cfg.system_prompt_path = j["system_prompt"].get<std::string>();
    if (j.contains("planner_prompt"))
        cfg.planner_prompt_path = j["planner_prompt"].get<std::string>();
    if (j.contains("limits") && j["limits"].is_object()) {
        const json& lj = j["limits"];
        cfg.limits.max_iterations = lj.value("max_iterations", cfg.limits.max_iterations);
        cfg.limits.per_run_wall_seconds =
            lj.value("per_run_wall_seconds", cfg.limits.per_run_wall_seconds);
        cfg.limits.token_budget_fraction =
            lj.value("token_budget_fraction", cfg.limits.token_budget_fraction);
    }
    return cfg;
}

namespace {

std::string slurp_if_present(const fs::path& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) return {};
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

AgentConfig agent_config_from(const AppConfig& cfg) {
    AgentConfig agent;
    agent.system_prompt = slurp_if_present(cfg.system_prompt_path);
    agent.planner_prompt = slurp_if_present(cfg.planner_prompt_path);
    return agent;
}

}  // namespace foamgpt
