#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "foamgpt/bench.hpp"

namespace foamgpt {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

struct AppConfig {
    std::vector<Pricing> pricing_table;
    std::map<std::string, BackendConfig> backends;
    std::string default_backend;
    RunnerKind runner = RunnerKind::Mock;
    std::filesystem::path system_prompt_path;
    std::filesystem::path planner_prompt_path;
    IterationLimits limits;
};

// Built-in defaults: the full pricing table and a keyless local endpoint on
// port 11434.
AppConfig default_app_config();

// JSON config file; absent sections fall back to defaults.
AppConfig load_app_config(const std::filesystem::path& file);

// Prompt text for the agent; empty strings select the embedded defaults.
AgentConfig agent_config_from(const AppConfig& cfg);

MicroUsd usd_to_micro(double usd);

}  // namespace foamgpt
