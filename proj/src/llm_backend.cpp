#include "foamgpt/llm_backend.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

using nlohmann::json;

namespace foamgpt {

std::int64_t estimate_tokens(std::string_view text) {
    if (text.empty()) return 0;
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::int64_t estimate_request_tokens(const ChatRequest& req) {
    std::int64_t total = 0;
    for (const ChatMessage& m : req.messages)
        total += estimate_tokens(m.role) + estimate_tokens(m.content) + 4;
    return total;
}

MicroUsd compute_cost(const UsageTotals& usage, const Pricing& pricing) {
    auto term = [](std::int64_t tokens, MicroUsd per_million) -> MicroUsd {
        return (tokens * per_million + 500000) / 1000000;
    };
    return term(usage.input_tokens, pricing.input_per_million) +
           term(usage.output_tokens, pricing.output_per_million);
}

std::string format_usd(MicroUsd amount) {
    if (amount == 0) return "$0";
    char buf[48];
    const char* sign = amount < 0 ? "-" : "";
    std::int64_t abs = amount < 0 ? -amount : amount;
    std::snprintf(buf, sizeof buf, "%s$%lld.%06lld", sign,
                  static_cast<long long>(abs / 1000000), static_cast<long long>(abs % 1000000));
    return buf;
}

std::vector<Pricing> default_pricing_table() {
    return {
        {"gpt-4o", 2500000, 10000000, 128 * 1024, false},
        {"o1", 15000000, 60000000, 200 * 1024, false},
        {"deepseek-v3", 35000, 550000, 64 * 1024, false},
        {"qwen-max", 800000, 1200000, 32 * 1024, false},
    };
}

const Pricing* find_pricing(const std::vector<Pricing>& table, std::string_view model) {
    for (const Pricing& p : table)
        if (p.model == model) return &p;
    return nullptr;
}

ChatResponse Backend::send_chat(const ChatRequest& req) {
    if (pricing_.context_length > 0) {
        std::int64_t estimated = estimate_request_tokens(req);
        if (estimated > pricing_.context_length)
            throw BackendError(BackendError::Kind::ContextOverflow,
                               "request estimated at " + std::to_string(estimated) +
                                   " tokens exceeds the " +
                                   std::to_string(pricing_.context_length) +
                                   "-token context of " + pricing_.model);
    }
    return do_send(req);
}

ScriptedBackend::ScriptedBackend(Pricing pricing, std::vector<std::string> responses)
    : Backend(std::move(pricing)), responses_(std::move(responses)) {}

ChatResponse ScriptedBackend::do_send(const ChatRequest& req) {
    if (next_ >= responses_.size())
        throw BackendError(BackendError::Kind::ScriptExhausted,
                           "scripted backend exhausted after " +
                               std::to_string(responses_.size()) + " responses");
    ChatResponse resp;
    resp.content = responses_[next_++];
    resp.model = pricing_.model;
    resp.finish_reason = "stop";
    resp.usage.input_tokens = estimate_request_tokens(req);
    resp.usage.output_tokens = estimate_tokens(resp.content);
    return resp;
}

std::unique_ptr<Backend> ScriptedBackend::clone() const {
    return std::make_unique<ScriptedBackend>(pricing_, responses_);
}

HttpBackend::HttpBackend(Pricing pricing, BackendConfig cfg, std::string api_key)
    : Backend(std::move(pricing)), cfg_(std::move(cfg)), api_key_(std::move(api_key)) {}

std::unique_ptr<Backend> HttpBackend::clone() const {
    return std::make_unique<HttpBackend>(pricing_, cfg_, api_key_);
}

namespace {

// Splits "http://host:port/prefix" into client target and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    std::size_t scheme = base_url.find("://");
    std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    std::size_t slash = base_url.find('/', host_start);
    if (slash == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, slash), prefix};
}

}  // namespace

ChatResponse HttpBackend::do_send(const ChatRequest& req) {
    json payload;
    payload["model"] = req.model.empty() ? cfg_.model : req.model;
    payload["temperature"] = req.temperature;
    if (req.max_output_tokens) payload["max_tokens"] = *req.max_output_tokens;
    payload["messages"] = json::array();
    for (const ChatMessage& m : req.messages)
        payload["messages"].push_back({{"role", m.role}, {"content", m.content}});
    std::string body = payload.dump();

    auto [target, prefix] = split_base_url(cfg_.base_url);
    std::string path = prefix + "/v1/chat/completions";

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    std::string last_failure;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::seconds(2));

        httplib::Client client(target);
        client.set_connection_timeout(cfg_.timeout_seconds, 0);
        client.set_read_timeout(cfg_.timeout_seconds, 0);
        client.set_write_timeout(cfg_.timeout_seconds, 0);

        httplib::Result res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_failure = "transport failure: " + httplib::to_string(res.error());
            continue;  // one retry on timeout-class failures
        }
        if (res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 200);
            if (attempt > 0)
                throw BackendError(BackendError::Kind::HttpStatus, last_failure, res->status);
            continue;
        }
        if (res->status >= 400)
            throw BackendError(BackendError::Kind::HttpStatus,
                               "HTTP " + std::to_string(res->status) + ": " +
                                   res->body.substr(0, 200),
                               res->status);

        json parsed = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty())
            throw BackendError(BackendError::Kind::MalformedResponse,
                               "response JSON lacks choices[0]: " + res->body.substr(0, 200));

        const json& choice = parsed["choices"][0];
        if (!choice.contains("message") || !choice["message"].contains("content"))
            throw BackendError(BackendError::Kind::MalformedResponse,
                               "choices[0].message.content missing");

        ChatResponse resp;
        resp.content = choice["message"]["content"].get<std::string>();
        resp.model = parsed.value("model", cfg_.model);
        resp.finish_reason = choice.value("finish_reason", "");
        if (parsed.contains("usage")) {
            resp.usage.input_tokens = parsed["usage"].value("prompt_tokens", 0);
            resp.usage.output_tokens = parsed["usage"].value("completion_tokens", 0);
        } else {
            resp.usage.input_tokens = estimate_request_tokens(req);
            resp.usage.output_tokens = estimate_tokens(resp.content);
        }
        return resp;
    }
    throw BackendError(BackendError::Kind::Timeout,
                       "request failed after retry: " + last_failure);
}

namespace {

std::vector<std::string> load_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw BackendError(BackendError::Kind::UnknownKind,
                           "cannot read script file: " + path.string());
    json parsed = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_array())
        throw BackendError(BackendError::Kind::MalformedResponse,
                           "script file must be a JSON array of strings: " + path.string());
    std::vector<std::string> responses;
    for (const json& item : parsed) {
        if (!item.is_string())
            throw BackendError(BackendError::Kind::MalformedResponse,
                               "script entries must be strings: " + path.string());
        responses.push_back(item.get<std::string>());
    }
    return responses;
}

Pricing resolve_pricing(const std::vector<Pricing>& table, const std::string& model) {
    if (const Pricing* p = find_pricing(table, model)) return *p;
    Pricing zero;
    zero.model = model;
    zero.unpriced = true;
    return zero;
}

}  // namespace

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg,
                                      const std::vector<Pricing>& pricing_table) {
    Pricing pricing = resolve_pricing(pricing_table, cfg.model);
    switch (cfg.kind) {
        case BackendKind::Scripted:
            return std::make_unique<ScriptedBackend>(std::move(pricing),
                                                     load_script(cfg.script_path));
        case BackendKind::Http: {
            std::string key;
            if (!cfg.api_key_env.empty()) {
                const char* v = std::getenv(cfg.api_key_env.c_str());
                if (!v || !*v)
                    throw BackendError(BackendError::Kind::MissingApiKey,
                                       "environment variable " + cfg.api_key_env +
                                           " is not set");
                key = v;
            }
            return std::make_unique<HttpBackend>(std::move(pricing), cfg, std::move(key));
        }
    }
    throw BackendError(BackendError::Kind::UnknownKind, "unknown backend kind");
}

std::unique_ptr<Backend> make_trial_backend(const BackendConfig& cfg,
                                            const std::vector<Pricing>& pricing_table,
                                            const std::string& task_id) {
    if (cfg.kind == BackendKind::Scripted &&
        std::filesystem::is_directory(cfg.script_path)) {
        BackendConfig per_task = cfg;
        per_task.script_path =
            (std::filesystem::path(cfg.script_path) / (task_id + ".json")).string();
        return make_backend(per_task, pricing_table);
    }
    return make_backend(cfg, pricing_table);
}

}  // namespace foamgpt
