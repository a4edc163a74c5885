#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace foamgpt {

// Money is integer micro-USD throughout; no float drift in cost tables.
using MicroUsd = std::int64_t;

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<int> max_output_tokens;
};

struct UsageTotals {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    std::int64_t total() const { return input_tokens + output_tokens; }
    UsageTotals& operator+=(const UsageTotals& o) {
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        return *this;
    }
};

struct ChatResponse {
    std::string content;
    UsageTotals usage;
    std::string model;
    std::string finish_reason;
};

struct Pricing {
    std::string model;
    MicroUsd input_per_million = 0;   // micro-USD per million input tokens
    MicroUsd output_per_million = 0;  // micro-USD per million output tokens
    std::int64_t context_length = 0;  // tokens; 0 = unknown, overflow check skipped
    bool unpriced = false;
};

enum class BackendKind { Http, Scripted };

struct BackendConfig {
    BackendKind kind = BackendKind::Http;
    std::string base_url;     // http kind, e.g. http://localhost:11434
    std::string api_key_env;  // env var holding the key; empty = no auth header
    std::string model;
    int timeout_seconds = 300;
    std::string script_path;  // scripted kind: response file, or directory of
                              // per-task files named <task_id>.json
};

class BackendError : public std::runtime_error {
public:
    enum class Kind {
        Timeout,
        HttpStatus,
        MalformedResponse,
        ContextOverflow,
        ScriptExhausted,
        MissingApiKey,
        UnknownKind,
    };

    BackendError(Kind k, const std::string& message, int status = 0)
        : std::runtime_error(message), kind(k), http_status(status) {}

    Kind kind;
    int http_status;  // set for HttpStatus
};

// ceil(bytes / 4); 0 for empty text.
std::int64_t estimate_tokens(std::string_view text);
std::int64_t estimate_request_tokens(const ChatRequest& req);

// Exact integer arithmetic, round half-up per term.
MicroUsd compute_cost(const UsageTotals& usage, const Pricing& pricing);

// "$0" for zero, else six decimals: "$75.000000".
std::string format_usd(MicroUsd amount);

std::vector<Pricing> default_pricing_table();
const Pricing* find_pricing(const std::vector<Pricing>& table, std::string_view model);

class Backend {
public:
    virtual ~Backend() = default;

    // Checks the context-length precondition, then dispatches.
    ChatResponse send_chat(const ChatRequest& req);

    const Pricing& pricing() const { return pricing_; }

    // Fresh instance for an independent trial (scripted cursors reset).
    virtual std::unique_ptr<Backend> clone() const = 0;

protected:
    explicit Backend(Pricing pricing) : pricing_(std::move(pricing)) {}
    virtual ChatResponse do_send(const ChatRequest& req) = 0;

    Pricing pricing_;
};

// Deterministic replay backend. Single-consumer: holds the sequence cursor.
class ScriptedBackend final : public Backend {
public:
    ScriptedBackend(Pricing pricing, std::vector<std::string> responses);

    std::size_t responses_total() const { return responses_.size(); }
    std::size_t responses_consumed() const { return next_; }
    std::unique_ptr<Backend> clone() const override;

protected:
    ChatResponse do_send(const ChatRequest& req) override;

private:
    std::vector<std::string> responses_;
    std::size_t next_ = 0;
};

class HttpBackend final : public Backend {
public:
    HttpBackend(Pricing pricing, BackendConfig cfg, std::string api_key);

    std::unique_ptr<Backend> clone() const override;

protected:
    ChatResponse do_send(const ChatRequest& req) override;

private:
    BackendConfig cfg_;
    std::string api_key_;
};

// Reads script files ("JSON array of strings") for scripted kind; resolves the
// API key env var for http kind (MissingApiKey when named but unset).
std::unique_ptr<Backend> make_backend(const BackendConfig& cfg,
                                      const std::vector<Pricing>& pricing_table);

// Trial-scoped construction: a scripted script_path that is a directory
// resolves to <task_id>.json inside it.
std::unique_ptr<Backend> make_trial_backend(const BackendConfig& cfg,
                                            const std::vector<Pricing>& pricing_table,
                                            const std::string& task_id);

}  // namespace foamgpt
