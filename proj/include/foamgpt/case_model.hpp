#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "foamgpt/foam_dict.hpp"

namespace foamgpt {

// One file inside a case: a parsed dictionary or opaque bytes.
struct CaseEntry {
    std::variant<FoamFile, std::string> data;

    bool is_parsed() const { return std::holds_alternative<FoamFile>(data); }
    const FoamFile* file() const { return std::get_if<FoamFile>(&data); }
    FoamFile* file() { return std::get_if<FoamFile>(&data); }
    const std::string* blob() const { return std::get_if<std::string>(&data); }
};

// In-memory model of a whole case directory. Paths are case-relative with
// forward slashes and no '..' segments.
struct CaseTree {
    std::map<std::string, CaseEntry> entries;
    std::string root_name;
    std::vector<std::string> warnings;

    const FoamFile* find_file(std::string_view path) const;
    bool contains(std::string_view path) const;
    void put_file(std::string path, FoamFile file);
    void put_blob(std::string path, std::string bytes);
};

enum class Severity { Fatal, Warning };

struct Violation {
    std::string rule_id;
    std::string path;
    std::string message;
    Severity severity = Severity::Fatal;
};

struct RequirementSet {
    std::string solver;
    std::vector<std::string> required_files;
    // (file path, keyword path) pairs that must resolve via get_entry.
    std::vector<std::pair<std::string, std::string>> required_keywords;
    bool heuristic = false;
};

class CaseIoError : public std::runtime_error {
public:
    explicit CaseIoError(const std::string& message) : std::runtime_error(message) {}
};

CaseTree load_case(const std::filesystem::path& dir);
void write_case(const CaseTree& tree, const std::filesystem::path& dir);

// Runs all registered rules (R1 patch constraints, R2 required files,
// R3 keyword requirements, R4 controlDict sanity, R5 turbulence registry).
// Fatal violations sort first.
std::vector<Violation> validate_case(const CaseTree& tree, const RequirementSet& reqs);

// Solver registry lookup; unknown solvers get a minimal heuristic default.
RequirementSet required_artifacts(const std::string& solver_name);

// (patch name, patch type) pairs from constant/polyMesh/boundary.
std::vector<std::pair<std::string, std::string>> boundary_patches(const CaseTree& tree);

bool is_constraint_patch_type(std::string_view type);

// Declarative task-satisfaction checks over the case AST.
struct Assertion {
    std::string file;
    std::string path;                 // keyword path; empty means the whole body
    std::string op;                   // equals|ends_with|contains|contains_any|in|exists
    std::vector<std::string> values;  // expected value(s); single element for most ops
};

enum class CheckOutcome { Passed, Failed, Indeterminate };

struct CheckResult {
    CheckOutcome outcome = CheckOutcome::Indeterminate;
    std::vector<std::string> failed_assertions;

    bool passed() const { return outcome == CheckOutcome::Passed; }
};

// Indeterminate when the assertion list is empty (an uncheckable task is
// never a pass).
CheckResult check_assertions(const CaseTree& tree, const std::vector<Assertion>& assertions);

std::string describe(const Violation& v);

}  // namespace foamgpt
