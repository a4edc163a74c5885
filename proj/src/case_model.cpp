#include "foamgpt/case_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace foamgpt {

namespace {

std::string read_file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw CaseIoError("cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_bytes(const fs::path& p, std::string_view bytes) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw CaseIoError("cannot write " + p.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CaseIoError("short write to " + p.string());
}

bool looks_binary(std::string_view bytes) {
    std::size_t n = std::min<std::size_t>(bytes.size(), 8192);
    for (std::size_t i = 0; i < n; ++i)
        if (bytes[i] == '\0') return true;
    return false;
}

std::string basename_of(std::string_view path) {
    std::size_t slash = path.rfind('/');
    return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

bool under_polymesh(std::string_view path) {
    return path.find("polyMesh/") != std::string_view::npos;
}

const std::set<std::string, std::less<>> kConstraintTypes = {
    "empty", "symmetry", "symmetryPlane", "wedge", "cyclic", "processor",
};

struct TurbulenceRegistry {
    std::set<std::string, std::less<>> ras = {
        "kEpsilon", "RNGkEpsilon", "realizableKE", "kOmega",
        "kOmegaSST", "kkLOmega",   "LRR",          "LaunderSharmaKE",
    };
    std::set<std::string, std::less<>> les = {
        "Smagorinsky",
        "WALE",
        "kEqn",
        "dynamicKEqn",
    };
};

const TurbulenceRegistry kTurbulence;

const FoamValue* dict_path(const FoamDict& dict, std::initializer_list<const char*> keys) {
    const FoamDict* cur = &dict;
    const FoamValue* found = nullptr;
    for (const char* key : keys) {
        if (!cur) return nullptr;
        found = cur->find(key);
        if (!found) return nullptr;
        cur = found->as_dict();
    }
    return found;
}

std::string atom_text(const FoamValue* v) {
    if (!v) return {};
    if (const Atom* a = v->as_atom()) return a->lexeme;
    return {};
}

bool wildcardish_key(const std::string& key) {
    return key.find('"') != std::string::npos || key.find('*') != std::string::npos ||
           key.find('|') != std::string::npos;
}

}  // namespace

const FoamFile* CaseTree::find_file(std::string_view path) const {
    auto it = entries.find(std::string(path));
    if (it == entries.end()) return nullptr;
    return it->second.file();
}

bool CaseTree::contains(std::string_view path) const {
    return entries.count(std::string(path)) != 0;
}

void CaseTree::put_file(std::string path, FoamFile file) {
    file.source_path = path;
    entries[std::move(path)] = CaseEntry{std::move(file)};
}

void CaseTree::put_blob(std::string path, std::string bytes) {
    entries[std::move(path)] = CaseEntry{std::move(bytes)};
}

CaseTree load_case(const fs::path& dir) {
    if (!fs::exists(dir) || !fs::is_directory(dir))
        throw CaseIoError("case directory does not exist: " + dir.string());

    CaseTree tree;
    tree.root_name = dir.filename().string();

    std::vector<std::string> rel_paths;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), dir).generic_string();
        if (rel.find("..") != std::string::npos) {
            tree.warnings.push_back("skipped path escaping case root: " + rel);
            continue;
        }
        rel_paths.push_back(std::move(rel));
    }
    std::sort(rel_paths.begin(), rel_paths.end());

    for (const std::string& rel : rel_paths) {
        std::string bytes = read_file_bytes(dir / rel);
        bool is_boundary = rel == "constant/polyMesh/boundary";
        if (!is_boundary && under_polymesh(rel)) {
            tree.put_blob(rel, std::move(bytes));
            continue;
        }
        if (looks_binary(bytes)) {
            tree.put_blob(rel, std::move(bytes));
            continue;
        }
        try {
            FoamFile file = parse_foam_file(bytes);
            std::string object = atom_text(file.header.find("object"));
            if (!object.empty() && object != basename_of(rel))
                tree.warnings.push_back("header object '" + object + "' does not match filename: " +
                                        rel);
            tree.put_file(rel, std::move(file));
        } catch (const FoamParseError& e) {
            tree.warnings.push_back("stored as blob, parse failed for " + rel + ": " + e.what());
            tree.put_blob(rel, std::move(bytes));
        }
    }
    return tree;
}

void write_case(const CaseTree& tree, const fs::path& dir) {
    fs::create_directories(dir);
    FormatStyle style;
    style.banner = true;
    for (const auto& [rel, entry] : tree.entries) {
        fs::path dest = dir / rel;
        if (const FoamFile* file = entry.file()) {
            write_file_bytes(dest, serialize_foam_file(*file, style));
        } else {
            write_file_bytes(dest, *entry.blob());
        }
    }
}

bool is_constraint_patch_type(std::string_view type) {
    return kConstraintTypes.count(type) != 0;
}

std::vector<std::pair<std::string, std::string>> boundary_patches(const CaseTree& tree) {
    std::vector<std::pair<std::string, std::string>> patches;
    const FoamFile* boundary = tree.find_file("constant/polyMesh/boundary");
    if (!boundary) return patches;
    for (const auto& entry : boundary->body.entries()) {
        const FoamList* list = entry.value.as_list();
        if (!entry.key.empty() || !list) continue;
        for (std::size_t i = 0; i + 1 < list->items.size(); ++i) {
            const Atom* name = list->items[i].as_atom();
            const FoamDict* patch = list->items[i + 1].as_dict();
            if (!name || !patch) continue;
            patches.emplace_back(name->lexeme, atom_text(patch->find("type")));
            ++i;
        }
    }
    return patches;
}

namespace {

void rule_patch_constraints(const CaseTree& tree, std::vector<Violation>& out) {
    auto patches = boundary_patches(tree);
    if (patches.empty()) return;
    for (const auto& [path, entry] : tree.entries) {
        if (path.rfind("0/", 0) != 0 || !entry.is_parsed()) continue;
        const FoamFile& field = *entry.file();
        const FoamValue* bf = field.body.find("boundaryField");
        const FoamDict* bf_dict = bf ? bf->as_dict() : nullptr;
        if (!bf_dict) continue;
        bool has_wildcard = std::any_of(bf_dict->entries().begin(), bf_dict->entries().end(),
                                        [](const DictEntry& e) { return wildcardish_key(e.key); });
        for (const auto& [patch_name, patch_type] : patches) {
            if (!is_constraint_patch_type(patch_type)) continue;
            const FoamValue* pv = bf_dict->find(patch_name);
            if (!pv) {
                if (!has_wildcard)
                    out.push_back({"R1", path,
                                   "constraint patch '" + patch_name + "' of type '" + patch_type +
                                       "' has no boundaryField entry",
                                   Severity::Fatal});
                continue;
            }
            const FoamDict* pd = pv->as_dict();
            std::string field_type = pd ? atom_text(pd->find("type")) : std::string();
            if (field_type != patch_type)
                out.push_back({"R1", path,
                               "patch type '" + field_type + "' not constraint type '" +
                                   patch_type + "' for patch '" + patch_name + "'",
                               Severity::Fatal});
        }
    }
}

void rule_required_files(const CaseTree& tree, const RequirementSet& reqs,
                         std::vector<Violation>& out) {
    for (const std::string& path : reqs.required_files) {
        if (!tree.contains(path))
            out.push_back({"R2", path,
                           "missing required file for solver '" + reqs.solver + "': " + path,
                           Severity::Fatal});
    }
}

void rule_required_keywords(const CaseTree& tree, const RequirementSet& reqs,
                            std::vector<Violation>& out) {
    for (const auto& [file_path, key_path] : reqs.required_keywords) {
        const FoamFile* file = tree.find_file(file_path);
        if (!file || !find_entry(*file, key_path))
            out.push_back({"R3", file_path,
                           "keyword '" + key_path + "' required by solver '" + reqs.solver +
                               "' not found in " + file_path,
                           Severity::Fatal});
    }

    // Multigrid solver blocks must name a smoother.
    const FoamFile* fv_solution = tree.find_file("system/fvSolution");
    if (!fv_solution) return;
    const FoamValue* solvers = fv_solution->body.find("solvers");
    const FoamDict* solvers_dict = solvers ? solvers->as_dict() : nullptr;
    if (!solvers_dict) return;
    for (const auto& block : solvers_dict->entries()) {
        const FoamDict* cfg = block.value.as_dict();
        if (!cfg) continue;
        if (atom_text(cfg->find("solver")) == "GAMG" && !cfg->find("smoother"))
            out.push_back({"R3", "system/fvSolution",
                           "keyword 'smoother' not found in \"fvSolution\" solver block '" +
                               block.key + "' (required by GAMG)",
                           Severity::Fatal});
    }
}

void rule_control_dict(const CaseTree& tree, std::vector<Violation>& out) {
    const FoamFile* control = tree.find_file("system/controlDict");
    if (!control) return;  // absence is R2's finding
    for (const char* key : {"application", "startTime", "endTime", "deltaT"}) {
        if (!control->body.find(key))
            out.push_back({"R4", "system/controlDict",
                           std::string("controlDict is missing '") + key + "'", Severity::Fatal});
    }
    const FoamValue* start = control->body.find("startTime");
    const FoamValue* end = control->body.find("endTime");
    if (start && end && start->is_number() && end->is_number()) {
        if (end->as_number()->value <= start->as_number()->value)
            out.push_back({"R4", "system/controlDict",
                           "endTime (" + end->as_number()->lexeme + ") must exceed startTime (" +
                               start->as_number()->lexeme + ")",
                           Severity::Fatal});
    }
}

// Style check: a dictionary's header object should match its filename.
void rule_header_object(const CaseTree& tree, std::vector<Violation>& out) {
    for (const auto& [path, entry] : tree.entries) {
        const FoamFile* file = entry.file();
        if (!file) continue;
        std::string object = atom_text(file->header.find("object"));
        if (!object.empty() && object != basename_of(path))
            out.push_back({"W1", path,
                           "header object '" + object + "' does not match the filename",
                           Severity::Warning});
    }
}

void rule_turbulence(const CaseTree& tree, std::vector<Violation>& out) {
    const FoamFile* props = tree.find_file("constant/turbulenceProperties");
    if (!props) return;
    std::string sim = atom_text(props->body.find("simulationType"));
    if (sim.empty()) {
        out.push_back({"R5", "constant/turbulenceProperties",
                       "turbulenceProperties has no simulationType", Severity::Fatal});
        return;
    }
    if (sim == "laminar") return;
    if (sim == "RAS") {
        std::string model = atom_text(dict_path(props->body, {"RAS", "RASModel"}));
        if (model.empty())
            out.push_back({"R5", "constant/turbulenceProperties", "RAS block has no RASModel",
                           Severity::Fatal});
        else if (!kTurbulence.ras.count(model))
            out.push_back({"R5", "constant/turbulenceProperties",
                           "'" + model + "' is not a known RAS turbulence model",
                           Severity::Fatal});
        return;
    }
    if (sim == "LES") {
        std::string model = atom_text(dict_path(props->body, {"LES", "LESModel"}));
        if (model.empty())
            out.push_back({"R5", "constant/turbulenceProperties", "LES block has no LESModel",
                           Severity::Fatal});
        else if (!kTurbulence.les.count(model))
            out.push_back({"R5", "constant/turbulenceProperties",
                           "'" + model + "' is not a known LES turbulence model",
                           Severity::Fatal});
        return;
    }
    out.push_back({"R5", "constant/turbulenceProperties",
                   "unknown simulationType '" + sim + "'", Severity::Fatal});
}

}  // namespace

std::vector<Violation> validate_case(const CaseTree& tree, const RequirementSet& reqs) {
    std::vector<Violation> out;
    rule_patch_constraints(tree, out);
    rule_required_files(tree, reqs, out);
    rule_required_keywords(tree, reqs, out);
    rule_control_dict(tree, out);
    rule_turbulence(tree, out);
    rule_header_object(tree, out);
    std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
        return a.severity == Severity::Fatal && b.severity != Severity::Fatal;
    });
    return out;
}

RequirementSet required_artifacts(const std::string& solver_name) {
    auto base = [&](std::vector<std::string> extra) {
        RequirementSet reqs;
        reqs.solver = solver_name;
        reqs.required_files = {"system/controlDict", "system/fvSchemes", "system/fvSolution"};
        for (auto& p : extra) reqs.required_files.push_back(std::move(p));
        return reqs;
    };

    if (solver_name == "icoFoam") {
        return base({"0/U", "0/p", "constant/transportProperties"});
    }
    if (solver_name == "simpleFoam" || solver_name == "pisoFoam" ||
        solver_name == "pimpleFoam") {
        return base({"0/U", "0/p", "constant/transportProperties",
                     "constant/turbulenceProperties"});
    }
    if (solver_name == "buoyantBoussinesqSimpleFoam" ||
        solver_name == "buoyantBoussinesqPimpleFoam") {
        return base({"0/U", "0/p", "0/p_rgh", "0/T", "constant/transportProperties",
                     "constant/turbulenceProperties", "constant/g"});
    }
    if (solver_name == "interFoam") {
        return base({"0/U", "0/p_rgh", "0/alpha.water", "constant/transportProperties",
                     "constant/turbulenceProperties", "constant/g", "system/setFieldsDict"});
    }
    if (solver_name == "MPPICFoam") {
        // The carrier-phase fields are per-cloud names, U.air and p.
        return base({"0/U.air", "0/p", "constant/transportProperties",
                     "constant/turbulenceProperties", "constant/kinematicCloudProperties",
                     "constant/g"});
    }
    RequirementSet reqs = base({"0/U", "0/p"});
    reqs.heuristic = true;
    return reqs;
}

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool assertion_holds(const CaseTree& tree, const Assertion& a, std::string& why) {
    const FoamFile* file = tree.find_file(a.file);
    if (!file) {
        why = "file " + a.file + " is absent or unparsed";
        return false;
    }
    const FoamValue* value = nullptr;
    FoamValue body_value;
    if (a.path.empty()) {
        body_value = FoamValue{file->body};
        value = &body_value;
    } else {
        value = find_entry(*file, a.path);
    }
    if (a.op == "exists") {
        if (value) return true;
        why = a.file + ":" + a.path + " does not exist";
        return false;
    }
    if (!value) {
        why = a.file + ":" + a.path + " does not exist";
        return false;
    }
    std::string actual = trim_copy(value_to_string(*value));

    if (a.op == "equals") {
        if (!a.values.empty() && value_text_equal(actual, a.values[0])) return true;
        why = a.file + ":" + a.path + " is '" + actual + "', expected '" +
              (a.values.empty() ? "" : a.values[0]) + "'";
        return false;
    }
    if (a.op == "ends_with") {
        std::string want = a.values.empty() ? "" : a.values[0];
        if (actual.size() >= want.size() &&
            actual.compare(actual.size() - want.size(), want.size(), want) == 0)
            return true;
        why = a.file + ":" + a.path + " is '" + actual + "', expected suffix '" + want + "'";
        return false;
    }
    if (a.op == "contains" || a.op == "contains_any") {
        for (const std::string& want : a.values)
            if (actual.find(want) != std::string::npos) return true;
        why = a.file + ":" + a.path + " does not contain any expected fragment";
        return false;
    }
    if (a.op == "in") {
        for (const std::string& want : a.values)
            if (value_text_equal(actual, want)) return true;
        why = a.file + ":" + a.path + " is '" + actual + "', not one of the allowed values";
        return false;
    }
    why = "unknown assertion op '" + a.op + "'";
    return false;
}

}  // namespace

CheckResult check_assertions(const CaseTree& tree, const std::vector<Assertion>& assertions) {
    CheckResult result;
    if (assertions.empty()) {
        result.outcome = CheckOutcome::Indeterminate;
        return result;
    }
    for (const Assertion& a : assertions) {
        std::string why;
        if (!assertion_holds(tree, a, why)) result.failed_assertions.push_back(why);
    }
    result.outcome = result.failed_assertions.empty() ? CheckOutcome::Passed
                                                      : CheckOutcome::Failed;
    return result;
}

std::string describe(const Violation& v) {
    std::string s = "[";
    s += v.rule_id;
    s += v.severity == Severity::Fatal ? "][Fatal] " : "][Warning] ";
    s += v.path;
    s += ": ";
    s += v.message;
    return s;
}

}  // namespace foamgpt
