#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <fstream>

#include "foamgpt/case_model.hpp"
#include "support/temp_dir.hpp"

using namespace foamgpt;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = FOAMGPT_FIXTURES_DIR;

std::size_t fatal_count(const std::vector<Violation>& vs) {
    std::size_t n = 0;
    for (const auto& v : vs)
        if (v.severity == Severity::Fatal) ++n;
    return n;
}

std::vector<Violation> fatal_of_rule(const std::vector<Violation>& vs, const std::string& rule) {
    std::vector<Violation> out;
    for (const auto& v : vs)
        if (v.severity == Severity::Fatal && v.rule_id == rule) out.push_back(v);
    return out;
}

}  // namespace

TEST_CASE("load_case pulls in the whole cavity tutorial") {
    CaseTree tree = load_case(kFixtures / "cases/cavity");
    for (const char* path : {"0/U", "0/p", "system/controlDict", "system/fvSchemes",
                             "system/fvSolution", "system/blockMeshDict"}) {
        CAPTURE(path);
        CHECK(tree.find_file(path) != nullptr);
    }
    CHECK(tree.find_file("constant/polyMesh/boundary") != nullptr);
    CHECK(tree.root_name == "cavity");
}

TEST_CASE("load_case edge cases") {
    testing::TempDir tmp;
    SUBCASE("empty directory") {
        CaseTree tree = load_case(tmp.path());
        CHECK(tree.entries.empty());
    }
    SUBCASE("missing directory") {
        CHECK_THROWS_AS(load_case(tmp.path() / "nope"), CaseIoError);
    }
    SUBCASE("binary blob stays opaque") {
        fs::create_directories(tmp.path() / "constant");
        std::ofstream out(tmp.path() / "constant/blob.dat", std::ios::binary);
        out.write("\x00\x01\x02\x7f", 4);
        out.close();
        CaseTree tree = load_case(tmp.path());
        REQUIRE(tree.entries.size() == 1);
        CHECK_FALSE(tree.entries.begin()->second.is_parsed());
        CHECK(tree.entries.begin()->second.blob()->size() == 4);
    }
    SUBCASE("corrupt dictionary degrades to blob with a warning") {
        fs::create_directories(tmp.path() / "system");
        std::ofstream(tmp.path() / "system/broken") << "FoamFile { object broken; } a {";
        CaseTree tree = load_case(tmp.path());
        CHECK_FALSE(tree.entries.begin()->second.is_parsed());
        CHECK_FALSE(tree.warnings.empty());
    }
}

TEST_CASE("boundary_patches reads the patch list") {
    CaseTree tree = load_case(kFixtures / "cases/cavity");
    auto patches = boundary_patches(tree);
    REQUIRE(patches.size() == 3);
    CHECK(patches[0] == std::pair<std::string, std::string>("movingWall", "wall"));
    CHECK(patches[2] == std::pair<std::string, std::string>("frontAndBack", "empty"));
    CHECK(is_constraint_patch_type("empty"));
    CHECK_FALSE(is_constraint_patch_type("wall"));
}

TEST_CASE("unmodified tutorials validate clean for their solvers") {
    const std::pair<const char*, const char*> cases[] = {
        {"cases/cavity", "icoFoam"},
        {"cases/pitzDaily", "simpleFoam"},
        {"cases/hotRoom", "buoyantBoussinesqSimpleFoam"},
        {"cases/damBreak", "interFoam"},
        {"cases/particleColumn", "MPPICFoam"},
        {"cases/mixedVessel", "pimpleFoam"},
    };
    for (const auto& [dir, solver] : cases) {
        CAPTURE(dir);
        CaseTree tree = load_case(kFixtures / dir);
        auto violations = validate_case(tree, required_artifacts(solver));
        for (const auto& v : violations) CAPTURE(describe(v));
        CHECK(fatal_count(violations) == 0);
    }
}

TEST_CASE("the three documented failure classes are each detected exactly once") {
    SUBCASE("patch declared empty but field says otherwise (R1)") {
        CaseTree tree = load_case(kFixtures / "cases/cavity");
        FoamDict bad;
        bad.append("type", atom("fixedValue"));
        FoamList v;
        v.style = ListStyle::Inline;
        v.items.push_back(atom("uniform"));
        v.items.push_back(vector3(0, 0, 0));
        bad.append("value", FoamValue{std::move(v)});
        FoamFile u = set_entry(*tree.find_file("0/U"), "boundaryField/frontAndBack",
                               FoamValue{std::move(bad)});
        tree.put_file("0/U", std::move(u));

        auto violations = validate_case(tree, required_artifacts("icoFoam"));
        auto r1 = fatal_of_rule(violations, "R1");
        REQUIRE(r1.size() == 1);
        CHECK(fatal_count(violations) == 1);
        CHECK(r1[0].message.find("not constraint type 'empty'") != std::string::npos);
        CHECK(r1[0].path == "0/U");
    }
    SUBCASE("interFoam case without p_rgh (R2)") {
        CaseTree tree = load_case(kFixtures / "cases/damBreak");
        tree.entries.erase("0/p_rgh");
        auto violations = validate_case(tree, required_artifacts("interFoam"));
        auto r2 = fatal_of_rule(violations, "R2");
        REQUIRE(r2.size() == 1);
        CHECK(fatal_count(violations) == 1);
        CHECK(r2[0].path == "0/p_rgh");
    }
    SUBCASE("GAMG block without smoother (R3)") {
        CaseTree tree = load_case(kFixtures / "cases/pitzDaily");
        FoamDict gamg;
        gamg.append("solver", atom("GAMG"));
        gamg.append("tolerance", FoamValue{make_number("1e-06")});
        gamg.append("relTol", FoamValue{make_number("0.1")});
        FoamFile fv = set_entry(*tree.find_file("system/fvSolution"), "solvers/p",
                                FoamValue{std::move(gamg)});
        tree.put_file("system/fvSolution", std::move(fv));

        auto violations = validate_case(tree, required_artifacts("simpleFoam"));
        auto r3 = fatal_of_rule(violations, "R3");
        REQUIRE(r3.size() == 1);
        CHECK(fatal_count(violations) == 1);
        CHECK(r3[0].message.find("smoother") != std::string::npos);
        CHECK(r3[0].message.find("fvSolution") != std::string::npos);
    }
}

TEST_CASE("controlDict sanity rule") {
    CaseTree tree = load_case(kFixtures / "cases/cavity");
    SUBCASE("endTime must exceed startTime") {
        FoamFile control = set_entry(*tree.find_file("system/controlDict"), "endTime",
                                     FoamValue{make_number("0")});
        tree.put_file("system/controlDict", std::move(control));
        auto violations = validate_case(tree, required_artifacts("icoFoam"));
        CHECK(fatal_of_rule(violations, "R4").size() == 1);
    }
    SUBCASE("missing deltaT flagged") {
        FoamFile control = make_foam_file("dictionary", "controlDict");
        control.body.append("application", atom("icoFoam"));
        control.body.append("startTime", FoamValue{make_number("0")});
        control.body.append("endTime", FoamValue{make_number("1")});
        tree.put_file("system/controlDict", std::move(control));
        auto violations = validate_case(tree, required_artifacts("icoFoam"));
        CHECK(fatal_of_rule(violations, "R4").size() == 1);
    }
}

TEST_CASE("turbulence registry rule") {
    CaseTree tree = load_case(kFixtures / "cases/pitzDaily");
    SUBCASE("registered models pass") {
        for (const char* model : {"kEpsilon", "RNGkEpsilon", "kOmegaSST", "kkLOmega", "LRR"}) {
            FoamFile props = set_entry(*tree.find_file("constant/turbulenceProperties"),
                                       "RAS/RASModel", atom(model));
            tree.put_file("constant/turbulenceProperties", std::move(props));
            auto violations = validate_case(tree, required_artifacts("simpleFoam"));
            CAPTURE(model);
            CHECK(fatal_of_rule(violations, "R5").empty());
        }
    }
    SUBCASE("unknown model is fatal") {
        FoamFile props = set_entry(*tree.find_file("constant/turbulenceProperties"),
                                   "RAS/RASModel", atom("kEpsilonTypo"));
        tree.put_file("constant/turbulenceProperties", std::move(props));
        auto violations = validate_case(tree, required_artifacts("simpleFoam"));
        CHECK(fatal_of_rule(violations, "R5").size() == 1);
    }
    SUBCASE("LES model names check against the LES registry") {
        FoamFile props = make_foam_file("dictionary", "turbulenceProperties");
        props.body.append("simulationType", atom("LES"));
        FoamDict les;
        les.append("LESModel", atom("Smagorinsky"));
        props.body.append("LES", FoamValue{std::move(les)});
        tree.put_file("constant/turbulenceProperties", std::move(props));
        auto violations = validate_case(tree, required_artifacts("simpleFoam"));
        CHECK(fatal_of_rule(violations, "R5").empty());
    }
}

TEST_CASE("solver-specific keyword requirements use rule R3") {
    CaseTree tree = load_case(kFixtures / "cases/cavity");
    RequirementSet reqs = required_artifacts("icoFoam");
    reqs.required_keywords.push_back({"system/fvSolution", "PISO/nCorrectors"});
    CHECK(fatal_of_rule(validate_case(tree, reqs), "R3").empty());

    reqs.required_keywords.push_back({"system/fvSolution", "PISO/nMissingKnob"});
    auto violations = validate_case(tree, reqs);
    auto r3 = fatal_of_rule(violations, "R3");
    REQUIRE(r3.size() == 1);
    CHECK(r3[0].message.find("nMissingKnob") != std::string::npos);
}

TEST_CASE("style findings are warnings and sort after fatals") {
    CaseTree tree = load_case(kFixtures / "cases/cavity");
    FoamFile u = *tree.find_file("0/U");
    u.header.insert_or_assign("object", atom("velocity"));  // header/filename mismatch
    tree.put_file("0/U", std::move(u));
    tree.entries.erase("constant/transportProperties");     // fatal R2 alongside

    auto violations = validate_case(tree, required_artifacts("icoFoam"));
    REQUIRE(violations.size() >= 2);
    CHECK(violations.front().severity == Severity::Fatal);
    bool warned = false;
    for (const auto& v : violations)
        if (v.rule_id == "W1" && v.severity == Severity::Warning && v.path == "0/U")
            warned = true;
    CHECK(warned);
    CHECK(fatal_count(violations) == 1);
}

TEST_CASE("required_artifacts registry") {
    SUBCASE("interFoam includes the VOF-specific artifacts") {
        RequirementSet reqs = required_artifacts("interFoam");
        for (const char* path : {"0/p_rgh", "0/alpha.water", "constant/transportProperties",
                                 "system/setFieldsDict"}) {
            CAPTURE(path);
            CHECK(std::find(reqs.required_files.begin(), reqs.required_files.end(), path) !=
                  reqs.required_files.end());
        }
        CHECK_FALSE(reqs.heuristic);
    }
    SUBCASE("icoFoam is the exact minimal set") {
        RequirementSet reqs = required_artifacts("icoFoam");
        std::vector<std::string> expected = {"system/controlDict", "system/fvSchemes",
                                             "system/fvSolution",  "0/U",
                                             "0/p",                "constant/transportProperties"};
        std::sort(reqs.required_files.begin(), reqs.required_files.end());
        std::sort(expected.begin(), expected.end());
        CHECK(reqs.required_files == expected);
    }
    SUBCASE("unknown solvers fall back to a flagged heuristic") {
        RequirementSet reqs = required_artifacts("myFoam");
        CHECK(reqs.heuristic);
        CHECK(std::find(reqs.required_files.begin(), reqs.required_files.end(),
                        "system/controlDict") != reqs.required_files.end());
        CHECK(std::find(reqs.required_files.begin(), reqs.required_files.end(), "0/U") !=
              reqs.required_files.end());
    }
}

TEST_CASE("write_case round-trips parsed files and blobs") {
    testing::TempDir tmp;
    CaseTree tree = load_case(kFixtures / "cases/cavity");
    tree.put_blob("constant/polyMesh/points", std::string("\x01\x02raw bytes\x00x", 13));

    write_case(tree, tmp.path() / "out");
    CaseTree back = load_case(tmp.path() / "out");

    REQUIRE(back.entries.size() == tree.entries.size());
    for (const auto& [path, entry] : tree.entries) {
        CAPTURE(path);
        auto it = back.entries.find(path);
        REQUIRE(it != back.entries.end());
        if (entry.is_parsed()) {
            REQUIRE(it->second.is_parsed());
            CHECK(structurally_equal(*entry.file(), *it->second.file()));
        } else {
            CHECK(*entry.blob() == *it->second.blob());
        }
    }

    SUBCASE("empty tree creates an empty directory") {
        CaseTree empty;
        write_case(empty, tmp.path() / "empty");
        CHECK(fs::is_directory(tmp.path() / "empty"));
        CHECK(load_case(tmp.path() / "empty").entries.empty());
    }
}

TEST_CASE("check_assertions evaluates task satisfaction") {
    CaseTree baseline = load_case(kFixtures / "cases/cavity");

    std::vector<Assertion> wants_2ms = {
        {"0/U", "boundaryField/movingWall/value", "equals", {"uniform (2 0 0)"}}};

    SUBCASE("fails on the baseline, passes once modified") {
        CHECK(check_assertions(baseline, wants_2ms).outcome == CheckOutcome::Failed);

        CaseTree modified = baseline;
        FoamList v;
        v.style = ListStyle::Inline;
        v.items.push_back(atom("uniform"));
        v.items.push_back(vector3(2, 0, 0));
        FoamFile u = set_entry(*modified.find_file("0/U"), "boundaryField/movingWall/value",
                               FoamValue{std::move(v)});
        modified.put_file("0/U", std::move(u));
        CHECK(check_assertions(modified, wants_2ms).passed());
    }
    SUBCASE("no assertions is indeterminate, not a pass") {
        CheckResult r = check_assertions(baseline, {});
        CHECK(r.outcome == CheckOutcome::Indeterminate);
        CHECK_FALSE(r.passed());
    }
    SUBCASE("ends_with on temperature values") {
        CaseTree hot = load_case(kFixtures / "cases/hotRoom");
        std::vector<Assertion> wants_320 = {
            {"0/T", "boundaryField/HOT_WALL/value", "ends_with", {"320"}}};
        CHECK(check_assertions(hot, wants_320).outcome == CheckOutcome::Failed);

        FoamList v;
        v.style = ListStyle::Inline;
        v.items.push_back(atom("uniform"));
        v.items.push_back(FoamValue{make_number("320")});
        FoamFile t = set_entry(*hot.find_file("0/T"), "boundaryField/HOT_WALL/value",
                               FoamValue{std::move(v)});
        hot.put_file("0/T", std::move(t));
        CHECK(check_assertions(hot, wants_320).passed());
    }
    SUBCASE("in and contains operators") {
        std::vector<Assertion> sine = {
            {"0/U", "boundaryField/movingWall/type", "in",
             {"uniformFixedValue", "codedFixedValue"}},
            {"0/U", "boundaryField/movingWall", "contains_any", {"sin", "table"}}};
        CHECK(check_assertions(baseline, sine).outcome == CheckOutcome::Failed);
    }
    SUBCASE("missing file fails with a reason") {
        std::vector<Assertion> missing = {
            {"constant/turbulenceProperties", "RAS/RASModel", "equals", {"kOmegaSST"}}};
        CheckResult r = check_assertions(baseline, missing);
        CHECK(r.outcome == CheckOutcome::Failed);
        REQUIRE(r.failed_assertions.size() == 1);
        CHECK(r.failed_assertions[0].find("absent") != std::string::npos);
    }
}
