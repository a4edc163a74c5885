#include "support/oracle.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace foamgpt::testing {

namespace {

FoamValue inline_tokens(std::vector<FoamValue> items) {
    FoamList list;
    list.items = std::move(items);
    list.style = ListStyle::Inline;
    return FoamValue{std::move(list)};
}

FoamValue paren_list(std::vector<FoamValue> items) {
    FoamList list;
    list.items = std::move(items);
    list.style = ListStyle::Parenthesized;
    return FoamValue{std::move(list)};
}

FoamValue num(const std::string& lexeme) { return FoamValue{make_number(lexeme)}; }

FoamValue uniform_vector(const std::string& x, const std::string& y, const std::string& z) {
    VectorLike vec;
    vec.components = {make_number(x), make_number(y), make_number(z)};
    return inline_tokens({atom("uniform"), FoamValue{std::move(vec)}});
}

FoamValue uniform_scalar(const std::string& v) {
    return inline_tokens({atom("uniform"), num(v)});
}

FoamValue vec3(const std::string& x, const std::string& y, const std::string& z) {
    VectorLike vec;
    vec.components = {make_number(x), make_number(y), make_number(z)};
    return FoamValue{std::move(vec)};
}

FoamValue dims(int a, int b, int c, int d, int e, int f, int g) {
    DimensionSet ds;
    ds.exponents = {a, b, c, d, e, f, g};
    return FoamValue{ds};
}

FoamDict bc(std::vector<std::pair<std::string, FoamValue>> entries) {
    FoamDict d;
    for (auto& [k, v] : entries) d.append(k, std::move(v));
    return d;
}

FoamFile field_file(const std::string& cls, const std::string& object, FoamValue dimensions,
                    FoamValue internal,
                    std::vector<std::pair<std::string, FoamDict>> patches) {
    FoamFile f = make_foam_file(cls, object);
    f.body.append("dimensions", std::move(dimensions));
    f.body.append("internalField", std::move(internal));
    FoamDict boundary;
    for (auto& [name, dict] : patches) boundary.append(name, FoamValue{std::move(dict)});
    f.body.append("boundaryField", FoamValue{std::move(boundary)});
    return f;
}

FoamFile turbulence_file(const std::string& sim, const std::string& model) {
    FoamFile f = make_foam_file("dictionary", "turbulenceProperties");
    f.body.append("simulationType", atom(sim));
    if (sim != "laminar") {
        FoamDict sub;
        sub.append(sim == "RAS" ? "RASModel" : "LESModel", atom(model));
        sub.append("turbulence", atom("on"));
        sub.append("printCoeffs", atom("on"));
        if (sim == "LES") {
            sub.append("delta", atom("cubeRootVol"));
            FoamDict coeffs;
            coeffs.append("deltaCoeff", num("1"));
            sub.append("cubeRootVolCoeffs", FoamValue{std::move(coeffs)});
        }
        f.body.append(sim, FoamValue{std::move(sub)});
    }
    return f;
}

FoamFile control_dict(const std::string& solver, const std::string& end_time,
                      const std::string& delta_t) {
    FoamFile f = make_foam_file("dictionary", "controlDict");
    f.body.append("application", atom(solver));
    f.body.append("startFrom", atom("startTime"));
    f.body.append("startTime", num("0"));
    f.body.append("stopAt", atom("endTime"));
    f.body.append("endTime", num(end_time));
    f.body.append("deltaT", num(delta_t));
    f.body.append("writeControl", atom("timeStep"));
    f.body.append("writeInterval", num("100"));
    f.body.append("writeFormat", atom("ascii"));
    f.body.append("writePrecision", num("6"));
    f.body.append("timeFormat", atom("general"));
    f.body.append("runTimeModifiable", atom("true"));
    return f;
}

FoamFile fv_schemes(bool steady) {
    FoamFile f = make_foam_file("dictionary", "fvSchemes");
    FoamDict ddt;
    ddt.append("default", atom(steady ? "steadyState" : "Euler"));
    f.body.append("ddtSchemes", FoamValue{std::move(ddt)});
    FoamDict grad;
    grad.append("default", inline_tokens({atom("Gauss"), atom("linear")}));
    f.body.append("gradSchemes", FoamValue{std::move(grad)});
    FoamDict div;
    div.append("default", atom("none"));
    div.append("div(phi,U)", inline_tokens({atom("Gauss"), atom("linearUpwind"), atom("grad(U)")}));
    div.append("div(rhoPhi,U)", inline_tokens({atom("Gauss"), atom("linearUpwind"), atom("grad(U)")}));
    div.append("div(phi,alpha)", inline_tokens({atom("Gauss"), atom("vanLeer")}));
    div.append("div(phi,k)", inline_tokens({atom("Gauss"), atom("upwind")}));
    div.append("div(phi,epsilon)", inline_tokens({atom("Gauss"), atom("upwind")}));
    div.append("div(phi,omega)", inline_tokens({atom("Gauss"), atom("upwind")}));
    f.body.append("divSchemes", FoamValue{std::move(div)});
    FoamDict lap;
    lap.append("default", inline_tokens({atom("Gauss"), atom("linear"), atom("corrected")}));
    f.body.append("laplacianSchemes", FoamValue{std::move(lap)});
    FoamDict interp;
    interp.append("default", atom("linear"));
    f.body.append("interpolationSchemes", FoamValue{std::move(interp)});
    FoamDict sn;
    sn.append("default", atom("corrected"));
    f.body.append("snGradSchemes", FoamValue{std::move(sn)});
    return f;
}

FoamDict gamg_block() {
    return bc({{"solver", atom("GAMG")},
               {"smoother", atom("GaussSeidel")},
               {"tolerance", num("1e-07")},
               {"relTol", num("0.01")}});
}

FoamDict smooth_block() {
    return bc({{"solver", atom("smoothSolver")},
               {"smoother", atom("symGaussSeidel")},
               {"tolerance", num("1e-06")},
               {"relTol", num("0.1")}});
}

FoamFile fv_solution(const std::string& pressure_field, bool pimple) {
    FoamFile f = make_foam_file("dictionary", "fvSolution");
    FoamDict solvers;
    solvers.append(pressure_field, FoamValue{gamg_block()});
    FoamDict p_final = gamg_block();
    p_final.insert_or_assign("relTol", num("0"));
    solvers.append(pressure_field + "Final", FoamValue{std::move(p_final)});
    solvers.append("U", FoamValue{smooth_block()});
    solvers.append("UFinal", FoamValue{smooth_block()});
    solvers.append("\"(k|epsilon|omega)\"", FoamValue{smooth_block()});
    if (pressure_field == "p_rgh") {
        FoamDict alpha = bc({{"nAlphaCorr", num("2")},
                             {"nAlphaSubCycles", num("1")},
                             {"cAlpha", num("1")},
                             {"solver", atom("smoothSolver")},
                             {"smoother", atom("symGaussSeidel")},
                             {"tolerance", num("1e-08")},
                             {"relTol", num("0")}});
        solvers.append("\"alpha.water.*\"", FoamValue{std::move(alpha)});
    }
    f.body.append("solvers", FoamValue{std::move(solvers)});
    FoamDict algo = bc({{"nNonOrthogonalCorrectors", num("0")}});
    if (pimple) {
        algo.append("nOuterCorrectors", num("1"));
        algo.append("nCorrectors", num("2"));
        algo.append("momentumPredictor", atom("yes"));
        f.body.append("PIMPLE", FoamValue{std::move(algo)});
    } else {
        FoamDict residuals;
        residuals.append(pressure_field, num("1e-3"));
        residuals.append("U", num("1e-4"));
        algo.append("residualControl", FoamValue{std::move(residuals)});
        f.body.append("SIMPLE", FoamValue{std::move(algo)});
        FoamDict relax;
        FoamDict eq;
        eq.append("U", num("0.7"));
        eq.append("\".*\"", num("0.7"));
        relax.append("equations", FoamValue{std::move(eq)});
        f.body.append("relaxationFactors", FoamValue{std::move(relax)});
    }
    return f;
}

FoamFile gravity_file() {
    FoamFile f = make_foam_file("uniformDimensionedVectorField", "g");
    f.body.append("dimensions", dims(0, 1, -2, 0, 0, 0, 0));
    f.body.append("value", vec3("0", "-9.81", "0"));
    return f;
}

FoamFile two_phase_transport(const std::string& liquid, const std::string& liquid_nu,
                             const std::string& liquid_rho, const std::string& sigma) {
    FoamFile f = make_foam_file("dictionary", "transportProperties");
    f.body.append("phases", paren_list({atom(liquid), atom("air")}));
    FoamDict liq = bc({{"transportModel", atom("Newtonian")},
                       {"nu", num(liquid_nu)},
                       {"rho", num(liquid_rho)}});
    f.body.append(liquid, FoamValue{std::move(liq)});
    FoamDict air = bc({{"transportModel", atom("Newtonian")},
                       {"nu", num("1.48e-05")},
                       {"rho", num("1")}});
    f.body.append("air", FoamValue{std::move(air)});
    f.body.append("sigma", num(sigma));
    return f;
}

FoamFile single_phase_transport(const std::string& nu) {
    FoamFile f = make_foam_file("dictionary", "transportProperties");
    f.body.append("transportModel", atom("Newtonian"));
    f.body.append("nu", num(nu));
    return f;
}

std::string render(const FoamFile& f) { return serialize_foam_file(f); }

const FoamFile& baseline_file(const TaskSpec& task, const std::string& path) {
    if (!task.baseline_case)
        throw std::runtime_error("task " + task.id + " has no baseline case");
    const FoamFile* f = task.baseline_case->find_file(path);
    if (!f) throw std::runtime_error("baseline of " + task.id + " lacks " + path);
    return *f;
}

// Recursively renames atoms; used for phase renames in dictionaries.
void rename_atoms(FoamValue& v, const std::string& from, const std::string& to) {
    if (Atom* a = std::get_if<Atom>(&v.node)) {
        if (a->lexeme == from) a->lexeme = to;
        return;
    }
    if (FoamList* list = std::get_if<FoamList>(&v.node)) {
        for (FoamValue& item : list->items) rename_atoms(item, from, to);
        return;
    }
    if (FoamDict* dict = std::get_if<FoamDict>(&v.node)) {
        for (DictEntry& e : dict->entries()) {
            if (e.key == from) e.key = to;
            rename_atoms(e.value, from, to);
        }
    }
}

//
// Table II edits: the exact files a correct modification would rewrite.
//

std::vector<std::pair<std::string, std::string>> table2_edit(const TaskSpec& task) {
    const std::string& id = task.id;

    if (id == "cavity-topwall-2ms") {
        FoamFile u = set_entry(baseline_file(task, "0/U"), "boundaryField/movingWall/value",
                               uniform_vector("2", "0", "0"));
        return {{"0/U", render(u)}};
    }
    if (id == "cavity-topwall-sine") {
        FoamDict fn = bc({{"type", atom("sine")},
                          {"frequency", num("10")},
                          {"amplitude", vec3("5", "0", "0")},
                          {"level", vec3("0", "0", "0")}});
        FoamDict moving = bc({{"type", atom("uniformFixedValue")}});
        moving.append("uniformValue", FoamValue{std::move(fn)});
        FoamFile u = set_entry(baseline_file(task, "0/U"), "boundaryField/movingWall",
                               FoamValue{std::move(moving)});
        return {{"0/U", render(u)}};
    }
    if (id == "cavity-mesh-15") {
        FoamFile mesh = baseline_file(task, "system/blockMeshDict");
        FoamValue* blocks = mesh.body.find("blocks");
        if (!blocks || !blocks->is_list())
            throw std::runtime_error("cavity blockMeshDict has no blocks list");
        for (FoamValue& item : std::get<FoamList>(blocks->node).items) {
            VectorLike* vec = std::get_if<VectorLike>(&item.node);
            if (vec && vec->components.size() == 3 && vec->components[0].lexeme == "20")
                vec->components = {make_number("15"), make_number("15"), make_number("1")};
        }
        return {{"system/blockMeshDict", render(mesh)}};
    }
    if (id == "cavity-endtime-5") {
        FoamFile control =
            set_entry(baseline_file(task, "system/controlDict"), "endTime", num("5"));
        return {{"system/controlDict", render(control)}};
    }
    if (id == "cavity-turb-rngke")
        return {{"constant/turbulenceProperties", render(turbulence_file("RAS", "RNGkEpsilon"))}};
    if (id == "cavity-turb-komegasst")
        return {{"constant/turbulenceProperties", render(turbulence_file("RAS", "kOmegaSST"))}};
    if (id == "cavity-turb-kklomega")
        return {{"constant/turbulenceProperties", render(turbulence_file("RAS", "kkLOmega"))}};
    if (id == "cavity-turb-lrr")
        return {{"constant/turbulenceProperties", render(turbulence_file("RAS", "LRR"))}};

    if (id == "pitz-inlet-20ms") {
        FoamFile u = set_entry(baseline_file(task, "0/U"), "boundaryField/inlet/value",
                               uniform_vector("20", "0", "0"));
        return {{"0/U", render(u)}};
    }
    if (id == "pitz-turb-komegasst")
        return {{"constant/turbulenceProperties", render(turbulence_file("RAS", "kOmegaSST"))}};
    if (id == "pitz-turb-smagorinsky")
        return {{"constant/turbulenceProperties", render(turbulence_file("LES", "Smagorinsky"))}};

    if (id == "hotroom-hotwall-320") {
        FoamFile t = set_entry(baseline_file(task, "0/T"), "boundaryField/HOT_WALL/value",
                               uniform_scalar("320"));
        return {{"0/T", render(t)}};
    }

    if (id == "dambreak-oil") {
        FoamFile transport = two_phase_transport("oil", "1e-04", "900", "0.032");
        FoamFile alpha = baseline_file(task, "0/alpha.water");
        alpha.header.insert_or_assign("object", atom("alpha.oil"));
        FoamFile set_fields = baseline_file(task, "system/setFieldsDict");
        for (DictEntry& e : set_fields.body.entries())
            rename_atoms(e.value, "alpha.water", "alpha.oil");
        return {{"constant/transportProperties", render(transport)},
                {"0/alpha.oil", render(alpha)},
                {"system/setFieldsDict", render(set_fields)}};
    }
    if (id == "dambreak-turb-ke")
        return {{"constant/turbulenceProperties", render(turbulence_file("RAS", "kEpsilon"))}};

    if (id == "particle-velocity-2ms") {
        FoamFile u = set_entry(baseline_file(task, "0/U.air"), "boundaryField/inlet/value",
                               uniform_vector("0", "2", "0"));
        u = set_entry(u, "internalField", uniform_vector("0", "2", "0"));
        FoamFile cloud = set_entry(baseline_file(task, "constant/kinematicCloudProperties"),
                                   "subModels/injectionModels/model1/U0", vec3("0", "2", "0"));
        return {{"0/U.air", render(u)}, {"constant/kinematicCloudProperties", render(cloud)}};
    }
    if (id == "particle-fluid-co") {
        FoamFile transport = baseline_file(task, "constant/transportProperties");
        transport = set_entry(transport, "rho", num("1.145"));
        transport = set_entry(transport, "nu", num("1.53e-05"));
        return {{"constant/transportProperties", render(transport)}};
    }
    if (id == "particle-turb-ke")
        return {{"constant/turbulenceProperties", render(turbulence_file("RAS", "kEpsilon"))}};

    if (id == "vessel-omega-15") {
        FoamFile u = set_entry(baseline_file(task, "0/U"), "boundaryField/rotor/omega",
                               num("15"));
        return {{"0/U", render(u)}};
    }
    if (id == "vessel-turb-ke")
        return {{"constant/turbulenceProperties", render(turbulence_file("RAS", "kEpsilon"))}};

    throw std::runtime_error("no oracle edit for task " + id);
}

//
// Table III generated cases.
//

FoamDict noslip() { return bc({{"type", atom("noSlip")}}); }
FoamDict empty_bc() { return bc({{"type", atom("empty")}}); }
FoamDict zerograd() { return bc({{"type", atom("zeroGradient")}}); }

std::vector<std::pair<std::string, std::string>> vof_case(
    const std::string& liquid_nu, const std::string& liquid_rho, const std::string& end_time,
    const std::string& turb_sim, const std::string& turb_model,
    std::vector<std::string> wall_patches, std::vector<std::string> open_patches,
    std::vector<std::string> empty_patches, std::vector<std::string> symmetry_patches = {}) {
    std::vector<std::pair<std::string, FoamDict>> u_bcs, p_bcs, a_bcs;
    for (const std::string& w : wall_patches) {
        u_bcs.emplace_back(w, noslip());
        p_bcs.emplace_back(w, bc({{"type", atom("fixedFluxPressure")},
                                  {"value", uniform_scalar("0")}}));
        a_bcs.emplace_back(w, zerograd());
    }
    for (const std::string& o : open_patches) {
        u_bcs.emplace_back(o, bc({{"type", atom("pressureInletOutletVelocity")},
                                  {"value", uniform_vector("0", "0", "0")}}));
        p_bcs.emplace_back(o, bc({{"type", atom("totalPressure")},
                                  {"p0", uniform_scalar("0")}}));
        a_bcs.emplace_back(o, bc({{"type", atom("inletOutlet")},
                                  {"inletValue", uniform_scalar("0")},
                                  {"value", uniform_scalar("0")}}));
    }
    for (const std::string& s : symmetry_patches) {
        u_bcs.emplace_back(s, bc({{"type", atom("symmetryPlane")}}));
        p_bcs.emplace_back(s, bc({{"type", atom("symmetryPlane")}}));
        a_bcs.emplace_back(s, bc({{"type", atom("symmetryPlane")}}));
    }
    for (const std::string& e : empty_patches) {
        u_bcs.emplace_back(e, empty_bc());
        p_bcs.emplace_back(e, empty_bc());
        a_bcs.emplace_back(e, empty_bc());
    }

    FoamFile u = field_file("volVectorField", "U", dims(0, 1, -1, 0, 0, 0, 0),
                            uniform_vector("0", "0", "0"), u_bcs);
    FoamFile p_rgh = field_file("volScalarField", "p_rgh", dims(1, -1, -2, 0, 0, 0, 0),
                                uniform_scalar("0"), p_bcs);
    FoamFile alpha = field_file("volScalarField", "alpha.water", dims(0, 0, 0, 0, 0, 0, 0),
                                uniform_scalar("0"), a_bcs);

    FoamFile control = control_dict("interFoam", end_time, "1e-04");
    control.body.insert_or_assign("writeControl", atom("adjustable"));
    control.body.insert_or_assign("writeInterval", num("0.01"));
    control.body.append("adjustTimeStep", atom("yes"));
    control.body.append("maxCo", num("1"));
    control.body.append("maxAlphaCo", num("1"));
    control.body.append("maxDeltaT", num("1"));

    return {{"0/U", render(u)},
            {"0/p_rgh", render(p_rgh)},
            {"0/alpha.water", render(alpha)},
            {"constant/g", render(gravity_file())},
            {"constant/transportProperties",
             render(two_phase_transport("water", liquid_nu, liquid_rho, "0.07"))},
            {"constant/turbulenceProperties", render(turbulence_file(turb_sim, turb_model))},
            {"system/controlDict", render(control)},
            {"system/fvSchemes", render(fv_schemes(false))},
            {"system/fvSolution", render(fv_solution("p_rgh", true))}};
}

std::vector<std::pair<std::string, std::string>> single_phase_case(
    const std::string& solver, const std::string& inlet_velocity, const std::string& turb_sim,
    const std::string& turb_model, std::vector<std::string> wall_patches,
    std::vector<std::string> inlet_patches, std::vector<std::string> outlet_patches,
    std::vector<std::string> slip_patches, std::vector<std::string> symmetry_patches,
    std::vector<std::string> empty_patches) {
    std::vector<std::pair<std::string, FoamDict>> u_bcs, p_bcs;
    for (const std::string& w : wall_patches) {
        u_bcs.emplace_back(w, noslip());
        p_bcs.emplace_back(w, zerograd());
    }
    for (const std::string& i : inlet_patches) {
        u_bcs.emplace_back(i, bc({{"type", atom("fixedValue")},
                                  {"value", uniform_vector(inlet_velocity, "0", "0")}}));
        p_bcs.emplace_back(i, zerograd());
    }
    for (const std::string& o : outlet_patches) {
        u_bcs.emplace_back(o, zerograd());
        p_bcs.emplace_back(o, bc({{"type", atom("fixedValue")},
                                  {"value", uniform_scalar("0")}}));
    }
    for (const std::string& s : slip_patches) {
        u_bcs.emplace_back(s, bc({{"type", atom("slip")}}));
        p_bcs.emplace_back(s, bc({{"type", atom("slip")}}));
    }
    for (const std::string& s : symmetry_patches) {
        u_bcs.emplace_back(s, bc({{"type", atom("symmetry")}}));
        p_bcs.emplace_back(s, bc({{"type", atom("symmetry")}}));
    }
    for (const std::string& e : empty_patches) {
        u_bcs.emplace_back(e, empty_bc());
        p_bcs.emplace_back(e, empty_bc());
    }

    FoamFile u = field_file("volVectorField", "U", dims(0, 1, -1, 0, 0, 0, 0),
                            uniform_vector(inlet_velocity, "0", "0"), u_bcs);
    FoamFile p = field_file("volScalarField", "p", dims(0, 2, -2, 0, 0, 0, 0),
                            uniform_scalar("0"), p_bcs);

    bool steady = solver == "simpleFoam";
    FoamFile control = control_dict(solver, steady ? "500" : "1", steady ? "1" : "1e-03");

    return {{"0/U", render(u)},
            {"0/p", render(p)},
            {"constant/transportProperties", render(single_phase_transport("1.5e-05"))},
            {"constant/turbulenceProperties", render(turbulence_file(turb_sim, turb_model))},
            {"system/controlDict", render(control)},
            {"system/fvSchemes", render(fv_schemes(steady))},
            {"system/fvSolution", render(fv_solution("p", !steady))}};
}

FoamFile set_fields_dict(const std::string& alpha_field) {
    FoamFile f = make_foam_file("dictionary", "setFieldsDict");
    f.body.append("defaultFieldValues",
                  paren_list({atom("volScalarFieldValue"), atom(alpha_field), num("0")}));
    FoamDict box = bc({{"box", inline_tokens({vec3("0", "0", "-1"), vec3("0.003", "0.02", "1")})}});
    box.append("fieldValues",
               paren_list({atom("volScalarFieldValue"), atom(alpha_field), num("1")}));
    f.body.append("regions", paren_list({atom("boxToCell"), FoamValue{std::move(box)}}));
    return f;
}

std::vector<std::pair<std::string, std::string>> table3_files(const TaskSpec& task) {
    const std::string& id = task.id;
    if (id == "bubble")
        return vof_case("1e-06", "1000", "0.5", "laminar", "", {"bottom", "sideWalls"}, {"top"},
                        {"frontAndBack"});
    if (id == "droplet")
        return vof_case("1e-06", "1000", "0.5", "laminar", "", {"bottom", "sideWalls"}, {"top"},
                        {"frontAndBack"});
    if (id == "airfoil")
        return single_phase_case("simpleFoam", "20", "RAS", "kEpsilon", {"airfoil"}, {"inlet"},
                                 {"outlet"}, {}, {}, {"frontAndBack"});
    if (id == "motorbike")
        return single_phase_case("simpleFoam", "20", "RAS", "kOmegaSST",
                                 {"ground", "motorBike"}, {"inlet"}, {"outlet"}, {"upperWall"},
                                 {"sides"}, {});
    if (id == "cylinder")
        return single_phase_case("pimpleFoam", "1", "laminar", "", {"cylinder", "walls"},
                                 {"inlet"}, {"outlet"}, {}, {}, {"frontAndBack"});
    if (id == "nozzle") {
        auto files = vof_case("2.5e-06", "832", "0.01", "LES", "Smagorinsky",
                              {"nozzleWalls"}, {"inlet", "outlet"}, {"frontAndBack"}, {"axis"});
        files.emplace_back("system/setFieldsDict", render(set_fields_dict("alpha.water")));
        return files;
    }
    throw std::runtime_error("no oracle case for task " + id);
}

bool has_path(const TaskSpec& task, const std::string& suffix) {
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

std::string plan_response(const TaskSpec& task,
                          const std::vector<std::pair<std::string, std::string>>& files) {
    json plan;
    plan["solver"] = task.solver_hint;
    json cmds = json::array();
    bool generates_setfields = false;
    json file_list = json::array();
    for (const auto& [path, _] : files) {
        file_list.push_back(path);
        if (path == "system/setFieldsDict") generates_setfields = true;
    }
    plan["files"] = file_list;
    if (has_path(task, "system/blockMeshDict")) cmds.push_back("blockMesh");
    if (has_path(task, "system/setFieldsDict") || generates_setfields)
        cmds.push_back("setFields");
    cmds.push_back(task.solver_hint);
    plan["commands"] = cmds;
    return "Here is the build plan.\n" + plan.dump(2) + "\n";
}

std::vector<std::pair<std::string, std::string>> skip_edit_files(const TaskSpec& task) {
    std::string path = "system/controlDict";
    if (!task.assertions.empty() && task.baseline_case &&
        task.baseline_case->find_file(task.assertions.front().file))
        path = task.assertions.front().file;
    return {{path, render(baseline_file(task, path))}};
}

}  // namespace

std::string file_block(const std::string& path, const std::string& content) {
    std::string block = "FILE: " + path + "\n```\n" + content;
    if (block.back() != '\n') block += '\n';
    block += "```\n\n";
    return block;
}

std::vector<std::string> oracle_responses(const TaskSpec& task, bool skip_edit) {
    std::vector<std::pair<std::string, std::string>> files;
    if (task.kind == TaskKind::Modify)
        files = skip_edit ? skip_edit_files(task) : table2_edit(task);
    else
        files = table3_files(task);

    std::string response = "Updated case files follow.\n\n";
    for (const auto& [path, content] : files) response += file_block(path, content);
    return {plan_response(task, files), response};
}

void write_oracle_scripts(const Suite& suite, const fs::path& dir, bool skip_edit) {
    fs::create_directories(dir);
    for (const TaskSpec& task : suite.tasks) {
        json script = json::array();
        for (const std::string& r : oracle_responses(task, skip_edit)) script.push_back(r);
        std::ofstream out(dir / (task.id + ".json"), std::ios::trunc);
        out << script.dump(2) << "\n";
    }
}

std::vector<std::string> cavity_generate_script(const fs::path& cavity_fixture) {
    CaseTree tree = load_case(cavity_fixture);
    json plan = {{"solver", "icoFoam"},
                 {"commands", json::array({"blockMesh", "icoFoam"})},
                 {"files", json::array()}};
    std::string response = "Generated cavity case.\n\n";
    for (const auto& [path, entry] : tree.entries) {
        std::string content;
        if (entry.is_parsed())
            content = serialize_foam_file(*entry.file());
        else
            content = *entry.blob();
        plan["files"].push_back(path);
        response += file_block(path, content);
    }
    return {plan.dump(2), response};
}

}  // namespace foamgpt::testing
