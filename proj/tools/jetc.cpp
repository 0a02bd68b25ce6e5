// jetc: batch driver over .jet problem files.

#include <jetc/commands.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

int main(int argc, char** argv) {
    CLI::App app{"Connections, curvature and integrability checks on jet bundles"};
    app.require_subcommand(1);

    std::string file;
    std::string out_path;
    bool as_json = false;
    jetc::CommandOptions opt;
    std::string box, init, at, corner, exact;
    double step = 0.0;

    const std::map<std::string, std::string> about = {
        {"curvature", "print the curvature components"},
        {"flat", "test whether the curvature vanishes"},
        {"geometric", "test whether a connection on J^k lands in J^(k+1)"},
        {"prolong", "list the prolonged equations of an order-0 connection"},
        {"surjective-at", "test surjectivity of the prolongation at --at"},
        {"solve", "integrate over --box from --init and write a trace"},
        {"paths", "compare axis orders from --init to --corner"},
        {"eps-check", "test whether the epsilon section is a connection"},
        {"phg-curvature", "print connection and Frobenius defects"},
        {"exactness-at", "brute-force preimage check at --at"},
    };
    for (const std::string& name : jetc::command_names()) {
        CLI::App* sub = app.add_subcommand(name, about.at(name));
        sub->add_option("file", file, "problem file")->required();
        sub->add_option("--tol", opt.tol, "numeric zero tolerance");
        sub->add_option("--samples", opt.samples, "random samples per zero test");
        sub->add_flag("--symbolic", opt.symbolic, "accept only symbolic zeros");
        sub->add_flag("--strict", opt.strict, "reject non-geometric connections in solve");
        sub->add_flag("--json", as_json, "print the JSON report");
        sub->add_option("--box", box, "NAME or a:b,c:d,...");
        sub->add_option("--step", step, "grid step");
        sub->add_option("--init", init, "NAME or initial values in coordinate order");
        sub->add_option("--at", at, "NAME or point values in coordinate order");
        sub->add_option("--corner", corner, "path end point over the base");
        sub->add_option("--exact", exact, "closed form for the first fiber coordinate");
        sub->add_option("--out", out_path, "CSV path for the solution trace");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    auto given = [&](const char* flag) { return chosen->count(flag) > 0; };
    if (given("--box")) opt.box = box;
    if (given("--step")) opt.step = step;
    if (given("--init")) opt.init = init;
    if (given("--at")) opt.at = at;
    if (given("--corner")) opt.corner = corner;
    if (given("--exact")) opt.exact = exact;

    std::string command = chosen->get_name();
    try {
        jetc::ProblemFile pf = jetc::load(file);
        jetc::CommandResult res = jetc::run_command(command, pf, opt);
        if (!out_path.empty()) {
            if (!res.trace) throw jetc::Error("--out needs a command that produces a trace");
            std::ofstream out(out_path);
            if (!out) throw jetc::Error("cannot write " + out_path);
            res.trace->write_csv(out);
        }
        std::cout << (as_json ? res.report.dump(2) + "\n" : res.text);
        return res.exit_code;
    } catch (const std::exception& e) {
        if (as_json) {
            nlohmann::json err = {{"schema", 1}, {"command", command}, {"error", e.what()}};
            std::cout << err.dump(2) << '\n';
        }
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
