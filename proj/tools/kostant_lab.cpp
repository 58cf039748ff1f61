// kostant-lab: one problem document in, one report document out.
//
//   kostant-lab <subcommand> --in problem.json [--out report.json]
//               [--order N] [--mode formal|exact] [--tol T] [--grid G]
//
// Exit status 0 only for status "ok"; 1 for an error report; 2 for usage errors.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <kostant/io.hpp>

namespace
{

using kostant::io::json;

const std::map<std::string, std::string> subcommand_kind{
    {"solve2d", "solve2d"},           {"h1", "solve_h1"},  {"top", "solve_top"},     {"h2dim6", "solve_h2_dim6"},
    {"flat-section", "flat_section"}, {"verify", "verify"}, {"expand", "expand_jets"},
};

struct flags {
    std::string in;
    std::string out;
    std::optional<int> order;
    std::optional<std::string> mode;
    std::optional<double> tol;
    std::optional<std::string> grid;
};

json read_document(const std::string &path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw kostant::error(kostant::error_code::parse_error, "cannot read " + path);
    }
    try {
        return json::parse(f);
    } catch (const json::parse_error &e) {
        throw kostant::error(kostant::error_code::parse_error, e.what());
    }
}

// Command-line flags override the document's options block. --grid takes a
// grid literal or a bare points-per-axis count.
void apply_flags(json &doc, const std::string &kind, const flags &fl)
{
    if (!doc.is_object()) {
        throw kostant::error(kostant::error_code::schema_error, "problem document must be an object");
    }
    if (!doc.contains("kind")) {
        doc["kind"] = kind;
    } else if (doc["kind"] != kind) {
        throw kostant::error(kostant::error_code::schema_error,
                             "kind: document kind does not match subcommand (expected '" + kind + "')");
    }
    json &opts = doc["options"];
    if (opts.is_null()) {
        opts = json::object();
    }
    if (fl.order) {
        opts["order"] = *fl.order;
    }
    if (fl.mode) {
        opts["mode"] = *fl.mode;
    }
    if (fl.tol) {
        opts["tolerance"] = *fl.tol;
    }
    if (fl.grid) {
        json g;
        try {
            g = json::parse(*fl.grid);
        } catch (const json::parse_error &e) {
            throw kostant::error(kostant::error_code::parse_error, std::string("--grid: ") + e.what());
        }
        if (g.is_number_integer()) {
            json merged = opts.contains("grid") ? opts["grid"] : json::object();
            merged["points"] = g;
            g = merged;
        }
        opts["grid"] = g;
    }
    if (opts.empty()) {
        doc.erase("options");
    }
}

int execute(const std::string &sub, const flags &fl)
{
    const std::string kind = subcommand_kind.at(sub);
    kostant::io::report rep;
    try {
        json doc = read_document(fl.in);
        apply_flags(doc, kind, fl);
        rep = kostant::io::run(kostant::io::parse_problem_json(doc));
    } catch (const kostant::error &e) {
        rep = kostant::io::error_report(kind, e);
    }
    const std::string text = rep.to_json().dump(2) + "\n";
    if (fl.out.empty() || fl.out == "-") {
        std::cout << text;
    } else {
        try {
            kostant::io::write_atomically(fl.out, text);
        } catch (const std::exception &e) {
            std::cerr << "kostant-lab: " << e.what() << '\n';
            return 2;
        }
    }
    if (!rep.ok) {
        std::cerr << "kostant-lab: " << rep.failure->first << ": " << rep.failure->second << '\n';
    }
    return rep.ok ? 0 : 1;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Kostant complex solvers for hyperbolic normal forms"};
    app.require_subcommand(1);
    flags fl;
    for (const auto &[name, kind] : subcommand_kind) {
        auto *s = app.add_subcommand(name, "problem kind " + kind);
        s->add_option("--in", fl.in, "problem document (JSON)")->required()->check(CLI::ExistingFile);
        s->add_option("--out", fl.out, "report path (stdout when omitted)");
        s->add_option("--order", fl.order, "truncation order")->check(CLI::Range(2, 64));
        s->add_option("--mode", fl.mode, "coefficient representation")->check(CLI::IsMember({"formal", "exact"}));
        s->add_option("--tol", fl.tol, "residual tolerance")->check(CLI::PositiveNumber);
        s->add_option("--grid", fl.grid, "grid literal (JSON) or points per axis");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    for (auto *s : app.get_subcommands()) {
        return execute(s->get_name(), fl);
    }
    return 2;
}
