// motper command-line front end over the C interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "motper/motper.h"

using json = nlohmann::json;

namespace {

int die(const std::string& kind, const std::string& msg) {
    json e = {{"schema", "motper.error/1"}, {"error", kind}, {"message", msg}};
    std::cerr << e.dump(2) << "\n";
    return 1;
}

std::string slurp(const std::string& path) {
    std::stringstream ss;
    if (path == "-") {
        ss << std::cin.rdbuf();
    } else {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot read " + path);
        ss << f.rdbuf();
    }
    return ss.str();
}

json load(const std::string& path) {
    std::string text = slurp(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

// a descriptor or report turned into the wrapped input form
json wrapped(json in) {
    if (in.is_object() && in.value("schema", "") == "motper.report/1") in = in.at("input");
    if (in.is_object() && in.contains("curve")) in = json{{"descriptor", in}};
    return in;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periods, relations and Mumford-Tate groups of semi-elliptic 1-motives"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(motper_version()));

    long bits = 256, guard = 32, confirm = 2;
    std::string max_height = "1e6", out_path;
    std::uint64_t seed = 0;
    int count = 5, indent = 2;
    std::string input = "-", relations_path, element_path;

    auto* o_bits = app.add_option("--bits", bits, "working precision in bits")->capture_default_str()->check(CLI::Range(16L, 1L << 20));
    auto* o_height = app.add_option("--max-height", max_height, "height bound for relation searches")->capture_default_str();
    auto* o_seed = app.add_option("--seed", seed, "seed for sampling");
    auto* o_guard = app.add_option("--tolerance-guard", guard, "guard bits")->capture_default_str()->check(CLI::Range(0L, 1L << 16));
    auto* o_confirm = app.add_option("--confirm-factor", confirm, "precision factor of the confirming rerun")
                          ->capture_default_str()
                          ->check(CLI::Range(2L, 16L));
    app.add_option("-o,--output", out_path, "write the report here instead of stdout");
    app.add_option("--indent", indent, "JSON indentation, -1 for compact")->capture_default_str();

    const char* about[][2] = {{"periods", "period matrices of M and M*, duality and determinant checks"},
                              {"classify", "case, dimensions and certified relation list"},
                              {"verify", "re-check a relation list against a supplied or rebuilt period matrix"},
                              {"relations", "integer relation search on a list of constants"},
                              {"mt-sample", "seeded case-conforming Mumford-Tate elements"},
                              {"mt-act", "apply a Mumford-Tate element and re-verify the relations"}};
    CLI::Option* o_count = nullptr;
    for (auto& a : about) {
        auto* sc = app.add_subcommand(a[0], a[1]);
        sc->add_option("input", input, "descriptor, wrapped input or report (- for stdin)")->capture_default_str();
        if (std::string(a[0]) == "verify") sc->add_option("--relations", relations_path, "relation list or classify report");
        if (std::string(a[0]) == "mt-act") sc->add_option("--element", element_path, "element {a, u, u_star, sigma}");
        if (std::string(a[0]) == "mt-sample") o_count = sc->add_option("--count", count, "number of elements")->check(CLI::Range(1, 10000));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage errors are plain errors here; help and version exit 0
        return app.exit(e) == 0 ? 0 : 1;
    }
    std::string command = app.get_subcommands().front()->get_name();

    std::string text;
    try {
        json in = load(input);
        if (command != "relations" && (!relations_path.empty() || !element_path.empty())) {
            in = wrapped(in);
            if (!relations_path.empty()) {
                json r = load(relations_path);
                if (r.is_object() && r.value("schema", "") == "motper.report/1") r = r.at("result").at("relations");
                in["relations"] = r;
            }
            if (!element_path.empty()) in["element"] = load(element_path);
        }
        text = in.dump();
    } catch (const std::exception& e) {
        return die("ParseError", e.what());
    }

    motper_session* s = nullptr;
    if (motper_session_create(&s) != MOTPER_OK) return die("Internal", "cannot create a session");
    auto check = [&](motper_status st) {
        if (st == MOTPER_OK) return true;
        die(motper_status_name(st), motper_session_last_error(s));
        return false;
    };
    bool ok = true;
    if (o_bits->count()) ok = ok && check(motper_session_set_working_bits(s, bits));
    if (o_guard->count()) ok = ok && check(motper_session_set_guard_bits(s, guard));
    if (o_confirm->count()) ok = ok && check(motper_session_set_confirm_factor(s, confirm));
    if (o_height->count()) ok = ok && check(motper_session_set_max_height(s, max_height.c_str()));
    if (o_seed->count()) ok = ok && check(motper_session_set_seed(s, seed));
    if (o_count && o_count->count()) ok = ok && check(motper_session_set_count(s, count));

    int code = 1;
    motper_report* r = nullptr;
    if (ok && check(motper_run(s, command.c_str(), text.c_str(), &r))) {
        std::string out = motper_report_json(r, indent);
        code = motper_report_exit_code(r);
        if (out_path.empty()) {
            std::cout << out << "\n";
        } else {
            std::ofstream f(out_path);
            f << out << "\n";
            if (!f) code = die("Internal", "cannot write " + out_path);
        }
        motper_report_destroy(r);
    }
    motper_session_destroy(s);
    return code;
}
