#pragma once
// Command-line front end. Exit codes: 0 success, 1 a requirement was not
// met, 2 usage or load error.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mechgen/domain_io.hpp"
#include "mechgen/generator.hpp"
#include "mechgen/play.hpp"
#include "mechgen/service.hpp"

namespace mechgen {

namespace cli {

enum Exit { kOk = 0, kRequirementFailed = 1, kUsage = 2 };

/// Load failures map to exit code 2.
class LoadError : public Error {
public:
    using Error::Error;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw LoadError("cannot write " + path);
    f << text;
}

template <class F>
auto loading(const std::string& what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const LoadError&) {
        throw;
    } catch (const std::exception& e) {
        throw LoadError(what + ": " + e.what());
    }
}

inline DomainSpec load_domain(const std::vector<std::string>& files, const std::string& overlay, int horizon) {
    std::vector<std::string> texts;
    for (const auto& f : files) texts.push_back(read_file(f));
    DomainSpec spec = loading("domain", [&] { return parse_domains(texts); });
    if (!overlay.empty()) {
        std::string text = read_file(overlay);
        spec = loading("overlay " + overlay, [&] { return apply_overlay(spec, parse_json_text(text)); });
    }
    if (horizon > 0) spec.bounds.horizon = horizon;
    auto v = validate_domain(spec);
    if (!v.ok()) throw LoadError("invalid domain: " + to_json(v).dump());
    return spec;
}

inline MechanicSet load_mechanics(const DomainSpec& spec, const std::string& path, std::ostream& err) {
    std::string text = read_file(path);
    return loading("mechanics " + path, [&] {
        std::vector<std::string> warnings;
        MechanicSet ms = mechanics_from_json(parse_json_text(text), &warnings);
        for (const auto& w : warnings) err << "warning: " << w << "\n";
        auto v = validate_mechanics(spec, ms);
        if (!v.ok()) throw Error(to_json(v).dump());
        return ms;
    });
}

inline const GameInstance& pick_instance(const DomainSpec& spec, const std::string& name) {
    if (name.empty()) return default_instance(spec);
    const GameInstance* inst = spec.instance(name);
    if (!inst) throw LoadError("unknown instance '" + name + "'");
    return *inst;
}

struct Options {
    std::vector<std::string> domains;
    std::string domain, mechanics, trace, out, overlay, seed, instance, controls, data_dir, host = "127.0.0.1";
    int horizon = 0, port = 8080, workers = 2;
};

inline int cmd_generate(const Options& o, std::ostream& out, std::ostream&) {
    DomainSpec spec = load_domain(o.domains, o.overlay, o.horizon);
    GenerationResult r = generate(spec);
    write_output(o.out, serialize_result(r), out);
    return r.status == GenerationStatus::Found ? kOk : kRequirementFailed;
}

inline int cmd_adapt(const Options& o, std::ostream& out, std::ostream& err) {
    DomainSpec spec = load_domain(o.domains, o.overlay, o.horizon);
    MechanicSet seed = load_mechanics(spec, o.seed, err);
    GenerationResult r = adapt(spec, seed);
    write_output(o.out, serialize_result(r), out);
    return r.status == GenerationStatus::Found ? kOk : kRequirementFailed;
}

inline int cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
    DomainSpec spec = load_domain(o.domains, o.overlay, o.horizon);
    MechanicSet ms = load_mechanics(spec, o.mechanics, err);
    auto dom = std::make_shared<const CompiledDomain>(spec);
    auto ev = detail::evaluate_candidate(dom, ms);
    auto hard = check_hard(ms, spec);
    json j = to_json(ev.witnesses, ms);
    j["hard_violations"] = to_json(hard);
    if (ev.progression) j["progression"] = to_json(*ev.progression);
    if (ev.controls) j["controls"] = to_json(*ev.controls);
    const bool ok = ev.ok && hard.empty();
    j["ok"] = ok;
    write_output(o.out, j.dump(2) + "\n", out);
    return ok ? kOk : kRequirementFailed;
}

inline int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    DomainSpec spec = load_domain(o.domains, o.overlay, o.horizon);
    MechanicSet ms = load_mechanics(spec, o.mechanics, err);
    std::string text = read_file(o.trace);
    Trace t = loading("trace " + o.trace, [&] { return trace_from_json(parse_json_text(text), ms); });
    const GameInstance& inst = pick_instance(spec, o.instance.empty() ? t.instance : o.instance);
    auto rep = verify_trace(spec, ms, inst, t);
    write_output(o.out, to_json(rep, ms).dump(2) + "\n", out);
    return rep.playable() ? kOk : kRequirementFailed;
}

inline void print_state(const PlaySession& p, std::ostream& out) {
    const Session& s = p.session();
    out << "tick " << s.time() << ", " << p.agent_to_act() << " to act\n";
    for (const auto& [term, v] : s.state().values) out << "  " << term.param << "(" << term.entity << ") = " << v << "\n";
}

inline int cmd_play(const Options& o, std::istream& in, std::ostream& out, std::ostream& err) {
    DomainSpec spec = load_domain(o.domains, o.overlay, o.horizon);
    MechanicSet ms = load_mechanics(spec, o.mechanics, err);
    std::optional<ControlMapping> controls;
    if (o.controls == "generate") {
        controls = generate_controls(ms, spec.design.controls.value_or(ControlReqs{}), spec.inputs);
    } else if (!o.controls.empty()) {
        std::string text = read_file(o.controls);
        controls = loading("controls " + o.controls, [&] { return control_mapping_from_json(parse_json_text(text), ms); });
    }
    const GameInstance& inst = pick_instance(spec, o.instance);
    PlaySession p("cli", std::make_shared<const CompiledDomain>(spec), ms, controls, inst.name);
    out << "instance " << inst.name << "; enter a number, mechanic name or id, input keys (a+b), or quit\n";
    while (true) {
        print_state(p, out);
        Outcome res = p.outcome();
        if (res != Outcome::Ongoing) {
            out << (res == Outcome::Won ? "you win\n" : "you lose\n");
            return res == Outcome::Won ? kOk : kRequirementFailed;
        }
        const std::string agent = p.agent_to_act();
        auto actions = p.applicable(agent);
        if (actions.empty()) {
            out << "no legal action remains; you lose\n";
            return kRequirementFailed;
        }
        for (std::size_t i = 0; i < actions.size(); ++i) {
            json a = p.action_json(actions[i]);
            out << "  " << i + 1 << ") " << a["label"].get<std::string>();
            if (a.contains("inputs")) {
                std::string keys;
                for (const auto& k : a["inputs"]) keys += (keys.empty() ? "" : "+") + k.get<std::string>();
                out << " [" << keys << "]";
            }
            out << "\n";
        }
        out << "> " << std::flush;
        std::string line;
        if (!std::getline(in, line)) {
            out << "\n";
            return kRequirementFailed;
        }
        if (line == "quit" || line == "q") return kRequirementFailed;
        if (line.empty()) continue;
        try {
            bool numeric = line.find_first_not_of("0123456789") == std::string::npos;
            MechanicId id = p.resolve(agent, numeric ? json("#" + line) : json(line));
            StepStatus s = p.act(agent, id);
            if (s != StepStatus::Ok) out << "illegal: " << to_string(s) << "\n";
        } catch (const Error& e) {
            out << "error: " << e.what() << "\n";
        }
    }
}

inline int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
    std::string dir = o.data_dir;
    if (dir.empty()) {
        const char* env = std::getenv("MECH_DATA_DIR");
        dir = env ? env : "mechgen-data";
    }
    ServiceConfig cfg;
    cfg.data_dir = dir;
    cfg.workers = o.workers;
    cfg.log = [&err](const std::string& m) { err << "warning: " << m << std::endl; };
    Service svc(cfg);
    httplib::Server srv;
    svc.bind(srv);
    out << "listening on " << o.host << ":" << o.port << " data " << dir << std::endl;
    if (!srv.listen(o.host, o.port)) throw LoadError("cannot listen on " + o.host + ":" + std::to_string(o.port));
    return kOk;
}

}  // namespace cli

inline int run_cli(int argc, char** argv, std::istream& in = std::cin, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    using namespace cli;
    CLI::App app{"Game mechanic synthesis"};
    app.require_subcommand(1);
    Options o;

    auto domains = [&](CLI::App* c) { c->add_option("domain,--domain", o.domains, "domain file(s)")->required(); };
    auto common = [&](CLI::App* c) {
        c->add_option("--horizon", o.horizon, "plan length bound");
        c->add_option("--overlay", o.overlay, "JSON merge patch applied to the domain");
        c->add_option("-o,--out", o.out, "output file");
    };

    auto* gen = app.add_subcommand("generate", "synthesize a mechanic set");
    domains(gen);
    common(gen);

    auto* check = app.add_subcommand("check", "check a mechanic set for playability");
    check->add_option("domain,--domain", o.domain, "domain file")->required();
    check->add_option("mechanics,--mechanics", o.mechanics, "mechanics file")->required();
    common(check);

    auto* sim = app.add_subcommand("simulate", "replay a trace");
    sim->add_option("domain,--domain", o.domain, "domain file")->required();
    sim->add_option("mechanics,--mechanics", o.mechanics, "mechanics file")->required();
    sim->add_option("trace,--trace", o.trace, "trace file")->required();
    sim->add_option("--instance", o.instance, "instance name (default: the trace's)");
    common(sim);

    auto* play = app.add_subcommand("play", "play an instance in the terminal");
    play->add_option("domain,--domain", o.domain, "domain file")->required();
    play->add_option("mechanics,--mechanics", o.mechanics, "mechanics file")->required();
    play->add_option("--instance", o.instance, "instance name");
    play->add_option("--controls", o.controls, "control mapping file, or 'generate'");
    common(play);

    auto* ad = app.add_subcommand("adapt", "minimally change a seed mechanic set");
    ad->add_option("domain,--domain", o.domain, "domain file")->required();
    ad->add_option("seed,--seed-mechanics", o.seed, "seed mechanics file")->required();
    common(ad);

    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    serve->add_option("--port", o.port, "port");
    serve->add_option("--host", o.host, "bind address");
    serve->add_option("--data-dir", o.data_dir, "data directory (default $MECH_DATA_DIR)");
    serve->add_option("--workers", o.workers, "generation worker threads");

    try {
        app.parse(argc, argv);
        if (!o.domain.empty()) o.domains = {o.domain};
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    try {
        if (gen->parsed()) return cmd_generate(o, out, err);
        if (check->parsed()) return cmd_check(o, out, err);
        if (sim->parsed()) return cmd_simulate(o, out, err);
        if (play->parsed()) return cmd_play(o, in, out, err);
        if (ad->parsed()) return cmd_adapt(o, out, err);
        if (serve->parsed()) return cmd_serve(o, out, err);
    } catch (const LoadError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRequirementFailed;
    }
    return kUsage;
}

}  // namespace mechgen
