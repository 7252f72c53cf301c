// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "kpsca/kpsca.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace kpsca::cli {

namespace fs = std::filesystem;

/// Flags shared by every subcommand; unused ones are ignored.
struct RunConfig {
    std::string preset;
    std::string model_path;
    std::string input;
    std::string output;
    std::string method = "kmeans";
    std::uint64_t seed = 0;
    std::string truth_hex;
    std::size_t key_bits = 0;
    std::size_t restarts = 10;
    std::size_t max_iter = 300;
    bool plot = false;
    bool compress_input = false;
    std::size_t slots = 230, cycles = 54, samples = 625;
    std::string profile_path;
    std::string profile_truth_hex;
    std::vector<std::size_t> ranking;
};

class CliError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError("cannot create " + path.string());
    out << text;
    if (!out) throw CliError("cannot write " + path.string());
}

inline std::optional<SecretKey> truth_for(const std::string& hex, std::size_t key_bits, std::size_t slots) {
    if (hex.empty()) return std::nullopt;
    const std::size_t bits = key_bits ? key_bits : slots + 2;
    return parse_key_hex(hex, bits, KeyWindow::trailing(bits, slots));
}

inline AttackInput load_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw CliError("no input trace given");
    auto any = load_trace(cfg.input);
    if (auto* raw = std::get_if<RawTrace>(&any); raw && cfg.compress_input) return compress(*raw);
    return std::visit([](auto&& t) -> AttackInput { return std::move(t); }, std::move(any));
}

inline AttackConfig attack_config(const RunConfig& cfg) {
    AttackConfig a;
    a.method = parse_method(cfg.method);
    a.kmeans = {2, cfg.max_iter, cfg.restarts, cfg.seed};
    a.kmeans.validate();
    return a;
}

/// Standardized features behind one experiment, for plotting.
inline StandardizedMatrix experiment_matrix(const AttackInput& in, const Experiment& e) {
    const auto full = standardize(std::holds_alternative<RawTrace>(in) ? build_x1(std::get<RawTrace>(in))
                                                                       : build_x2(std::get<CompressedTrace>(in)));
    return select_cycles(full, e.candidate.cycles_used);
}

inline void emit_plot(const AttackInput& in, const AttackReport& rep, const std::optional<SecretKey>& truth,
                      const fs::path& report_path) {
    std::size_t pick = 0;
    for (std::size_t k = 0; k < rep.experiments.size(); ++k)
        if (rep.experiments[k].delta && *rep.experiments[k].delta > *rep.experiments[pick].delta) pick = k;
    const auto& e = rep.experiments[pick];
    const auto x = experiment_matrix(in, e);
    const auto model = pca_fit(x, 2);
    const MatrixD scores = model.components() == 0 ? MatrixD(x.rows(), 1)
                                                    : project(x, model, std::min<std::size_t>(2, model.components()));
    std::optional<std::span<const std::uint8_t>> bits;
    if (truth) bits = truth->analyzed_bits();
    const auto pts = scatter_points(scores, e.candidate.labels, bits);

    std::string title = std::string(to_string(rep.attack)) + " " + std::string(to_string(rep.method)) + ", " +
                        std::to_string(e.candidate.cycles_used.size()) + " cycle(s)";
    if (e.delta) title += ", delta " + std::to_string(*e.delta);
    fs::path base = report_path;
    write_text(base.replace_extension(".csv"), scatter_csv(pts));
    write_text(base.replace_extension(".svg"), scatter_svg(pts, title));
}

} // namespace detail

inline int cmd_simulate(const RunConfig& cfg) {
    if (cfg.output.empty()) throw CliError("simulate needs -o PATH");
    LeakModel model;
    if (!cfg.model_path.empty()) {
        std::ifstream in(cfg.model_path);
        if (!in) throw CliError("cannot open model " + cfg.model_path);
        model = nlohmann::ordered_json::parse(in).get<LeakModel>();
    } else if (!cfg.preset.empty()) {
        model = preset(cfg.preset, {cfg.slots, cfg.cycles, cfg.samples});
    } else {
        throw CliError("simulate needs --preset NAME or --model FILE");
    }
    model.seed = cfg.seed;
    const std::size_t l = model.geometry.slots;
    const std::size_t bits = cfg.key_bits ? cfg.key_bits : l + 2;
    const SecretKey key = cfg.truth_hex.empty() ? gen_key(cfg.seed, bits)
                                                : parse_key_hex(cfg.truth_hex, bits, KeyWindow::trailing(bits, l));
    if (key.analyzed_length() != l || key.window().start == 0)
        throw CliError("key must have more bits than the trace has slots");

    const auto sim = simulate_trace(key, model);
    save_trace(cfg.output, sim.trace);
    nlohmann::ordered_json side{
        {"key_hex", key_to_hex(key)},
        {"key_bits", key.bits().size()},
        {"window", {{"start", key.window().start}, {"length", key.window().length}}},
        {"preset", cfg.preset.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(cfg.preset)},
        {"model", model},
    };
    detail::write_text(cfg.output + ".truth.json", side.dump(2) + "\n");
    return 0;
}

inline int cmd_compress(const RunConfig& cfg) {
    if (cfg.input.empty() || cfg.output.empty()) throw CliError("compress needs an input trace and -o PATH");
    auto any = load_trace(cfg.input);
    if (std::holds_alternative<CompressedTrace>(any)) throw CliError(cfg.input + ": already compressed");
    save_trace(cfg.output, compress(std::get<RawTrace>(any)));
    return 0;
}

inline int cmd_attack(AttackKind kind, const RunConfig& cfg) {
    const auto in = detail::load_input(cfg);
    const auto acfg = detail::attack_config(cfg);
    const std::size_t l = kpsca::detail::input_geometry(in).slots;
    const auto truth = detail::truth_for(cfg.truth_hex, cfg.key_bits, l);
    if (cfg.plot && cfg.output.empty()) throw CliError("--plot needs -o PATH");

    AttackReport rep;
    switch (kind) {
    case AttackKind::attack1: rep = attack1(in, acfg, truth); break;
    case AttackKind::attack2:
        if (!truth) throw CliError("attack2 needs --truth HEX");
        rep = attack2(in, acfg, truth);
        break;
    case AttackKind::attack3: {
        std::vector<std::size_t> ranking = cfg.ranking;
        if (ranking.empty()) {
            if (!cfg.profile_path.empty()) {
                RunConfig prof = cfg;
                prof.input = cfg.profile_path;
                const auto pin = detail::load_input(prof);
                const auto ptruth =
                    detail::truth_for(cfg.profile_truth_hex, cfg.key_bits, kpsca::detail::input_geometry(pin).slots);
                if (!ptruth) throw CliError("--profile needs --profile-truth HEX");
                if (std::holds_alternative<RawTrace>(pin) != std::holds_alternative<RawTrace>(in))
                    throw CliError("profiling and target traces must both be raw or both be compressed");
                ranking = attack2(pin, acfg, ptruth).ranking;
            } else if (truth) {
                ranking = attack2(in, acfg, truth).ranking;
            } else {
                throw CliError("attack3 needs --ranking, --profile with --profile-truth, or --truth for self-ranking");
            }
        }
        rep = attack3(in, acfg, ranking, truth);
        break;
    }
    }

    const std::string text = report_to_json(rep).dump(2) + "\n";
    if (cfg.output.empty()) std::cout << text;
    else detail::write_text(cfg.output, text);
    if (cfg.plot) detail::emit_plot(in, rep, truth, cfg.output);
    return 0;
}

namespace detail {

/// Turns a flat JSON object into "--key value" arguments.
inline std::vector<std::string> config_args(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw CliError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw CliError("config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw CliError("config " + path.string() + ": expected a JSON object");
    std::vector<std::string> args;
    auto scalar = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    for (const auto& [key, value] : j.items()) {
        const std::string flag = key.size() == 1 ? "-" + key : "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_array()) {
            args.push_back(flag);
            for (const auto& v : value) args.push_back(scalar(v));
        } else {
            args.push_back(flag);
            args.push_back(scalar(value));
        }
    }
    return args;
}

} // namespace detail

/// Entry point; args excludes the program name. Config-file flags are
/// placed ahead of the command-line flags, and the last occurrence wins.
inline int run(std::vector<std::string> args, std::ostream& err = std::cerr) {
    try {
        for (std::size_t k = 0; k + 1 < args.size(); ++k) {
            if (args[k] != "--config") continue;
            const auto extra = detail::config_args(args[k + 1]);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(k), args.begin() + static_cast<std::ptrdiff_t>(k + 2));
            const std::ptrdiff_t at = args.empty() ? 0 : 1;
            args.insert(args.begin() + at, extra.begin(), extra.end());
            break;
        }

        RunConfig cfg;
        CLI::App app{"Horizontal single-trace key recovery on kP power traces", "kpsca"};
        app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        app.require_subcommand(1);
        app.set_help_all_flag("--help-all");

        auto common = [&](CLI::App* sub) {
            sub->add_option("-o,--output", cfg.output, "Output path");
            sub->add_option("--seed", cfg.seed, "Seed");
            sub->add_option("--truth", cfg.truth_hex, "Known key, hex");
            sub->add_option("--key-bits", cfg.key_bits, "Scalar bit length (default: slots + 2)");
        };
        auto attack_opts = [&](CLI::App* sub) {
            common(sub);
            sub->add_option("input,-i,--input", cfg.input, "KPT1 or KPC1 trace")->required();
            sub->add_option("--method", cfg.method, "kmeans or pca")->check(CLI::IsMember({"kmeans", "pca"}));
            sub->add_option("--restarts", cfg.restarts, "K-means restarts")->capture_default_str();
            sub->add_option("--max-iter", cfg.max_iter, "K-means iteration cap")->capture_default_str();
            sub->add_flag("--plot", cfg.plot, "Also write PC1/PC2 scatter as CSV and SVG next to -o");
            sub->add_flag("--compress", cfg.compress_input, "Compress a raw input before attacking");
        };

        auto* sim = app.add_subcommand("simulate", "Generate a synthetic trace and truth sidecar");
        common(sim);
        sim->add_option("--preset", cfg.preset, "design1_like or design3_like");
        sim->add_option("--model", cfg.model_path, "Leak model JSON");
        sim->add_option("--slots", cfg.slots, "Slots l")->capture_default_str();
        sim->add_option("--cycles", cfg.cycles, "Clock cycles per slot D")->capture_default_str();
        sim->add_option("--samples", cfg.samples, "Samples per cycle S")->capture_default_str();
        sim->add_option("--method", cfg.method)->group("");
        sim->add_option("--restarts", cfg.restarts)->group("");
        sim->add_option("--max-iter", cfg.max_iter)->group("");
        sim->add_flag("--plot", cfg.plot)->group("");

        auto* comp = app.add_subcommand("compress", "Sum-of-squares per clock cycle, KPT1 to KPC1");
        common(comp);
        comp->add_option("input,-i,--input", cfg.input, "KPT1 trace")->required();

        auto* a1 = app.add_subcommand("attack1", "All features, one candidate");
        attack_opts(a1);
        auto* a2 = app.add_subcommand("attack2", "One candidate per clock cycle (needs --truth)");
        attack_opts(a2);
        auto* a3 = app.add_subcommand("attack3", "Strongest-cycle subsets, one candidate per subset size");
        attack_opts(a3);
        a3->add_option("--profile", cfg.profile_path, "Profiling trace with known key for the ranking");
        a3->add_option("--profile-truth", cfg.profile_truth_hex, "Key of the profiling trace, hex");
        a3->add_option("--ranking", cfg.ranking, "Explicit cycle ranking, strongest first")
            ->delimiter(',')
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try {
            app.parse(reversed);
        } catch (const CLI::CallForHelp& e) {
            std::cout << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp& e) {
            std::cout << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            err << "kpsca: " << e.what() << "\n";
            return 2;
        }

        if (sim->parsed()) return cmd_simulate(cfg);
        if (comp->parsed()) return cmd_compress(cfg);
        if (a1->parsed()) return cmd_attack(AttackKind::attack1, cfg);
        if (a2->parsed()) return cmd_attack(AttackKind::attack2, cfg);
        return cmd_attack(AttackKind::attack3, cfg);
    } catch (const std::exception& e) {
        err << "kpsca: " << e.what() << "\n";
        return 1;
    }
}

} // namespace kpsca::cli
