// inkrec: synthetic corpus generation, catalogue training, protocol
// evaluation and statistical tests on disk-resident ink datasets.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "inkrec/inkrec.hpp"

namespace {

using namespace inkrec;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<Phase> parse_phase_list(const std::string& s) {
    std::vector<Phase> out;
    for (const auto& tok : split_list(s)) {
        const auto p = parse_phase(tok);
        if (!p) throw UsageError("unknown phase '" + tok + "' (expected BASE, MEIF, SEIF or POST_SEIF)");
        out.push_back(*p);
    }
    if (out.empty()) throw UsageError("--phases is empty");
    return out;
}

void emit_json(const nlohmann::ordered_json& j, const std::string& out) {
    const std::string text = j.dump(2) + "\n";
    if (out.empty() || out == "-") {
        std::cout << text << std::flush;
        if (!std::cout) throw Error(ErrorCode::Io, "cannot write report to stdout");
    } else {
        write_file(out, text);
    }
}

struct SynthOpts {
    std::string root;
    std::size_t writers = 20;
    std::uint64_t seed = 42;
    std::string fatigue = "0,0.2,0.8,0.5";
    double intra_noise = 1.0;
    double style_spread = 1.0;
};

void run_synth(const SynthOpts& o) {
    SynthParams p;
    p.n_writers = o.writers;
    p.seed = o.seed;
    p.intra_noise = o.intra_noise;
    p.style_spread = o.style_spread;
    const auto levels = split_list(o.fatigue);
    if (levels.size() != p.fatigue.size()) {
        throw UsageError("--fatigue needs 4 comma-separated levels (BASE,MEIF,SEIF,POST_SEIF)");
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!detail::parse_double(levels[i], p.fatigue[i])) throw UsageError("bad fatigue level '" + levels[i] + "'");
    }
    const auto records = synth_dataset(p);
    save_dataset(records, o.root);
}

struct ProtocolOpts {
    std::string root;
    std::string out;
    std::string method = "dtw";
    std::string agg = "min";
    std::size_t sections = 3;
    int bits = 3;
    std::size_t grid = 8;
    std::size_t resample = 16;
    int epochs = 40;
    double w_air = 0.5;
    std::string phases = "MEIF,SEIF,POST_SEIF";
    std::string enrol = "BASE";
    std::uint64_t seed = 1;
    std::string catalogues;
    std::string distances;
    unsigned threads = 1;
};

ProtocolConfig make_config(const ProtocolOpts& o) {
    ProtocolConfig cfg;
    if (o.method == "dtw") {
        cfg.method = Method::Dtw;
    } else if (o.method == "msvq") {
        cfg.method = Method::Msvq;
    } else if (o.method == "atdr") {
        cfg.method = Method::Atdr;
    } else {
        throw UsageError("--method must be dtw, msvq or atdr");
    }
    if (o.agg == "min") {
        cfg.agg = AggregateMode::Min;
    } else if (o.agg == "mean") {
        cfg.agg = AggregateMode::Mean;
    } else {
        throw UsageError("--agg must be min or mean");
    }
    const auto enrol = parse_phase(o.enrol);
    if (!enrol) throw UsageError("unknown enrolment phase '" + o.enrol + "'");
    cfg.enrol_phase = *enrol;
    cfg.test_phases = parse_phase_list(o.phases);
    cfg.sections = o.sections;
    cfg.bits = o.bits;
    cfg.som.grid = o.grid;
    cfg.som.resample = o.resample;
    cfg.som.epochs = o.epochs;
    cfg.w_air = o.w_air;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    if (cfg.sections < 1) throw UsageError("--sections must be >= 1");
    if (cfg.bits < 1 || cfg.bits > 8) throw UsageError("--bits must lie in [1, 8]");
    if (!(cfg.w_air >= 0.0 && cfg.w_air <= 1.0)) throw UsageError("--w-air must lie in [0, 1]");
    validate(cfg.som);
    return cfg;
}

void run_train_catalogue(const ProtocolOpts& o) {
    ProtocolConfig cfg = make_config(o);
    if (o.out.empty()) throw UsageError("train-catalogue needs --out <dir>");
    const Dataset ds = load_dataset(o.root);
    cfg.test_phases.clear();
    check_phases(ds, cfg);
    save_catalogues(train_catalogues(ds, cfg), o.out);
}

void run_eval(const ProtocolOpts& o) {
    const ProtocolConfig cfg = make_config(o);
    const Dataset ds = load_dataset(o.root);
    std::vector<PhaseResult> results;
    if (cfg.method == Method::Atdr) {
        check_phases(ds, cfg);
        const CatalogueSet cats = o.catalogues.empty() ? train_catalogues(ds, cfg) : load_catalogues(o.catalogues);
        results = evaluate_text(ds, cats, cfg);
    } else {
        results = evaluate_signatures(ds, cfg);
    }
    if (!o.distances.empty()) {
        for (const auto& pr : results) {
            for (const auto& v : pr.views) {
                const auto d = genuine_distances(pr.phase, v);
                write_file(std::filesystem::path(o.distances) / (std::string(to_string(pr.phase)) + "_" + v.view + ".dist"),
                           write_distances(d));
            }
        }
    }
    emit_json(eval_report(cfg, results), o.out);
}

struct StatsOpts {
    std::vector<std::string> inputs;
    std::string out;
    std::size_t replicates = 10000;
    std::uint64_t seed = LillieforsOptions{}.seed;
};

void run_stats(const StatsOpts& o) {
    std::vector<DistanceSet> sets;
    for (const auto& path : o.inputs) {
        try {
            sets.push_back(parse_distances(read_file(path)));
        } catch (const Error& e) {
            throw Error(e.code(), path + ": " + e.what());
        }
    }
    emit_json(stats_report(sets, {o.replicates, o.seed}), o.out);
}

int exit_code_for(ErrorCode c) { return c == ErrorCode::InvalidParams ? kExitUsage : kExitData; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online writer recognition: DTW, MSVQ and ATDR matchers with identification/verification protocol"};
    app.set_config("--config", "", "key=value configuration file; command-line flags override it");
    app.require_subcommand(1);

    SynthOpts synth;
    auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic corpus under --root");
    cmd_synth->add_option("--root", synth.root, "Output dataset directory")->required();
    cmd_synth->add_option("--writers", synth.writers, "Number of writers")->capture_default_str();
    cmd_synth->add_option("--seed", synth.seed, "Corpus seed")->capture_default_str();
    cmd_synth->add_option("--fatigue", synth.fatigue, "Fatigue levels for BASE,MEIF,SEIF,POST_SEIF")
        ->capture_default_str();
    cmd_synth->add_option("--intra-noise", synth.intra_noise, "Record-to-record variation scale")
        ->capture_default_str();
    cmd_synth->add_option("--style-spread", synth.style_spread, "Between-writer shape variation scale")
        ->capture_default_str();

    ProtocolOpts proto;
    auto add_protocol_flags = [&](CLI::App* c) {
        c->add_option("--root", proto.root, "Dataset root")->required();
        c->add_option("--method", proto.method, "dtw, msvq or atdr")->capture_default_str();
        c->add_option("--grid", proto.grid, "SOM grid side G")->capture_default_str();
        c->add_option("--resample", proto.resample, "Points per preprocessed stroke R")->capture_default_str();
        c->add_option("--epochs", proto.epochs, "SOM training epochs")->capture_default_str();
        c->add_option("--enrol", proto.enrol, "Enrolment phase")->capture_default_str();
        c->add_option("--seed", proto.seed, "Seed for LBG and SOM training")->capture_default_str();
        c->add_option("--threads", proto.threads, "Worker threads (0 = all cores)")->capture_default_str();
    };

    auto* cmd_cat = app.add_subcommand("train-catalogue", "Train the 8 stroke catalogues (4 words x 2 channels)");
    add_protocol_flags(cmd_cat);
    cmd_cat->add_option("--out", proto.out, "Catalogue output directory");

    auto* cmd_eval = app.add_subcommand("eval", "Run the enrolment/test protocol and write a JSON report");
    add_protocol_flags(cmd_eval);
    cmd_eval->add_option("--agg", proto.agg, "DTW reference aggregation: min or mean")->capture_default_str();
    cmd_eval->add_option("--sections", proto.sections, "MSVQ sections")->capture_default_str();
    cmd_eval->add_option("--bits", proto.bits, "MSVQ codebook bits")->capture_default_str();
    cmd_eval->add_option("--w-air", proto.w_air, "ATDR in-air channel weight")->capture_default_str();
    cmd_eval->add_option("--phases", proto.phases, "Comma-separated test phases")->capture_default_str();
    cmd_eval->add_option("--catalogues", proto.catalogues, "Catalogue directory (ATDR; trained in memory if absent)");
    cmd_eval->add_option("--distances", proto.distances, "Also write genuine-distance files to this directory");
    cmd_eval->add_option("--out", proto.out, "Report path ('-' or absent: stdout)");

    StatsOpts stats;
    auto* cmd_stats = app.add_subcommand("stats", "Lilliefors and Wilcoxon tests on distance files");
    cmd_stats->add_option("--inputs,inputs", stats.inputs, "Distance files, compared pairwise in this order")
        ->required()
        ->delimiter(',');
    cmd_stats->add_option("--out", stats.out, "Report path ('-' or absent: stdout)");
    cmd_stats->add_option("--replicates", stats.replicates, "Lilliefors Monte Carlo replicates")
        ->capture_default_str();
    cmd_stats->add_option("--seed", stats.seed, "Lilliefors Monte Carlo seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*cmd_synth) run_synth(synth);
        if (*cmd_cat) run_train_catalogue(proto);
        if (*cmd_eval) run_eval(proto);
        if (*cmd_stats) run_stats(stats);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return 0;
}
