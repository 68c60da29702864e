#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "roomtone/roomtone.hpp"

namespace fs = std::filesystem;
using roomtone::Json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out;
    std::string tag;
    std::optional<std::uint64_t> seed;
    bool strict{false};
    std::vector<std::string> rooms;

    Json config = Json::object();
};

void add_global_options(CLI::App* cmd, GlobalOpts& g) {
    cmd->add_option("--config", g.config_path, "run configuration JSON")
        ->envname("ROOMTONE_CONFIG");
    cmd->add_option("--out", g.out, "output root directory");
    cmd->add_option("--tag", g.tag, "run directory name (default: UTC timestamp)");
    cmd->add_option("--seed", g.seed, "master RNG seed");
    cmd->add_flag("--strict", g.strict, "fail on the first malformed input row");
    cmd->add_option("--rooms", g.rooms, "comma-separated room ids to include")->delimiter(',');
}

std::string timestamp_tag() {
    // Used only to name the run directory; file contents never carry times.
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

void finalize_globals(GlobalOpts& g) {
    if (!g.config_path.empty()) g.config = roomtone::load_json_file(g.config_path);
    if (g.out.empty()) g.out = g.config.value("out", std::string("out"));
    if (g.tag.empty()) g.tag = g.config.value("tag", timestamp_tag());
    if (!g.seed && g.config.contains("seed")) g.seed = g.config.at("seed").get<std::uint64_t>();
}

fs::path run_dir(const GlobalOpts& g, const std::string& command) {
    return fs::path(g.out) / command / g.tag;
}

void write_manifest(const fs::path& dir, const std::string& command, const Json& resolved,
                    const std::string& hash, std::vector<std::string> outputs) {
    std::sort(outputs.begin(), outputs.end());
    Json manifest{{"artifact_version", roomtone::kVersion},
                  {"command", command},
                  {"config", resolved},
                  {"config_hash", hash},
                  {"outputs", outputs}};
    roomtone::save_json_file(dir / "manifest.json", manifest);
}

std::string file_hash(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return roomtone::hash_hex(roomtone::fnv1a64(ss.str()));
}

template <typename T>
void filter_by_room(std::vector<T>& records, const std::vector<std::string>& rooms) {
    if (rooms.empty()) return;
    std::set<std::string> keep(rooms.begin(), rooms.end());
    std::erase_if(records, [&](const T& r) { return !keep.count(r.room_id); });
}

std::vector<roomtone::SlotRecord> load_slots(const std::string& input, const GlobalOpts& g) {
    auto result = roomtone::read_slots(input, {.strict = g.strict});
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    if (!result.errors.empty())
        std::cerr << "warning: skipped " << result.errors.size() << " malformed rows in " << input
                  << '\n';
    filter_by_room(result.slots, g.rooms);
    if (result.slots.empty()) throw std::runtime_error("no usable slots in " + input);
    return result.slots;
}

std::vector<roomtone::RoomConfig> room_configs(const GlobalOpts& g) {
    if (!g.config.contains("rooms"))
        throw std::runtime_error("no room thresholds configured (config key 'rooms')");
    return g.config.at("rooms").get<std::vector<roomtone::RoomConfig>>();
}

std::vector<roomtone::NoiseHistogram> histograms_of(const std::vector<roomtone::SlotRecord>& slots) {
    std::vector<roomtone::NoiseHistogram> hists;
    hists.reserve(slots.size());
    for (const auto& s : slots) {
        if (!s.histogram)
            throw std::runtime_error("slot " + s.room_id + "@" +
                                     roomtone::format_rfc3339(s.slot_start) + " has no histogram");
        hists.push_back(*s.histogram);
    }
    return hists;
}

roomtone::ClusterSearchParams cluster_params(const GlobalOpts& g) {
    roomtone::ClusterSearchParams p;
    if (g.config.contains("cluster")) {
        const auto& c = g.config.at("cluster");
        p.k_min = c.value("k_min", p.k_min);
        p.k_max = c.value("k_max", p.k_max);
        p.variance_target = c.value("variance_target", p.variance_target);
        p.pool_rooms = c.value("pool_rooms", p.pool_rooms);
    }
    return p;
}

Json cluster_params_json(const roomtone::ClusterSearchParams& p) {
    return Json{{"k_min", p.k_min},
                {"k_max", p.k_max},
                {"variance_target", p.variance_target},
                {"pool_rooms", p.pool_rooms}};
}

roomtone::TrainConfig train_config(const GlobalOpts& g, std::optional<int> epochs_flag) {
    roomtone::TrainConfig tc;
    tc.epochs = 30000;
    if (g.config.contains("train")) {
        const auto& t = g.config.at("train");
        tc.epochs = t.value("epochs", tc.epochs);
        tc.learning_rate = t.value("learning_rate", tc.learning_rate);
        tc.loss_tolerance = t.value("loss_tolerance", tc.loss_tolerance);
    }
    if (epochs_flag) tc.epochs = std::size_t(*epochs_flag);
    tc.seed = g.seed.value_or(0);
    tc.validate();
    return tc;
}

Json train_config_json(const roomtone::TrainConfig& tc) {
    return Json{{"epochs", tc.epochs},
                {"learning_rate", tc.learning_rate},
                {"loss_tolerance", tc.loss_tolerance},
                {"seed", tc.seed}};
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    int days{0};
    bool jsonl{false};
};

int run_synth(GlobalOpts& g, const SynthArgs& args) {
    roomtone::GeneratorSpec spec;
    if (g.config.contains("generator")) spec = g.config.at("generator").get<roomtone::GeneratorSpec>();
    if (g.seed) spec.seed = *g.seed;

    int days = args.days;
    if (days <= 0) days = g.config.value("days", 21);

    if (!g.rooms.empty()) {
        std::vector<roomtone::SynthRoom> selected;
        for (const auto& id : g.rooms) {
            auto it = std::find_if(spec.rooms.begin(), spec.rooms.end(),
                                   [&](const auto& r) { return r.room_id == id; });
            if (it == spec.rooms.end()) throw std::runtime_error("unknown room '" + id + "'");
            selected.push_back(*it);
        }
        spec.rooms = std::move(selected);
    }
    if (spec.schedule.empty())
        spec.schedule = roomtone::office_day_schedule(days, spec.window.expected_slots_per_day());

    auto result = roomtone::generate_synthetic(spec, days);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

    Json resolved{{"days", days}, {"generator", spec}, {"write_jsonl", args.jsonl}};
    const auto hash = roomtone::config_hash(resolved);
    const roomtone::FileMeta meta{hash};

    const auto dir = run_dir(g, "synth");
    roomtone::LockFile lock(dir / ".lock");

    std::vector<std::string> outputs{"slots.csv", "truth.csv", "generator.json"};
    roomtone::write_slots_csv(dir / "slots.csv", result.slots, meta);
    roomtone::write_truth_csv(dir / "truth.csv", result.truth, meta);
    if (args.jsonl) {
        roomtone::write_slots_jsonl(dir / "slots.jsonl", result.slots, meta);
        outputs.push_back("slots.jsonl");
    }
    Json gen = spec;
    gen["artifact_version"] = roomtone::kVersion;
    gen["config_hash"] = hash;
    roomtone::save_json_file(dir / "generator.json", gen);
    write_manifest(dir, "synth", resolved, hash, outputs);

    std::cout << "synth: " << result.slots.size() << " slots for " << spec.rooms.size()
              << " room(s) over " << days << " day(s) -> " << dir.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct DetectArgs {
    std::string input;
    std::string method{"threshold"};
    std::string model_path;
};

std::vector<roomtone::OccupancyVerdict> detect_with_method(
    const std::vector<roomtone::SlotRecord>& slots, const std::string& method_text,
    const std::string& model_path, const GlobalOpts& g, Json& resolved) {
    const auto method = roomtone::method_from_name(method_text);
    resolved["method"] = roomtone::method_name(method);

    const auto params = cluster_params(g);
    const auto load_classifier = [&]() {
        if (model_path.empty())
            throw std::runtime_error(std::string(roomtone::method_name(method)) +
                                     " detection needs --model");
        Json j = roomtone::load_json_file(model_path);
        resolved["model_hash"] = j.value("config_hash", std::string{});
        return j.get<roomtone::ClassifierModel>();
    };

    switch (method) {
        case roomtone::Method::threshold: {
            auto configs = room_configs(g);
            resolved["rooms"] = configs;
            return roomtone::detect_threshold(slots, configs);
        }
        case roomtone::Method::cluster: {
            resolved["cluster"] = cluster_params_json(params);
            auto featurized = roomtone::featurize_slots(histograms_of(slots), nullptr,
                                                        params.variance_target);
            return roomtone::detect_cluster(slots, featurized.features, params);
        }
        case roomtone::Method::classifier: {
            auto model = load_classifier();
            return roomtone::detect_classifier(slots, model);
        }
        case roomtone::Method::semi_supervised: {
            resolved["cluster"] = cluster_params_json(params);
            auto model = load_classifier();
            auto featurized = roomtone::featurize_slots(histograms_of(slots), nullptr,
                                                        params.variance_target);
            return roomtone::detect_semi_supervised(slots, featurized.features, model, params);
        }
    }
    throw std::logic_error("unreachable");
}

int run_detect(GlobalOpts& g, const DetectArgs& args) {
    auto slots = load_slots(args.input, g);

    Json resolved{{"input_hash", file_hash(args.input)}, {"strict", g.strict}};
    if (!g.rooms.empty()) resolved["room_filter"] = g.rooms;
    auto verdicts = detect_with_method(slots, args.method, args.model_path, g, resolved);

    const auto hash = roomtone::config_hash(resolved);
    const auto dir = run_dir(g, "detect");
    roomtone::LockFile lock(dir / ".lock");
    roomtone::write_verdicts_csv(dir / "verdicts.csv", verdicts, {hash});
    write_manifest(dir, "detect", resolved, hash, {"verdicts.csv"});

    std::size_t occupied = 0, labeled = 0;
    for (const auto& v : verdicts) {
        if (v.occupied) ++labeled;
        if (v.occupied && *v.occupied) ++occupied;
    }
    std::cout << "detect(" << args.method << "): " << verdicts.size() << " slots";
    if (labeled > 0) std::cout << ", " << occupied << " occupied";
    std::cout << " -> " << dir.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string input;
    std::optional<int> epochs;
};

int run_train(GlobalOpts& g, const TrainArgs& args) {
    auto slots = load_slots(args.input, g);
    auto configs = room_configs(g);
    auto verdicts = roomtone::detect_threshold(slots, configs);

    std::vector<std::vector<double>> x;
    std::vector<int> y;
    x.reserve(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i].histogram) throw std::runtime_error("slot without histogram");
        auto f = slots[i].histogram->frequencies();
        x.emplace_back(f.begin(), f.end());
        y.push_back(*verdicts[i].occupied ? 1 : 0);
    }

    const auto tc = train_config(g, args.epochs);
    std::size_t hidden = 16, classifier_hidden = 8;
    double sparsity_target = 0.05, sparsity_weight = 0.1;
    if (g.config.contains("train")) {
        const auto& t = g.config.at("train");
        hidden = t.value("hidden", hidden);
        classifier_hidden = t.value("classifier_hidden", classifier_hidden);
        sparsity_target = t.value("sparsity_target", sparsity_target);
        sparsity_weight = t.value("sparsity_weight", sparsity_weight);
    }

    // Half of the (shuffled) dataset pretrains the autoencoder, restricted to
    // slots labeled occupied; the classifier then trains on the full set.
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    roomtone::Rng shuffle_rng(roomtone::derive_seed(tc.seed, "train-split"));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[std::size_t(shuffle_rng.uniform() * double(i))]);

    const std::size_t half = (x.size() + 1) / 2;
    std::vector<std::vector<double>> ae_x;
    for (std::size_t i = 0; i < half; ++i)
        if (y[order[i]] == 1) ae_x.push_back(x[order[i]]);
    if (ae_x.size() < 2)
        throw std::runtime_error("not enough occupied slots to pretrain the autoencoder");

    roomtone::TrainStats ae_stats, clf_stats;
    auto ae = roomtone::train_autoencoder(ae_x, hidden, tc, sparsity_target, sparsity_weight,
                                          &ae_stats);
    auto clf = roomtone::train_classifier(ae, x, y, tc, classifier_hidden, &clf_stats);

    std::size_t correct = 0, occupied_labels = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        occupied_labels += std::size_t(y[i]);
        if ((roomtone::classify(clf, x[i]) > 0.5 ? 1 : 0) == y[i]) ++correct;
    }

    Json resolved{{"input_hash", file_hash(args.input)},
                  {"rooms", configs},
                  {"train", train_config_json(tc)},
                  {"hidden", hidden},
                  {"classifier_hidden", classifier_hidden},
                  {"sparsity_target", sparsity_target},
                  {"sparsity_weight", sparsity_weight}};
    if (!g.rooms.empty()) resolved["room_filter"] = g.rooms;
    const auto hash = roomtone::config_hash(resolved);
    const roomtone::FileMeta meta{hash};

    const auto dir = run_dir(g, "train");
    roomtone::LockFile lock(dir / ".lock");
    roomtone::save_model(dir / "autoencoder.json", ae, meta);
    roomtone::save_model(dir / "classifier.json", clf, meta);

    Json metrics{{"artifact_version", roomtone::kVersion},
                 {"config_hash", hash},
                 {"total_slots", x.size()},
                 {"autoencoder_half", half},
                 {"autoencoder_slots", ae_x.size()},
                 {"classifier_slots", x.size()},
                 {"occupied_labels", occupied_labels},
                 {"autoencoder_initial_loss", ae_stats.initial_loss},
                 {"autoencoder_final_loss", ae_stats.final_loss},
                 {"autoencoder_epochs", ae_stats.epochs_run},
                 {"classifier_initial_loss", clf_stats.initial_loss},
                 {"classifier_final_loss", clf_stats.final_loss},
                 {"classifier_epochs", clf_stats.epochs_run},
                 {"train_accuracy", double(correct) / double(x.size())}};
    roomtone::save_json_file(dir / "metrics.json", metrics);
    write_manifest(dir, "train", resolved, hash,
                   {"autoencoder.json", "classifier.json", "metrics.json"});

    std::cout << "train: " << ae_x.size() << "/" << half
              << " occupied slots pretrained the autoencoder, classifier on " << x.size()
              << " slots, train accuracy " << double(correct) / double(x.size()) << " -> "
              << dir.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct EnergyArgs {
    std::string input;
    std::string verdicts_path;
    std::string method{"threshold"};
    std::string model_path;
    bool filter_window{false};
};

int run_energy(GlobalOpts& g, const EnergyArgs& args) {
    auto slots = load_slots(args.input, g);

    Json resolved{{"input_hash", file_hash(args.input)}, {"strict", g.strict}};
    if (!g.rooms.empty()) resolved["room_filter"] = g.rooms;

    roomtone::OfficeWindow window;
    if (g.config.contains("window")) window = g.config.at("window").get<roomtone::OfficeWindow>();
    const bool filter_window = args.filter_window || g.config.value("filter_window", false);
    if (filter_window) {
        slots = roomtone::filter_analysis_window(std::move(slots), window);
        if (slots.empty()) throw std::runtime_error("analysis window removed every slot");
        resolved["window"] = window;
    }

    std::vector<roomtone::OccupancyVerdict> verdicts;
    if (!args.verdicts_path.empty()) {
        verdicts = roomtone::read_verdicts_csv(args.verdicts_path);
        filter_by_room(verdicts, g.rooms);
        resolved["verdicts_hash"] = file_hash(args.verdicts_path);
        if (filter_window) {
            // Keep only verdicts for slots that survived the window filter.
            std::set<std::pair<std::string, roomtone::TimePoint>> keep;
            for (const auto& s : slots) keep.insert({s.room_id, s.slot_start});
            std::erase_if(verdicts, [&](const auto& v) {
                return !keep.count({v.room_id, v.slot_start});
            });
        }
    } else {
        verdicts = detect_with_method(slots, args.method, args.model_path, g, resolved);
    }

    roomtone::EnergyConstants constants;
    if (g.config.contains("energy")) {
        const auto& e = g.config.at("energy");
        constants.air_density_kg_m3 = e.value("air_density_kg_m3", constants.air_density_kg_m3);
        constants.air_heat_capacity_kj_kg_k =
            e.value("air_heat_capacity_kj_kg_k", constants.air_heat_capacity_kj_kg_k);
    }
    resolved["constants"] = constants;

    auto attribution = roomtone::attribute_energy(slots, verdicts, constants);

    const auto hash = roomtone::config_hash(resolved);
    const auto dir = run_dir(g, "energy");
    roomtone::LockFile lock(dir / ".lock");
    roomtone::write_energy_csv(dir / "energy_slots.csv", attribution.slots, {hash});
    Json report = attribution.report;
    report["artifact_version"] = roomtone::kVersion;
    report["config_hash"] = hash;
    roomtone::save_json_file(dir / "energy_report.json", report);
    write_manifest(dir, "energy", resolved, hash, {"energy_slots.csv", "energy_report.json"});

    std::cout << "energy: " << attribution.report.slot_count << " slots, total "
              << attribution.report.total_kwh << " kWh";
    if (attribution.report.percent_gap)
        std::cout << ", occupied/unoccupied gap " << *attribution.report.percent_gap << "%";
    std::cout << " -> " << dir.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string verdicts_path;
    std::string truth_path;
};

int run_evaluate(GlobalOpts& g, const EvaluateArgs& args) {
    auto verdicts = roomtone::read_verdicts_csv(args.verdicts_path);
    auto truth = roomtone::read_truth_csv(args.truth_path);
    filter_by_room(verdicts, g.rooms);
    filter_by_room(truth, g.rooms);
    if (verdicts.empty()) throw std::runtime_error("no verdicts to evaluate");

    auto report = roomtone::evaluate(verdicts, truth);

    Json resolved{{"verdicts_hash", file_hash(args.verdicts_path)},
                  {"truth_hash", file_hash(args.truth_path)}};
    if (!g.rooms.empty()) resolved["room_filter"] = g.rooms;
    const auto hash = roomtone::config_hash(resolved);

    const auto dir = run_dir(g, "evaluate");
    roomtone::LockFile lock(dir / ".lock");
    Json j = report;
    j["artifact_version"] = roomtone::kVersion;
    j["config_hash"] = hash;
    roomtone::save_json_file(dir / "evaluation.json", j);
    write_manifest(dir, "evaluate", resolved, hash, {"evaluation.json"});

    for (const auto& [method, m] : report.per_method)
        std::cout << "evaluate(" << roomtone::method_name(method) << "): accuracy " << m.accuracy
                  << ", precision " << m.precision << ", recall " << m.recall << " over "
                  << m.total() << " slots\n";
    std::cout << "-> " << dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"room occupancy and cooling-energy analytics from sound-sensor histograms"};
    app.require_subcommand(1);

    GlobalOpts g;
    SynthArgs synth_args;
    DetectArgs detect_args;
    TrainArgs train_args;
    EnergyArgs energy_args;
    EvaluateArgs evaluate_args;

    auto* synth = app.add_subcommand("synth", "generate a synthetic sensor dataset");
    add_global_options(synth, g);
    synth->add_option("--days", synth_args.days, "number of weekdays to generate");
    synth->add_flag("--jsonl", synth_args.jsonl, "also write slots.jsonl");

    auto* detect = app.add_subcommand("detect", "detect per-slot occupancy");
    add_global_options(detect, g);
    detect->add_option("--input", detect_args.input, "slot CSV or JSONL file")->required();
    detect->add_option("--method", detect_args.method,
                       "threshold | cluster | classifier | semi_supervised");
    detect->add_option("--model", detect_args.model_path, "classifier model JSON");

    auto* train = app.add_subcommand("train", "train the autoencoder and classifier");
    add_global_options(train, g);
    train->add_option("--input", train_args.input, "slot CSV or JSONL file")->required();
    train->add_option("--epochs", train_args.epochs, "training epochs");

    auto* energy = app.add_subcommand("energy", "attribute cooling energy to occupancy");
    add_global_options(energy, g);
    energy->add_option("--input", energy_args.input, "slot CSV or JSONL file")->required();
    energy->add_option("--verdicts", energy_args.verdicts_path, "verdict CSV from detect");
    energy->add_option("--method", energy_args.method, "detection method when no --verdicts");
    energy->add_option("--model", energy_args.model_path, "classifier model JSON");
    energy->add_flag("--filter-window", energy_args.filter_window,
                     "restrict to office hours on complete weekdays");

    auto* evaluate = app.add_subcommand("evaluate", "score verdicts against ground truth");
    add_global_options(evaluate, g);
    evaluate->add_option("--verdicts", evaluate_args.verdicts_path, "verdict CSV")->required();
    evaluate->add_option("--truth", evaluate_args.truth_path, "truth CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        finalize_globals(g);
        if (*synth) return run_synth(g, synth_args);
        if (*detect) return run_detect(g, detect_args);
        if (*train) return run_train(g, train_args);
        if (*energy) return run_energy(g, energy_args);
        if (*evaluate) return run_evaluate(g, evaluate_args);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
