#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "roomtone/io.hpp"

namespace fs = std::filesystem;
using namespace roomtone;

namespace {

struct CliResult {
    int status{-1};
    std::string out;
    std::string err;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

CliResult run_cli(const std::string& args, const std::string& env = {}) {
    static int counter = 0;
    const auto dir = fs::temp_directory_path() / "roomtone_cli_streams";
    fs::create_directories(dir);
    const auto out_path = dir / ("stdout_" + std::to_string(counter) + ".txt");
    const auto err_path = dir / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;

    std::string cmd;
    if (!env.empty()) cmd += env + " ";
    cmd += std::string("\"") + ROOMTONE_CLI_PATH + "\" " + args + " > " + out_path.string() +
           " 2> " + err_path.string();
    const int rc = std::system(cmd.c_str());

    CliResult r;
    r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = read_file(out_path);
    r.err = read_file(err_path);
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("roomtone_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

const char* kTinySlots =
    "room_id,slot_start,bin1,bin2,bin3,bin4,bin5,bin6,bin7,bin8,"
    "room_temp_c,supply_temp_c,air_volume_m3,accumulated_noise\n"
    "P01,2017-11-06T08:00:00Z,3000,0,0,0,0,0,0,0,25,15,1.5,9000\n";

}  // namespace

class CliPipeline : public ::testing::Test {
  protected:
    static fs::path base;
    static fs::path config_path;
    static fs::path out_root;
    static fs::path slots_csv;
    static fs::path truth_csv;

    static void SetUpTestSuite() {
        base = fresh_dir("pipeline");
        out_root = base / "out";
        config_path = base / "config.json";
        // Two rooms at different gains keep the autoencoder code informative;
        // occupied slots from a single room collapse to one sparse code the
        // classifier cannot separate.
        write_text(config_path,
                   "{\n"
                   "  \"generator\": {\n"
                   "    \"occupied_burst_prob\": 0.08,\n"
                   "    \"rooms\": [{\"room_id\": \"P01\", \"noise_scale\": 0.9},\n"
                   "               {\"room_id\": \"P06\", \"noise_scale\": 1.25}]\n"
                   "  },\n"
                   "  \"rooms\": [{\"room_id\": \"P01\", \"threshold\": 11340.0},\n"
                   "             {\"room_id\": \"P06\", \"threshold\": 15750.0}],\n"
                   "  \"train\": {\"epochs\": 3000, \"learning_rate\": 0.3,\n"
                   "              \"hidden\": 8, \"classifier_hidden\": 4}\n"
                   "}\n");
        const auto r = run_cli("synth --days 2 --seed 11 --config " + config_path.string() +
                               " --out " + out_root.string() + " --tag base");
        ASSERT_EQ(r.status, 0) << r.err;
        slots_csv = out_root / "synth" / "base" / "slots.csv";
        truth_csv = out_root / "synth" / "base" / "truth.csv";
    }

    static fs::path detect_threshold_run(const std::string& tag) {
        const auto r = run_cli("detect --config " + config_path.string() + " --input " +
                               slots_csv.string() + " --method threshold --out " +
                               out_root.string() + " --tag " + tag);
        EXPECT_EQ(r.status, 0) << r.err;
        return out_root / "detect" / tag / "verdicts.csv";
    }
};

fs::path CliPipeline::base;
fs::path CliPipeline::config_path;
fs::path CliPipeline::out_root;
fs::path CliPipeline::slots_csv;
fs::path CliPipeline::truth_csv;

TEST_F(CliPipeline, SynthLaysOutRunDirectoryWithManifest) {
    const auto dir = out_root / "synth" / "base";
    ASSERT_TRUE(fs::exists(slots_csv));
    ASSERT_TRUE(fs::exists(truth_csv));
    ASSERT_TRUE(fs::exists(dir / "generator.json"));
    ASSERT_TRUE(fs::exists(dir / "manifest.json"));
    EXPECT_FALSE(fs::exists(dir / ".lock"));

    const auto manifest = load_json_file(dir / "manifest.json");
    EXPECT_EQ(manifest.at("command").get<std::string>(), "synth");
    EXPECT_EQ(manifest.at("artifact_version").get<std::string>(), kVersion);
    const auto hash = manifest.at("config_hash").get<std::string>();
    ASSERT_EQ(hash.size(), 16u);
    EXPECT_EQ(manifest.at("outputs").get<std::vector<std::string>>(),
              (std::vector<std::string>{"generator.json", "slots.csv", "truth.csv"}));

    // Every output carries the same config hash the manifest records.
    const auto stamp = std::string("# roomtone ") + kVersion + " config " + hash;
    EXPECT_EQ(first_line(slots_csv), stamp);
    EXPECT_EQ(first_line(truth_csv), stamp);
    const auto generator = load_json_file(dir / "generator.json");
    EXPECT_EQ(generator.at("config_hash").get<std::string>(), hash);
    EXPECT_EQ(generator.at("seed").get<std::uint64_t>(), 11u);

    const auto slots = read_slots_csv(slots_csv);
    ASSERT_EQ(slots.slots.size(), 528u);
    for (const auto& s : slots.slots) {
        EXPECT_TRUE(s.room_id == "P01" || s.room_id == "P06") << s.room_id;
        ASSERT_TRUE(s.histogram.has_value());
        EXPECT_EQ(s.histogram->total, 3000);
        EXPECT_TRUE(s.accumulated_noise().has_value());
    }
    const auto truth = read_truth_csv(truth_csv);
    ASSERT_EQ(truth.size(), 528u);
    std::size_t occupied = 0;
    for (const auto& t : truth) occupied += t.occupied;
    EXPECT_EQ(occupied, 288u);
}

TEST_F(CliPipeline, ThresholdDetectionMatchesTheTruthTable) {
    const auto r = run_cli("detect --config " + config_path.string() + " --input " +
                           slots_csv.string() + " --method threshold --out " + out_root.string() +
                           " --tag det-thr");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("detect(threshold): 528 slots, 288 occupied"), std::string::npos) << r.out;

    const auto dir = out_root / "detect" / "det-thr";
    const auto verdicts = read_verdicts_csv(dir / "verdicts.csv");
    ASSERT_EQ(verdicts.size(), 528u);

    std::map<std::pair<std::string, TimePoint>, bool> truth_map;
    for (const auto& t : read_truth_csv(truth_csv)) truth_map[{t.room_id, t.slot_start}] = t.occupied;
    for (const auto& v : verdicts) {
        EXPECT_EQ(v.method, Method::threshold);
        ASSERT_TRUE(v.occupied.has_value());
        EXPECT_EQ(*v.occupied, truth_map.at({v.room_id, v.slot_start}));
    }

    const auto manifest = load_json_file(dir / "manifest.json");
    const auto hash = manifest.at("config_hash").get<std::string>();
    EXPECT_EQ(first_line(dir / "verdicts.csv"),
              std::string("# roomtone ") + kVersion + " config " + hash);
    EXPECT_EQ(manifest.at("config").at("method").get<std::string>(), "threshold");
    EXPECT_EQ(manifest.at("config").at("input_hash").get<std::string>().size(), 16u);
}

TEST_F(CliPipeline, TrainedClassifierRoundTripsThroughDetectAndEvaluate) {
    auto r = run_cli("train --config " + config_path.string() + " --input " + slots_csv.string() +
                     " --seed 5 --out " + out_root.string() + " --tag tr");
    ASSERT_EQ(r.status, 0) << r.err;

    const auto train_dir = out_root / "train" / "tr";
    const auto ae = load_model<AutoencoderModel>(train_dir / "autoencoder.json");
    EXPECT_EQ(ae.encoder.in, 8u);
    EXPECT_EQ(ae.encoder.out, 8u);
    const auto clf = load_model<ClassifierModel>(train_dir / "classifier.json");
    EXPECT_EQ(clf.hidden.in, 8u);
    EXPECT_EQ(clf.hidden.out, 4u);
    EXPECT_EQ(clf.output.out, 1u);

    const auto metrics = load_json_file(train_dir / "metrics.json");
    EXPECT_EQ(metrics.at("total_slots").get<int>(), 528);
    EXPECT_EQ(metrics.at("autoencoder_epochs").get<int>(), 3000);
    EXPECT_GE(metrics.at("train_accuracy").get<double>(), 0.9);
    EXPECT_LT(metrics.at("classifier_final_loss").get<double>(),
              metrics.at("classifier_initial_loss").get<double>());

    const auto model_path = (train_dir / "classifier.json").string();
    r = run_cli("detect --input " + slots_csv.string() + " --method classifier --model " +
                model_path + " --out " + out_root.string() + " --tag det-clf");
    ASSERT_EQ(r.status, 0) << r.err;
    const auto verdicts = read_verdicts_csv(out_root / "detect" / "det-clf" / "verdicts.csv");
    ASSERT_EQ(verdicts.size(), 528u);
    for (const auto& v : verdicts) {
        ASSERT_TRUE(v.probability.has_value());
        EXPECT_GT(*v.probability, 0.0);
        EXPECT_LT(*v.probability, 1.0);
        ASSERT_TRUE(v.occupied.has_value());
    }

    r = run_cli("evaluate --verdicts " + (out_root / "detect" / "det-clf" / "verdicts.csv").string() +
                " --truth " + truth_csv.string() + " --out " + out_root.string() + " --tag ev-clf");
    ASSERT_EQ(r.status, 0) << r.err;
    auto evaluation = load_json_file(out_root / "evaluate" / "ev-clf" / "evaluation.json");
    EXPECT_EQ(evaluation.at("slot_count").get<int>(), 528);
    EXPECT_GE(evaluation.at("methods").at("classifier").at("accuracy").get<double>(), 0.9);

    r = run_cli("detect --config " + config_path.string() + " --input " + slots_csv.string() +
                " --method semi_supervised --model " + model_path + " --out " + out_root.string() +
                " --tag det-semi");
    ASSERT_EQ(r.status, 0) << r.err;
    const auto semi = read_verdicts_csv(out_root / "detect" / "det-semi" / "verdicts.csv");
    ASSERT_EQ(semi.size(), 528u);
    EXPECT_TRUE(semi[0].cluster_id.has_value());
    EXPECT_TRUE(semi[0].probability.has_value());
    ASSERT_TRUE(semi[0].occupied.has_value());

    r = run_cli("evaluate --verdicts " + (out_root / "detect" / "det-semi" / "verdicts.csv").string() +
                " --truth " + truth_csv.string() + " --out " + out_root.string() + " --tag ev-semi");
    ASSERT_EQ(r.status, 0) << r.err;
    evaluation = load_json_file(out_root / "evaluate" / "ev-semi" / "evaluation.json");
    EXPECT_GE(evaluation.at("methods").at("semi_supervised").at("accuracy").get<double>(), 0.9);
}

TEST_F(CliPipeline, EnergyAttributionReportsTheOccupancyGap) {
    const auto verdicts_path = detect_threshold_run("en-verdicts");

    auto r = run_cli("energy --input " + slots_csv.string() + " --verdicts " +
                     verdicts_path.string() + " --out " + out_root.string() + " --tag en1");
    ASSERT_EQ(r.status, 0) << r.err;

    const auto dir = out_root / "energy" / "en1";
    ASSERT_TRUE(fs::exists(dir / "energy_slots.csv"));
    const auto report = load_json_file(dir / "energy_report.json");
    EXPECT_EQ(report.at("slot_count").get<int>(), 528);
    EXPECT_EQ(report.at("negative_delta_slots").get<int>(), 0);
    EXPECT_EQ(report.at("occupied").at("slot_count").get<int>(), 288);
    EXPECT_EQ(report.at("unoccupied").at("slot_count").get<int>(), 240);
    EXPECT_GT(report.at("total_kwh").get<double>(), 0.0);
    EXPECT_GT(report.at("percent_gap").get<double>(), 0.0);
    EXPECT_NEAR(report.at("temp_gap_c").get<double>(), 0.35, 0.1);
    EXPECT_EQ(report.at("constants").at("air_density_kg_m3").get<double>(), 1.204);
    EXPECT_EQ(report.at("constants").at("air_heat_capacity_kj_kg_k").get<double>(), 1.012);

    // Detecting inline must agree with the precomputed-verdict path.
    r = run_cli("energy --config " + config_path.string() + " --input " + slots_csv.string() +
                " --method threshold --out " + out_root.string() + " --tag en2");
    ASSERT_EQ(r.status, 0) << r.err;
    const auto inline_report = load_json_file(out_root / "energy" / "en2" / "energy_report.json");
    EXPECT_EQ(inline_report.at("total_kwh").get<double>(), report.at("total_kwh").get<double>());
    EXPECT_EQ(inline_report.at("percent_gap").get<double>(),
              report.at("percent_gap").get<double>());
}

TEST_F(CliPipeline, EnvironmentVariableSuppliesTheConfig) {
    const auto r = run_cli("detect --input " + slots_csv.string() + " --method threshold --out " +
                               out_root.string() + " --tag env1",
                           "ROOMTONE_CONFIG=" + config_path.string());
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("528 slots, 288 occupied"), std::string::npos) << r.out;
}

TEST_F(CliPipeline, MalformedRowsAreSkippedUnlessStrict) {
    const auto dir = fresh_dir("strictness");
    const auto bad_csv = dir / "slots.csv";
    write_text(bad_csv,
               "room_id,slot_start,bin1,bin2,bin3,bin4,bin5,bin6,bin7,bin8,"
               "room_temp_c,supply_temp_c,air_volume_m3,accumulated_noise\n"
               "P01,2017-11-06T08:00:00Z,3000,0,0,0,0,0,0,0,25,15,1.5,9000\n"
               "P01,2017-11-06T08:05:00Z,oops,0,0,0,0,0,0,0,25,15,1.5,9000\n"
               "P01,2017-11-06T08:10:00Z,3000,0,0,0,0,0,0,0,25,15,1.5,18000\n");

    auto r = run_cli("detect --config " + config_path.string() + " --input " + bad_csv.string() +
                     " --method threshold --out " + dir.string() + " --tag lenient");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.err.find("skipped 1 malformed rows"), std::string::npos) << r.err;
    EXPECT_NE(r.out.find("detect(threshold): 2 slots, 1 occupied"), std::string::npos) << r.out;

    r = run_cli("detect --strict --config " + config_path.string() + " --input " +
                bad_csv.string() + " --method threshold --out " + dir.string() + " --tag strict");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("error: "), std::string::npos) << r.err;
    EXPECT_NE(r.err.find(":3: bin1 must be a non-negative integer"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "detect" / "strict" / "verdicts.csv"));
}

TEST(CliErrors, MissingInputFileFailsCleanly) {
    const auto dir = fresh_dir("missing_input");
    const auto r = run_cli("detect --input " + (dir / "absent.csv").string() +
                           " --method cluster --out " + dir.string() + " --tag t");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("error: cannot open"), std::string::npos) << r.err;
}

TEST(CliErrors, BadMethodAndMissingPiecesFail) {
    const auto dir = fresh_dir("bad_method");
    const auto csv = dir / "slots.csv";
    write_text(csv, kTinySlots);

    auto r = run_cli("detect --input " + csv.string() + " --method sonar --out " + dir.string() +
                     " --tag t1");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("unknown method 'sonar'"), std::string::npos) << r.err;

    r = run_cli("detect --input " + csv.string() + " --method classifier --out " + dir.string() +
                " --tag t2");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("classifier detection needs --model"), std::string::npos) << r.err;

    r = run_cli("detect --input " + csv.string() + " --method threshold --out " + dir.string() +
                " --tag t3");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("no room thresholds configured"), std::string::npos) << r.err;

    r = run_cli("detect --method threshold --out " + dir.string() + " --tag t4");
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("--input"), std::string::npos) << r.err;
}

TEST(CliErrors, HeldLockBlocksTheRunAndSurvivesIt) {
    const auto dir = fresh_dir("locked");
    const auto run = dir / "synth" / "locked";
    fs::create_directories(run);
    write_text(run / ".lock", "roomtone lock\n");

    const auto r =
        run_cli("synth --days 1 --seed 3 --out " + dir.string() + " --tag locked");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("another run appears to hold"), std::string::npos) << r.err;
    EXPECT_TRUE(fs::exists(run / ".lock"));
    EXPECT_FALSE(fs::exists(run / "slots.csv"));
    EXPECT_FALSE(fs::exists(run / "manifest.json"));
}

TEST(CliErrors, RoomFilterIsValidatedAgainstTheGenerator) {
    const auto dir = fresh_dir("rooms");
    const auto cfg = dir / "config.json";
    write_text(cfg,
               "{\"generator\": {\"rooms\": [{\"room_id\": \"P01\"},"
               " {\"room_id\": \"P02\", \"noise_scale\": 2.0}]}}\n");

    auto r = run_cli("synth --config " + cfg.string() + " --days 1 --seed 3 --rooms P09 --out " +
                     dir.string() + " --tag bad");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("unknown room 'P09'"), std::string::npos) << r.err;

    r = run_cli("synth --config " + cfg.string() + " --days 1 --seed 3 --rooms P02 --out " +
                dir.string() + " --tag good");
    ASSERT_EQ(r.status, 0) << r.err;
    const auto slots = read_slots_csv(dir / "synth" / "good" / "slots.csv");
    ASSERT_EQ(slots.slots.size(), 132u);
    for (const auto& s : slots.slots) EXPECT_EQ(s.room_id, "P02");
}
