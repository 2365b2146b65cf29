#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "pf/detector.hpp"
#include "pf/forge.hpp"
#include "pf/image_io.hpp"
#include "pf/similarity.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using pf::PixelImage;

#ifndef PF_CLI_PATH
#error "PF_CLI_PATH must point at the patchforensics binary"
#endif

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

// Runs the real binary, captures stdout, and maps wait status to exit code.
RunResult run_cli(const std::string& args, const fs::path& capture) {
    const std::string cmd =
        std::string(PF_CLI_PATH) + " " + args + " > " + capture.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(capture, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

fs::path fresh_dir(const char* name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("hash prints one wire line per algorithm") {
    const fs::path dir = fresh_dir("pf_cli_hash");
    pf::save_png((dir / "img.png").string(), synth::photo(240, 64, 64));

    const RunResult all = run_cli("hash " + (dir / "img.png").string(), dir / "out.txt");
    CHECK(all.code == 0);
    std::istringstream lines(all.out);
    std::string line;
    int n = 0;
    const char tags[4] = {'a', 'p', 'd', 'w'};
    while (std::getline(lines, line)) {
        REQUIRE(line.size() == 18);
        CHECK(line[0] == tags[n]);
        CHECK(line[1] == ':');
        CHECK_NOTHROW(pf::from_wire(line));
        ++n;
    }
    CHECK(n == 4);

    const RunResult just_p =
        run_cli("hash --algo p " + (dir / "img.png").string(), dir / "out2.txt");
    CHECK(just_p.code == 0);
    CHECK(just_p.out.substr(0, 2) == "p:");
    CHECK(just_p.out.size() == 19);  // 18 chars + newline
}

TEST_CASE("hash of a missing file exits 2") {
    const fs::path dir = fresh_dir("pf_cli_hash_missing");
    const RunResult r = run_cli("hash " + (dir / "nope.png").string(), dir / "out.txt");
    CHECK(r.code == 2);
}

TEST_CASE("unknown flags exit 2") {
    const fs::path dir = fresh_dir("pf_cli_badflag");
    const RunResult r = run_cli("hash --frobnicate x.png", dir / "out.txt");
    CHECK(r.code == 2);
    const RunResult none = run_cli("", dir / "out2.txt");
    CHECK(none.code == 2);  // a subcommand is required
}

TEST_CASE("help exits 0") {
    const fs::path dir = fresh_dir("pf_cli_help");
    CHECK(run_cli("--help", dir / "out.txt").code == 0);
    CHECK(run_cli("detect --help", dir / "out2.txt").code == 0);
}

TEST_CASE("compare reports distances as json") {
    const fs::path dir = fresh_dir("pf_cli_compare");
    const PixelImage img = synth::photo(241, 64, 64);
    pf::save_png((dir / "a.png").string(), img);
    pf::save_png((dir / "b.png").string(), img);
    const RunResult r = run_cli(
        "compare " + (dir / "a.png").string() + " " + (dir / "b.png").string(), dir / "out.json");
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("detected").get<bool>() == false);
    CHECK(j.at("ahash").at("distance").get<int>() == 0);
    CHECK(j.at("threshold").get<int>() == 5);
}

TEST_CASE("detect: exit 0 on clean, 1 on tampered, 2 on error") {
    const fs::path dir = fresh_dir("pf_cli_detect");
    const PixelImage img = synth::photo(242);
    pf::PatchSpec spec;
    spec.x = 60;
    spec.y = 60;
    spec.seed = 9;
    const PixelImage bad = pf::forge(img, spec).suspect;
    pf::save_png((dir / "orig.png").string(), img);
    pf::save_png((dir / "bad.png").string(), bad);

    const std::string out_flag = " --output-dir " + (dir / "out").string() + " ";
    const RunResult clean = run_cli(
        out_flag + "detect " + (dir / "orig.png").string() + " " + (dir / "orig.png").string(),
        dir / "clean.json");
    CHECK(clean.code == 0);
    const auto cj = nlohmann::json::parse(clean.out);
    CHECK(cj.at("verdict").get<bool>() == false);

    const RunResult hit = run_cli(
        out_flag + "detect " + (dir / "orig.png").string() + " " + (dir / "bad.png").string(),
        dir / "hit.json");
    CHECK(hit.code == 1);
    const auto hj = nlohmann::json::parse(hit.out);
    CHECK(hj.at("verdict").get<bool>() == true);
    CHECK(hj.at("similarity").at("ssim").get<double>() < 0.98);
    CHECK(hj.at("similarity").at("lpips").is_null());
    CHECK(hj.at("thresholds").at("segmentation").get<std::string>() == "slic");

    const RunResult err = run_cli(
        out_flag + "detect " + (dir / "orig.png").string() + " " + (dir / "ghost.png").string(),
        dir / "err.json");
    CHECK(err.code == 2);

    // Shape mismatch is an error, not a verdict.
    pf::save_png((dir / "small.png").string(), synth::photo(243, 100, 100));
    const RunResult mism = run_cli(
        out_flag + "detect " + (dir / "orig.png").string() + " " + (dir / "small.png").string(),
        dir / "mism.json");
    CHECK(mism.code == 2);
}

TEST_CASE("detect writes report, overlay and bars into --output-dir") {
    const fs::path dir = fresh_dir("pf_cli_detect_files");
    const PixelImage img = synth::photo(244);
    pf::PatchSpec spec;
    spec.x = 100;
    spec.y = 100;
    spec.seed = 10;
    pf::save_png((dir / "orig.png").string(), img);
    pf::save_png((dir / "bad.png").string(), pf::forge(img, spec).suspect);

    const fs::path out = dir / "artifacts";
    const RunResult r = run_cli("--output-dir " + out.string() + " detect --overlay --bars " +
                                    (dir / "orig.png").string() + " " + (dir / "bad.png").string(),
                                dir / "stdout.json");
    CHECK(r.code == 1);
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "overlay.png"));
    CHECK(fs::exists(out / "bars.csv"));

    // Overlay is a loadable image of the original geometry.
    const PixelImage ov = pf::load_image((out / "overlay.png").string());
    CHECK(ov.width == img.width);
    CHECK(ov.height == img.height);
    CHECK(ov.channels == 3);

    // bars.csv: header plus one row per algorithm.
    std::istringstream bars(slurp(out / "bars.csv"));
    std::string line;
    std::getline(bars, line);
    CHECK(line == "algorithm,distance,threshold,detected");
    int rows = 0;
    while (std::getline(bars, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4);

    // report.json on disk equals the stdout report.
    CHECK(slurp(out / "report.json") == r.out);

    // The written report parses as a full detection record.
    CHECK_NOTHROW(pf::detection_report_from_json(r.out));
}

TEST_CASE("detect honours --quiet") {
    const fs::path dir = fresh_dir("pf_cli_quiet");
    const PixelImage img = synth::photo(245, 64, 64);
    pf::save_png((dir / "a.png").string(), img);
    const RunResult r = run_cli(
        "--quiet --output-dir " + (dir / "out").string() + " detect " + (dir / "a.png").string() +
            " " + (dir / "a.png").string(),
        dir / "cap.txt");
    CHECK(r.code == 0);
    CHECK(r.out.empty());
}

TEST_CASE("detect output is byte-stable across runs") {
    const fs::path dir = fresh_dir("pf_cli_stable");
    const PixelImage img = synth::photo(246);
    pf::PatchSpec spec;
    spec.x = 40;
    spec.y = 40;
    spec.seed = 11;
    pf::save_png((dir / "a.png").string(), img);
    pf::save_png((dir / "b.png").string(), pf::forge(img, spec).suspect);
    const std::string cmd = "--output-dir " + (dir / "o").string() + " detect " +
                            (dir / "a.png").string() + " " + (dir / "b.png").string();
    const RunResult r1 = run_cli(cmd, dir / "c1.json");
    const RunResult r2 = run_cli(cmd, dir / "c2.json");
    CHECK(r1.out == r2.out);
}

TEST_CASE("forge: identity settings reproduce the input exactly") {
    const fs::path dir = fresh_dir("pf_cli_forge_id");
    const PixelImage img = synth::photo(247);
    pf::save_png((dir / "in.png").string(), img);
    const RunResult r = run_cli("--output-dir " + (dir / "out").string() +
                                    " forge --patch-from-region --epsilon 0 "
                                    "--diffusion-strength 0 --pos-x 37 --pos-y 53 " +
                                    (dir / "in.png").string(),
                                dir / "cap.txt");
    CHECK(r.code == 0);
    const PixelImage forged = pf::load_image((dir / "out" / "forged.png").string());
    const PixelImage orig = pf::load_image((dir / "in.png").string());
    CHECK(forged.data == orig.data);

    // Provenance records the spec, bbox and seed.
    const auto pj = nlohmann::json::parse(slurp(dir / "out" / "provenance.json"));
    CHECK(pj.at("spec").at("source").get<std::string>() == "region");
    CHECK(pj.at("spec").at("epsilon").get<double>() == 0.0);
    CHECK(pj.at("bbox").at(0).get<int>() == 37);
    CHECK(pj.at("bbox").at(1).get<int>() == 53);
    CHECK(pj.at("bbox").at(2).get<int>() == 50);
    CHECK(pj.at("bbox").at(3).get<int>() == 50);
    CHECK(pj.at("seed").get<uint64_t>() == 0);
}

TEST_CASE("forge: defaults produce a near-duplicate, not a clone") {
    const fs::path dir = fresh_dir("pf_cli_forge_default");
    const PixelImage img = synth::photo(248);
    pf::save_png((dir / "in.png").string(), img);
    const RunResult r = run_cli("--seed 77 --output-dir " + (dir / "out").string() +
                                    " forge --pos-x 80 --pos-y 80 " + (dir / "in.png").string(),
                                dir / "cap.txt");
    CHECK(r.code == 0);
    const PixelImage forged = pf::load_image((dir / "out" / "forged.png").string());
    const double s = pf::ssim(img, forged).mean_ssim;
    CHECK(s > 0.9);
    CHECK(s < 1.0);

    const auto pj = nlohmann::json::parse(slurp(dir / "out" / "provenance.json"));
    CHECK(pj.at("spec").at("source").get<std::string>() == "random-noise");
    CHECK(pj.at("seed").get<uint64_t>() == 77);
}

TEST_CASE("forge: fgsm source falls back to the builtin classifier") {
    const fs::path dir = fresh_dir("pf_cli_forge_fgsm");
    pf::save_png((dir / "in.png").string(), synth::photo(249, 64, 64));
    const RunResult r = run_cli("--output-dir " + (dir / "out").string() +
                                    " forge --source fgsm --size 32 --pos-x 16 --pos-y 16 " +
                                    (dir / "in.png").string(),
                                dir / "cap.txt");
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "out" / "forged.png"));
    const auto pj = nlohmann::json::parse(slurp(dir / "out" / "provenance.json"));
    CHECK(pj.at("spec").at("source").get<std::string>() == "fgsm-derived");
}

TEST_CASE("forge: out-of-bounds placement exits 2") {
    const fs::path dir = fresh_dir("pf_cli_forge_oob");
    pf::save_png((dir / "in.png").string(), synth::photo(250, 64, 64));
    const RunResult r = run_cli("--output-dir " + (dir / "out").string() +
                                    " forge --size 60 --pos-x 30 --pos-y 0 " +
                                    (dir / "in.png").string(),
                                dir / "cap.txt");
    CHECK(r.code == 2);
}

TEST_CASE("sweep: byte-identical json regardless of thread count") {
    const fs::path dir = fresh_dir("pf_cli_sweep");
    const fs::path corpus = dir / "corpus";
    fs::create_directories(corpus);
    for (uint64_t s = 0; s < 2; ++s)
        pf::save_png((corpus / ("img" + std::to_string(s) + ".png")).string(),
                     synth::photo(260 + s, 64, 64));
    std::ofstream(dir / "grid.json")
        << R"({"epsilon": [0.05, 0.2], "size": [24], "position": [[8, 8]]})";

    const std::string base_cmd = "--seed 123 sweep " + corpus.string() + " --grid " +
                                 (dir / "grid.json").string() + " --output-dir ";
    const RunResult r1 =
        run_cli("--threads 1 " + base_cmd + (dir / "o1").string(), dir / "c1.txt");
    const RunResult r4 =
        run_cli("--threads 4 " + base_cmd + (dir / "o4").string(), dir / "c4.txt");
    CHECK(r1.code == 0);
    CHECK(r4.code == 0);
    CHECK(slurp(dir / "o1" / "sweep.json") == slurp(dir / "o4" / "sweep.json"));
    CHECK(slurp(dir / "o1" / "sweep.csv") == slurp(dir / "o4" / "sweep.csv"));

    const auto j = nlohmann::json::parse(slurp(dir / "o1" / "sweep.json"));
    CHECK(j.at("trial_count").get<int>() == 4);  // 2 images x 2 grid points
    CHECK(j.at("image_count").get<int>() == 2);
    CHECK(j.at("composite_score_formula").get<std::string>() ==
          "0.5*success + 0.3*(1 - min(1, |confidence_drop|)) + 0.2*ssim");
    CHECK(j.at("best_config").contains("composite_score"));
}

TEST_CASE("sweep: csv format on stdout when asked") {
    const fs::path dir = fresh_dir("pf_cli_sweep_csv");
    const fs::path corpus = dir / "corpus";
    fs::create_directories(corpus);
    pf::save_png((corpus / "img.png").string(), synth::photo(262, 64, 64));
    std::ofstream(dir / "grid.json")
        << R"({"epsilon": [0.1], "size": [16], "position": [[8, 8]]})";
    const RunResult r = run_cli("--format csv sweep " + corpus.string() + " --grid " +
                                    (dir / "grid.json").string() + " --output-dir " +
                                    (dir / "o").string(),
                                dir / "cap.csv");
    CHECK(r.code == 0);
    CHECK(r.out.rfind("image_index,grid_index,epsilon,", 0) == 0);
}

TEST_CASE("sweep: empty grid exits 2") {
    const fs::path dir = fresh_dir("pf_cli_sweep_empty");
    const fs::path corpus = dir / "corpus";
    fs::create_directories(corpus);
    pf::save_png((corpus / "img.png").string(), synth::photo(263, 64, 64));
    std::ofstream(dir / "grid.json") << R"({"epsilon": []})";
    const RunResult r = run_cli(
        "sweep " + corpus.string() + " --grid " + (dir / "grid.json").string() +
            " --output-dir " + (dir / "o").string(),
        dir / "cap.txt");
    CHECK(r.code == 2);
}

TEST_CASE("batch: summary, artifacts and exit codes") {
    const fs::path dir = fresh_dir("pf_cli_batch");
    const PixelImage a = synth::photo(270);
    pf::PatchSpec spec;
    spec.x = 30;
    spec.y = 30;
    spec.seed = 12;
    pf::save_png((dir / "a.png").string(), a);
    pf::save_png((dir / "a_bad.png").string(), pf::forge(a, spec).suspect);
    {
        std::ofstream m(dir / "manifest.csv");
        m << "original,suspect,label\n";
        m << "a.png,a_bad.png,tampered\n";
        m << "a.png,a.png,clean\n";
    }

    const RunResult ok = run_cli("--output-dir " + (dir / "out").string() + " batch " +
                                     (dir / "manifest.csv").string(),
                                 dir / "cap.txt");
    CHECK(ok.code == 0);
    CHECK(fs::exists(dir / "out" / "corpus_report.json"));
    CHECK(fs::exists(dir / "out" / "ssim_sorted.csv"));
    CHECK(ok.out.find("pairs: 2") != std::string::npos);
    CHECK(ok.out.find("detection rate: 0.5") != std::string::npos);

    const auto j = nlohmann::json::parse(slurp(dir / "out" / "corpus_report.json"));
    CHECK(j.at("aggregate").at("pair_count").get<int>() == 2);
    CHECK(j.at("aggregate").at("failed").get<int>() == 0);
    CHECK(j.at("pairs").size() == 2);

    // A broken row flips the exit code to 2 but the report still lands.
    {
        std::ofstream m(dir / "manifest2.csv");
        m << "original,suspect,label\n";
        m << "a.png,a_bad.png,tampered\n";
        m << "a.png,missing.png,broken\n";
    }
    const RunResult bad = run_cli("--output-dir " + (dir / "out2").string() + " batch " +
                                      (dir / "manifest2.csv").string(),
                                  dir / "cap2.txt");
    CHECK(bad.code == 2);
    CHECK(fs::exists(dir / "out2" / "corpus_report.json"));

    // --quiet silences the human summary.
    const RunResult quiet = run_cli("--quiet --output-dir " + (dir / "out3").string() +
                                        " batch " + (dir / "manifest.csv").string(),
                                    dir / "cap3.txt");
    CHECK(quiet.code == 0);
    CHECK(quiet.out.empty());
}

TEST_CASE("batch: empty manifest detects nothing and exits 0") {
    const fs::path dir = fresh_dir("pf_cli_batch_empty");
    std::ofstream(dir / "manifest.csv") << "original,suspect,label\n";
    const RunResult r = run_cli("--output-dir " + (dir / "out").string() + " batch " +
                                    (dir / "manifest.csv").string(),
                                dir / "cap.txt");
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "out" / "corpus_report.json"));
    CHECK(j.at("aggregate").at("detection_rate").is_null());
    CHECK(r.out.find("detection rate: n/a") != std::string::npos);
}

TEST_CASE("PATCHFORENSICS_THREADS is honoured as a fallback") {
    const fs::path dir = fresh_dir("pf_cli_env");
    pf::save_png((dir / "a.png").string(), synth::photo(280, 64, 64));
    const std::string cmd = "PATCHFORENSICS_THREADS=3 " + std::string(PF_CLI_PATH) + " detect " +
                            (dir / "a.png").string() + " " + (dir / "a.png").string() +
                            " --output-dir " + (dir / "o").string() + " > " +
                            (dir / "cap.txt").string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
}

TEST_SUITE_END();
