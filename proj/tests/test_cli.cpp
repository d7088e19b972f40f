#include "doctest.h"
#include "scratch.hpp"

#include "json.hpp"

#include <cstdlib>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome dgm(const ScratchDir& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + DGM_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_bytes(out), read_bytes(err)};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("synth, separate and evaluate end to end") {
  ScratchDir dir;
  const auto fx = dir / "fx";
  REQUIRE(dgm(dir, "synth --output " + q(fx)).code == 0);
  for (const char* f : {"frames/frame0001.pgm", "frames/frame0012.pgm", "L_true.dgm", "S_true.dgm",
                        "masks/mask0012.pgm", "background_true.pgm"})
    CHECK(fs::exists(fx / f));

  const auto run = dir / "run";
  const Outcome sep = dgm(dir, "separate --input " + q(fx / "frames") + " --output " + q(run));
  REQUIRE_MESSAGE(sep.code == 0, sep.err);
  CHECK(sep.out.find("frames 12 kept of 12") != std::string::npos);
  for (const char* f : {"bg/bg0001.pgm", "fg/fg0012.pgm", "background.pgm", "masks/mask0001.pgm", "L.dgm", "S.dgm",
                        "history.csv", "manifest.json"})
    CHECK(fs::exists(run / f));
  const auto manifest = nlohmann::json::parse(read_bytes(run / "manifest.json"));
  CHECK(manifest["status"] == "complete");
  CHECK(manifest["config"]["lambda2"] == 0.3);
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);
  CHECK(manifest["kept_frames"].size() == 12);

  const Outcome ev = dgm(dir, "evaluate --estimate " + q(run / "L.dgm") + " --truth " + q(fx / "L_true.dgm") +
                                  " --masks " + q(run / "masks") + " --truth-masks " + q(fx / "masks"));
  REQUIRE_MESSAGE(ev.code == 0, ev.err);
  CHECK(ev.out.rfind("re,psnr,precision,recall,f_measure\n", 0) == 0);
  const std::string row = ev.out.substr(ev.out.find('\n') + 1);
  CHECK(std::stod(row) < 0.02);
}

TEST_CASE("evaluate: identical inputs") {
  ScratchDir dir;
  REQUIRE(dgm(dir, "synth --output " + q(dir / "fx")).code == 0);
  const Outcome ev = dgm(dir, "evaluate --estimate " + q(dir / "fx/background_true.pgm") + " --truth " +
                                  q(dir / "fx/background_true.pgm") + " --masks " + q(dir / "fx/masks") +
                                  " --truth-masks " + q(dir / "fx/masks"));
  REQUIRE(ev.code == 0);
  CHECK(ev.out == "re,psnr,precision,recall,f_measure\n0,inf,1,1,1\n");

  const Outcome bg_only = dgm(dir, "evaluate --estimate " + q(dir / "fx/background_true.pgm") + " --truth " +
                                       q(dir / "fx/background_true.pgm"));
  CHECK(bg_only.out == "re,psnr,precision,recall,f_measure\n0,inf,nan,nan,nan\n");

  write_raw_pgm(dir / "small.pgm", 2, 2, std::string(4, '\x40'));
  const Outcome mismatch =
      dgm(dir, "evaluate --estimate " + q(dir / "small.pgm") + " --truth " + q(dir / "fx/background_true.pgm"));
  CHECK(mismatch.code == 1);
}

TEST_CASE("error exits") {
  ScratchDir dir;
  const Outcome missing = dgm(dir, "separate --input " + q(dir / "absent") + " --output " + q(dir / "o"));
  CHECK(missing.code == 1);
  CHECK(missing.err.find("absent") != std::string::npos);

  const Outcome unknown = dgm(dir, "separate --bogus 1");
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("--lambda1") != std::string::npos);

  CHECK(dgm(dir, "").code == 2);
  CHECK(dgm(dir, "laplacian --input x --output y").code == 2);

  nlohmann::json cfg = {{"lamda1", 3.0}};
  write_bytes(dir / "typo.json", cfg.dump());
  const Outcome typo = dgm(dir, "separate --config " + q(dir / "typo.json"));
  CHECK(typo.code == 2);
  CHECK(typo.err.find("lamda1") != std::string::npos);
}

TEST_CASE("help lists defaults") {
  ScratchDir dir;
  const Outcome h = dgm(dir, "separate --help");
  CHECK(h.code == 0);
  for (const char* s : {"--lambda2", "0.3", "--tout", "200", "--update-mode", "paper", "--mask-threshold"})
    CHECK_MESSAGE(h.out.find(s) != std::string::npos, s);
  CHECK(dgm(dir, "--version").code == 0);
}

TEST_CASE("laplacian subcommand") {
  ScratchDir dir;
  REQUIRE(dgm(dir, "synth --frames 5 --output " + q(dir / "fx")).code == 0);
  const Outcome t = dgm(dir, "laplacian --temporal --input " + q(dir / "fx/frames") + " --output " + q(dir / "t.sp"));
  REQUIRE_MESSAGE(t.code == 0, t.err);
  CHECK(read_bytes(dir / "t.sp").rfind("SPSYM 5 ", 0) == 0);
  CHECK(t.out.rfind("dim 5\n", 0) == 0);
  const auto pos = t.out.find("max_eigenvalue ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(t.out.substr(pos + 15)) <= 2.0 + 1e-6);
}

TEST_CASE("config precedence: defaults < file < flags") {
  ScratchDir dir;
  REQUIRE(dgm(dir, "synth --frames 4 --rows 16 --cols 16 --object-size 3 --output " + q(dir / "fx")).code == 0);
  nlohmann::json cfg = {{"lambda2", 0.5}, {"tin", 2}, {"tout", 5}};
  write_bytes(dir / "c.json", cfg.dump());
  const Outcome r = dgm(dir, "separate --input " + q(dir / "fx/frames") + " --output " + q(dir / "a") + " --config " +
                                 q(dir / "c.json") + " --tin 3 --tol 1e-3 --tout 1e1");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto m = nlohmann::json::parse(read_bytes(dir / "a/manifest.json"));
  CHECK(m["config"]["lambda2"] == 0.5);  // from the file
  CHECK(m["config"]["tin"] == 3);        // flag beats file
  CHECK(m["config"]["tout"] == 10);      // scientific notation for an integer flag
  CHECK(m["config"]["gamma1"] == 0.1);   // built-in default

  // a manifest is itself a valid config and reproduces the configuration
  const Outcome again = dgm(dir, "separate --config " + q(dir / "a/manifest.json") + " --output " + q(dir / "b"));
  REQUIRE_MESSAGE(again.code == 0, again.err);
  const auto m2 = nlohmann::json::parse(read_bytes(dir / "b/manifest.json"));
  CHECK(m2["config_hash"] == m["config_hash"]);

  CHECK(dgm(dir, "separate --input x --output y --tout 2.5").code == 2);
}
