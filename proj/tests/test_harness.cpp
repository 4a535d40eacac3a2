#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cvi/harness.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cvi;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig fast_config(const std::string& out) {
  RunConfig cfg;
  cfg.sequence = "ci-split-2d-iris";
  cfg.seed = 1;
  cfg.trainer.method = Method::fine_tune;
  cfg.trainer.epochs = 2;
  cfg.trainer.hidden = {4};
  cfg.trainer.seed = 1;
  cfg.eval.n_samples = 4;
  cfg.eval.grid_resolution = 3;
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  std::stringstream ss;
  ss << "[sequence]\n"
     << "name = di-sinusoid\n"
     << "seed = 9\n"
     << "# a comment\n"
     << "[trainer]\n"
     << "method = p-gm-sfsvi\n"
     << "k = 3\n"
     << "base_lr = 0.05\n"
     << "epochs = 7\n"
     << "hidden = 8 8\n"
     << "mc_kl = true\n"
     << "mc_samples = 8\n"
     << "[eval]\n"
     << "n_samples = 32\n"
     << "grid_resolution = 10\n"
     << "[output]\n"
     << "dir = out/test\n";
  RunConfig cfg = parse_run_config(ss);
  CHECK(cfg.sequence == "di-sinusoid");
  CHECK(cfg.seed == 9);
  CHECK(cfg.trainer.seed == 9);
  CHECK(cfg.trainer.method == Method::p_gm_sfsvi);
  CHECK(cfg.trainer.k == 3);
  CHECK(cfg.trainer.base_lr == 0.05);
  CHECK(cfg.trainer.epochs == 7);
  CHECK(cfg.trainer.hidden == std::vector<std::size_t>{8, 8});
  CHECK(cfg.trainer.mc_kl);
  CHECK(cfg.trainer.mc_samples == 8);
  CHECK(cfg.eval.n_samples == 32);
  CHECK(cfg.eval.grid_resolution == 10);
  CHECK(cfg.out_dir == "out/test");

  std::stringstream bad("[trainer]\nnot a kv line\n");
  CHECK_THROWS_AS((void)parse_run_config(bad), std::runtime_error);
  std::stringstream unknown("[trainer]\nwat = 1\n");
  CHECK_THROWS_AS((void)parse_run_config(unknown), std::runtime_error);
}

TEST_CASE("final average accuracy") {
  std::vector<MetricsRow> rows;
  rows.push_back({"m", 1, {1.0}, 1.0});
  rows.push_back({"m", 2, {0.9, 0.5}, 0.7});
  CHECK(final_average_accuracy(rows, 2) == doctest::Approx(0.7));
  CHECK_THROWS_AS((void)final_average_accuracy(rows, 3), std::logic_error);

  // permutation invariance of the mean
  std::vector<MetricsRow> perm;
  perm.push_back({"m", 2, {0.5, 0.9}, 0.7});
  CHECK(final_average_accuracy(perm, 2) ==
        doctest::Approx(final_average_accuracy(rows, 2)));
}

TEST_CASE("metrics csv layout") {
  std::vector<MetricsRow> rows;
  rows.push_back({"ewc", 1, {0.5}, 0.5});
  rows.push_back({"ewc", 2, {0.5, 1.0}, 0.75});
  write_metrics_csv(rows, 3, "/tmp/cvi_metrics_test.csv");
  std::string text = slurp("/tmp/cvi_metrics_test.csv");
  std::stringstream ss(text);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "method,task,acc_1,acc_2,acc_3,avg");
  std::getline(ss, line);
  CHECK(line == "ewc,1,0.5,,,0.5");
  std::getline(ss, line);
  CHECK(line == "ewc,2,0.5,1,,0.75");
}

TEST_CASE("grid lattice") {
  Tensor lo = Tensor::vector({-1.0, 0.0});
  Tensor hi = Tensor::vector({1.0, 2.0});
  SUBCASE("resolution 2 gives the 4 corners") {
    Tensor X = grid_lattice(lo, hi, 2);
    CHECK(X.rows() == 4);
    CHECK(X(0, 0) == -1.0);
    CHECK(X(0, 1) == 0.0);
    CHECK(X(3, 0) == 1.0);
    CHECK(X(3, 1) == 2.0);
  }
  SUBCASE("corners equal bounds at higher resolution") {
    Tensor X = grid_lattice(lo, hi, 5);
    CHECK(X.rows() == 25);
    CHECK(X(0, 0) == -1.0);
    CHECK(X(24, 0) == 1.0);
    CHECK(X(24, 1) == 2.0);
  }
  SUBCASE("non-2d rejected") {
    CHECK_THROWS_AS((void)grid_lattice(Tensor({3}), Tensor({3}), 2),
                    std::invalid_argument);
  }
}

TEST_CASE("run produces metrics, checkpoints and grid") {
  std::string dir = "/tmp/cvi_run_test";
  std::filesystem::remove_all(dir);
  RunConfig cfg = fast_config(dir);
  RunResult res = run(cfg);
  CHECK(res.status == 0);
  REQUIRE(res.rows.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(res.rows[t].task == t + 1);
    CHECK(res.rows[t].accuracies.size() == t + 1);
    double sum = 0.0;
    for (double a : res.rows[t].accuracies) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
      sum += a;
    }
    CHECK(res.rows[t].average ==
          doctest::Approx(sum / static_cast<double>(t + 1)).epsilon(1e-12));
  }
  CHECK(std::filesystem::exists(dir + "/metrics.csv"));
  CHECK(std::filesystem::exists(dir + "/manifest.txt"));
  for (int t = 1; t <= 3; ++t)
    CHECK(std::filesystem::exists(dir + "/checkpoint_task" +
                                  std::to_string(t) + ".txt"));
  CHECK(std::filesystem::exists(dir + "/grid.csv"));

  SUBCASE("grid rows sum to 1") {
    std::ifstream in(dir + "/grid.csv");
    std::string line;
    std::getline(in, line);  // header
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      std::stringstream ls(line);
      std::string f;
      std::vector<double> vals;
      while (std::getline(ls, f, ',')) vals.push_back(std::stod(f));
      REQUIRE(vals.size() == 5);  // x1,x2,p1..p3
      CHECK(vals[2] + vals[3] + vals[4] ==
            doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(rows == 9);
  }

  SUBCASE("same config and seed give byte-identical metrics") {
    std::string text1 = slurp(dir + "/metrics.csv");
    std::string dir2 = "/tmp/cvi_run_test_b";
    std::filesystem::remove_all(dir2);
    RunConfig cfg2 = fast_config(dir2);
    run(cfg2);
    CHECK(text1 == slurp(dir2 + "/metrics.csv"));
  }
}

TEST_CASE("checkpoint round trips") {
  Rng rng(44);
  SUBCASE("diag") {
    DiagGaussian d(rng.normal_tensor({5}), rng.normal_tensor({5}));
    Checkpoint ck = to_checkpoint(d);
    ck.save("/tmp/cvi_ck_diag.txt");
    Checkpoint back = Checkpoint::load("/tmp/cvi_ck_diag.txt");
    CHECK(back.kind == "diag");
    DiagGaussian d2 = diag_from_checkpoint(back);
    CHECK(d2.mu.data == d.mu.data);
    CHECK(d2.rho.data == d.rho.data);
  }
  SUBCASE("mixture") {
    GaussMixture m(rng.normal_tensor({2}),
                   {DiagGaussian(rng.normal_tensor({4}),
                                 rng.normal_tensor({4})),
                    DiagGaussian(rng.normal_tensor({4}),
                                 rng.normal_tensor({4}))});
    Checkpoint ck = to_checkpoint(m);
    ck.save("/tmp/cvi_ck_mix.txt");
    GaussMixture m2 =
        mixture_from_checkpoint(Checkpoint::load("/tmp/cvi_ck_mix.txt"));
    CHECK(m2.k() == 2);
    CHECK(m2.lambda.data == m.lambda.data);
    CHECK(m2.components[1].mu.data == m.components[1].mu.data);
  }
  SUBCASE("point") {
    Tensor theta = rng.normal_tensor({7});
    Checkpoint ck = to_checkpoint(theta);
    ck.save("/tmp/cvi_ck_point.txt");
    Tensor t2 =
        theta_from_checkpoint(Checkpoint::load("/tmp/cvi_ck_point.txt"));
    CHECK(t2.data == theta.data);
  }
  SUBCASE("missing key") {
    Checkpoint ck;
    CHECK_THROWS_AS((void)ck.get("theta"), std::runtime_error);
  }
}

TEST_CASE("predict_checkpoint dispatches on kind") {
  FcnnSpec spec{2, {4}, 3};
  Rng rng(50);
  Tensor theta = he_init(spec, rng);
  Tensor X = rng.normal_tensor({3, 2});
  Checkpoint ck = to_checkpoint(theta);
  Rng prng(1);
  Tensor p = predict_checkpoint(spec, ck, X, Head::multiclass, 4, prng);
  Tensor direct = predict_point(spec, theta, X, Head::multiclass);
  CHECK(testutil::max_abs_err(p, direct) == 0.0);

  Checkpoint bad;
  bad.kind = "wat";
  CHECK_THROWS_AS(
      (void)predict_checkpoint(spec, bad, X, Head::multiclass, 4, prng),
      std::runtime_error);
}

TEST_CASE("output root env override") {
  setenv("CVI_OUT_ROOT", "/tmp/cvi_root_test", 1);
  CHECK(resolve_out_dir("sub/dir") == "/tmp/cvi_root_test/sub/dir");
  unsetenv("CVI_OUT_ROOT");
  CHECK(resolve_out_dir("sub/dir") == "sub/dir");
}

TEST_CASE("sweep runs every config in a directory") {
  std::string cdir = "/tmp/cvi_sweep_cfgs";
  std::filesystem::remove_all(cdir);
  std::filesystem::remove_all("/tmp/cvi_sweep_out");
  std::filesystem::create_directories(cdir);
  for (int i = 0; i < 2; ++i) {
    std::ofstream out(cdir + "/run" + std::to_string(i) + ".ini");
    out << "[sequence]\nname = ci-split-2d-iris\nseed = " << i
        << "\n[trainer]\nmethod = fine-tune\nepochs = 1\nhidden = 4\n"
        << "[eval]\nn_samples = 2\ngrid_resolution = 2\n"
        << "[output]\ndir = /tmp/cvi_sweep_out/run" << i << "\n";
  }
  CHECK(sweep(cdir) == 0);
  CHECK(std::filesystem::exists("/tmp/cvi_sweep_out/run0/metrics.csv"));
  CHECK(std::filesystem::exists("/tmp/cvi_sweep_out/run1/metrics.csv"));
  CHECK_THROWS_AS((void)sweep("/tmp/cvi_sweep_empty_nonexistent"),
                  std::exception);
}
