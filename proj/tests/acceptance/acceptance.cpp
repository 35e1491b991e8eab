// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "../unit/helpers.hpp"
#include "pseudolab/app/commands.hpp"
#include "pseudolab/app/render.hpp"
#include "pseudolab/losses.hpp"
#include "pseudolab/sampler.hpp"
#include "pseudolab/trainer.hpp"

using namespace pseudolab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
  std::printf("[%s] %d %s: %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.uniform_index(hi - lo + 1); }

// 1 -------------------------------------------------------------------------

void gradient_oracle() {
  Timer timer;
  using testutil::gradcheck;
  using testutil::random_probs;
  using testutil::random_tensor;
  const int cases = 100;
  std::map<std::string, double> worst;
  std::map<std::string, int> count;
  auto track = [&](const std::string& op, double err) {
    worst[op] = std::max(worst[op], err);
    ++count[op];
  };

  Rng rng(2024);
  for (int i = 0; i < cases; ++i) {
    const std::size_t m = dim(rng, 1, 5), k = dim(rng, 1, 5), n = dim(rng, 2, 5);
    track("matmul", gradcheck([](Tape&, const std::vector<Var>& v) { return matmul(v[0], v[1]); },
                              {random_tensor({m, k}, rng), random_tensor({k, n}, rng)}, rng));
    track("add", gradcheck([](Tape&, const std::vector<Var>& v) { return add(v[0], v[1]); },
                           {random_tensor({m, n}, rng), random_tensor({m, n}, rng)}, rng));
    track("add_row", gradcheck([](Tape&, const std::vector<Var>& v) { return add_row(v[0], v[1]); },
                               {random_tensor({m, n}, rng), random_tensor({n}, rng)}, rng));
    const double s = rng.normal();
    track("multiply_scalar",
          gradcheck([s](Tape&, const std::vector<Var>& v) { return multiply_scalar(v[0], s); },
                    {random_tensor({m, n}, rng)}, rng));
    track("multiply", gradcheck([](Tape&, const std::vector<Var>& v) { return multiply(v[0], v[1]); },
                                {random_tensor({m, n}, rng), random_tensor({m, n}, rng)}, rng));
    track("relu", gradcheck([](Tape&, const std::vector<Var>& v) { return relu(v[0]); },
                            {random_tensor({m, n}, rng)}, rng));
    track("softmax", gradcheck([](Tape&, const std::vector<Var>& v) { return softmax_rows(v[0]); },
                               {random_tensor({m, n}, rng, -3, 3)}, rng));
    track("sum", gradcheck([](Tape&, const std::vector<Var>& v) { return sum(v[0]); },
                           {random_tensor({m, n}, rng)}, rng));

    const Tensor y = random_probs(m, n, rng), yq = random_probs(m, n, rng);
    const auto prior = uniform_prior(n);
    const double delta = rng.uniform();
    const Tensor z = random_tensor({m, n}, rng, -2, 2);
    track("cross_entropy", gradcheck([&](Tape&, const std::vector<Var>& v) {
            return cross_entropy_soft(softmax_rows(v[0]), y);
          }, {z}, rng));
    track("reg_all_classes", gradcheck([&](Tape&, const std::vector<Var>& v) {
            return reg_all_classes(softmax_rows(v[0]), prior);
          }, {z}, rng));
    track("reg_entropy", gradcheck([&](Tape&, const std::vector<Var>& v) {
            return reg_entropy(softmax_rows(v[0]));
          }, {z}, rng));
    track("mixed_ce", gradcheck([&](Tape&, const std::vector<Var>& v) {
            return mixed_ce(softmax_rows(v[0]), y, yq, delta);
          }, {z}, rng));

    // Full network and total loss, with and without dropout (fixed masks).
    const double p_drop = i % 2 ? 0.25 : 0.0;
    Mlp model = build_mlp(MlpSpec{{k + 1, 6, n}, p_drop}, 1000 + i);
    const Tensor x = random_tensor({m, k + 1}, rng);
    const std::uint64_t mask_seed = 77 + i;
    {
      Tape t;
      Rng masks(mask_seed);
      Var p = model.forward(t, t.constant(x), Mode::train, true, &masks);
      t.backward(total_loss(cross_entropy_soft(p, y), reg_all_classes(p, prior), reg_entropy(p), 0.8, 0.4));
    }
    double e = 0.0;
    for (Tensor* param : model.parameters()) {
      const std::vector<double> analytic(param->grad().begin(), param->grad().end());
      auto f = [&] {
        Rng masks(mask_seed);
        const Tensor p = model.forward(x, Mode::train, true, &masks);
        return total_loss(cross_entropy_soft(p, y), reg_all_classes(p, prior), reg_entropy(p), 0.8, 0.4);
      };
      e = std::max(e, testutil::rel_error(analytic, testutil::numeric_grad(f, param->values())));
    }
    track("mlp+total_loss", e);
  }

  double overall = 0.0;
  bool enough = true;
  std::string worst_op;
  for (const auto& [op, err] : worst) {
    if (err >= overall) {
      overall = err;
      worst_op = op;
    }
    enough = enough && count[op] >= cases;
  }
  report(1, "gradient oracle", overall < 1e-4 && enough,
         std::to_string(worst.size()) + " ops x " + std::to_string(cases) + " cases, worst rel err " +
             fmt(overall) + " (" + worst_op + ") < 1e-4",
         timer.seconds());
}

// 2 -------------------------------------------------------------------------

void closed_forms() {
  Timer timer;
  double worst = 0.0;
  auto gap = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  gap(cross_entropy_soft(Tensor({3, 2}, 0.5), Tensor({3, 2}, 0.5)), std::log(2.0));
  gap(reg_entropy(Tensor({5, 4}, 0.25)), std::log(4.0));
  gap(reg_all_classes(Tensor::matrix({{0.7, 0.3}, {0.3, 0.7}}), uniform_prior(2)), 0.0);
  gap(reg_all_classes(Tensor({4, 3}, 1.0 / 3.0), uniform_prior(3)), 0.0);
  for (std::size_t c = 2; c <= 20; ++c) {
    const Tensor p({4, c}, 1.0 / c);
    const std::vector<int> truths(4, 1);  // argmax is 0 for uniform rows
    const auto r = certainty_incorrect(p, predictions(p), truths);
    if (!r) {
      worst = INFINITY;
      continue;
    }
    gap(*r, std::log(double(c)));
  }
  report(2, "closed-form loss values", worst <= 1e-6, "max deviation " + fmt(worst) + " <= 1e-6",
         timer.seconds());
}

// 3 -------------------------------------------------------------------------

std::string metrics_text(const std::vector<EpochMetrics>& rows) {
  std::ostringstream out;
  write_metrics_csv(rows, out);
  return out.str();
}

void identities() {
  Timer timer;
  Rng rng(31);
  double degeneracy = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t b = dim(rng, 1, 20), c = dim(rng, 2, 6);
    const Tensor p = testutil::random_probs(b, c, rng), yp = testutil::random_probs(b, c, rng),
                 yq = testutil::random_probs(b, c, rng);
    degeneracy = std::max(degeneracy, std::abs(mixed_ce(p, yp, yq, 1.0) - cross_entropy_soft(p, yp)));
    degeneracy = std::max(degeneracy, std::abs(mixed_ce(p, yp, yq, 0.0) - cross_entropy_soft(p, yq)));
  }

  // Per-batch split of the summed loss against B times the batch mean, on
  // real training steps with mixing and dropout.
  double decomposition = 0.0;
  TrainConfig cfg;
  for (int i = 0; i < 200; ++i) {
    const std::size_t b = dim(rng, 2, 64);
    const Tensor x = testutil::random_tensor({b, 2}, rng, -2, 2);
    const Tensor y = testutil::random_probs(b, 2, rng);
    Mlp m = build_mlp(MlpSpec{{2, 12, 2}, 0.2}, i);
    auto params = m.parameters();
    SgdState s = make_sgd_state(params, 0.1, 0.9);
    const MixupDraw draw = sample_mixup(1.0, b, rng);
    const StepLosses l = train_step(m, s, x, y, cfg, &draw, rng);
    std::vector<bool> mask(b);
    for (std::size_t r = 0; r < b; ++r) mask[r] = rng.uniform() < 0.2;
    const LossDecomposition d = loss_decomposition(l.per_sample, mask);
    decomposition = std::max(decomposition, std::abs(d.total() - b * l.ce) / std::abs(b * l.ce));
  }

  // Mode lattice on a full (short) two-moons run.
  SyntheticSpec spec;
  spec.seed = 3;
  const SslDataset ds = mask_labels(gen_two_moons(spec), 4, 3);
  bool lattice = true;
  for (auto [plain, starred] : {std::pair{SslMode::C, SslMode::CStar}, std::pair{SslMode::M, SslMode::MStar}}) {
    TrainConfig a;
    a.mode = plain;
    a.k = 0;
    a.total_epochs = 20;
    TrainConfig b = a;
    b.mode = starred;
    Mlp ma = build_mlp(MlpSpec{{2, 50, 2}, 0.0}, 5), mb = ma;
    SslDataset da = ds, db = ds;
    const auto ha = run_training(ma, da, a), hb = run_training(mb, db, b);
    lattice = lattice && ma == mb && metrics_text(ha) == metrics_text(hb) && da.pseudo_labels == db.pseudo_labels;
  }

  report(3, "algebraic identities", degeneracy <= 1e-12 && decomposition <= 1e-9 && lattice,
         "mixed-CE degeneracy " + fmt(degeneracy) + " <= 1e-12, decomposition rel " + fmt(decomposition) +
             " <= 1e-9, C*==C and M*==M at k=0: " + (lattice ? "bit-identical" : "differ"),
         timer.seconds());
}

// 4 -------------------------------------------------------------------------

void beta_sampler() {
  Timer timer;
  auto moments = [](double alpha, std::uint64_t seed) {
    Rng rng(seed);
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = sample_mixup(alpha, 1, rng).delta;
      s += d;
      s2 += d * d;
    }
    const double mean = s / n;
    return std::pair{mean, (s2 - n * mean * mean) / (n - 1)};
  };
  const auto [mean1, var1] = moments(1.0, 41);
  const bool uniform_ok = std::abs(mean1 - 0.5) <= 0.01 && std::abs(var1 - 1.0 / 12.0) <= 0.05 / 12.0;
  bool decreasing = true;
  double prev = INFINITY;
  std::string vars;
  for (double alpha : {0.1, 1.0, 4.0, 8.0}) {
    const double v = moments(alpha, 42).second;
    decreasing = decreasing && v < prev;
    prev = v;
    vars += (vars.empty() ? "" : " > ") + fmt(v, 3);
  }
  report(4, "beta sampler", uniform_ok && decreasing,
         "alpha=1 mean " + fmt(mean1) + " var " + fmt(var1) + " (1/12=" + fmt(1.0 / 12.0) +
             "); var over alpha {0.1,1,4,8}: " + vars,
         timer.seconds());
}

// 5 and 6 -------------------------------------------------------------------

app::RunConfig scaled_run(const fs::path& dir, SslMode mode) {
  app::RunConfig cfg;
  cfg.train.mode = mode;
  cfg.output_dir = dir;
  return cfg;
}

void two_moons(const fs::path& root) {
  Timer timer;
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t reach = 0, beats = 0, nonlinear = 0;
  std::string accs;
  for (std::uint64_t seed : seeds) {
    const auto m = app::train_seed(scaled_run(root / "moons_mstar", SslMode::MStar), seed);
    const auto c = app::train_seed(scaled_run(root / "moons_c", SslMode::C), seed);
    const double am = m.unlabeled_accuracy.value_or(0.0), ac = c.unlabeled_accuracy.value_or(0.0);
    reach += am >= 0.95;
    beats += ac < am;
    const Mlp model = load_checkpoint(root / "moons_mstar" / ("seed_" + std::to_string(seed)) / "model.ckpt");
    const app::GridSpec grid;
    const std::size_t crossings = app::max_line_crossings(app::class_grid(grid, app::evaluate_grid(model, grid)));
    nonlinear += crossings >= 2;
    accs += (accs.empty() ? "" : ", ") + fmt(am, 3) + "/" + fmt(ac, 3) + "/" + std::to_string(crossings);
  }
  const bool ok = reach >= 4 && beats >= 4 && nonlinear == seeds.size();
  report(5, "two-moons separation", ok,
         "M* acc >= 0.95 in " + std::to_string(reach) + "/5 (need 4), C < M* in " + std::to_string(beats) +
             "/5 (need 4), non-linear M* boundary in " + std::to_string(nonlinear) +
             "/5; per seed M*acc/Cacc/crossings: " + accs,
         timer.seconds());
}

void confirmation_bias(const fs::path& root) {
  Timer timer;
  std::size_t holds = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto run = [&](SslMode mode, const char* name) {
      app::RunConfig cfg = scaled_run(root / name, mode);
      cfg.data.kind = SyntheticKind::blobs;
      cfg.data.n_samples = 2000;
      cfg.data.n_classes = 4;
      cfg.data.noise_sigma = 2.0;
      cfg.labels_per_class = 5;
      cfg.hidden = {50};
      return app::train_seed(cfg, seed);
    };
    const auto m = run(SslMode::MStar, "blobs_mstar");
    const auto c = run(SslMode::C, "blobs_c");
    // No incorrect predictions means no confident errors.
    const double rm = m.r_t.value_or(0.0), rc = c.r_t.value_or(0.0);
    holds += rm <= rc;
    detail += (detail.empty() ? "" : ", ") + fmt(rm, 3) + "<=" + fmt(rc, 3);
  }
  report(6, "confirmation-bias direction", holds >= 4,
         "r_t(M*) <= r_t(C) in " + std::to_string(holds) + "/5 (need 4): " + detail, timer.seconds());
}

// 7 -------------------------------------------------------------------------

void sampler_contract() {
  Timer timer;
  Rng rng(71);
  int violations = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n_l = dim(rng, 1, 80), n_u = dim(rng, 0, 1000), batch = dim(rng, 2, 150);
    const std::size_t k = dim(rng, 1, batch - 1);
    std::vector<std::size_t> lab(n_l), unl(n_u);
    std::iota(lab.begin(), lab.end(), 0);
    std::iota(unl.begin(), unl.end(), n_l);
    Rng plan_rng(t);
    const auto plan = make_minibatches(lab, unl, k, batch, plan_rng);
    std::vector<std::size_t> seen(n_l + n_u, 0);
    bool ok = true;
    for (const Minibatch& mb : plan) {
      ok = ok && mb.reserved_labeled == k && mb.indices.size() <= batch && mb.indices.size() >= k;
      for (std::size_t i = 0; i < mb.indices.size(); ++i) {
        const std::size_t idx = mb.indices[i];
        ok = ok && (i < k ? idx < n_l : idx >= n_l);
        ++seen[idx];
      }
    }
    for (std::size_t u = n_l; u < n_l + n_u; ++u) ok = ok && seen[u] == 1;
    const std::size_t slots = plan.size() * k;
    for (std::size_t l = 0; l < n_l; ++l) ok = ok && seen[l] >= slots / n_l && seen[l] <= (slots + n_l - 1) / n_l;
    violations += !ok;
  }
  report(7, "sampler contract", violations == 0,
         std::to_string(trials) + " random (N_l, N_u, k, B) plans, " + std::to_string(violations) + " violations",
         timer.seconds());
}

// 8 -------------------------------------------------------------------------

void determinism(const fs::path& root) {
  Timer timer;
  app::train_seed(scaled_run(root / "repeat_a", SslMode::MStar), 7);
  app::train_seed(scaled_run(root / "repeat_b", SslMode::MStar), 7);
  const std::string a = testutil::read_file(root / "repeat_a" / "seed_7" / "metrics.csv");
  const std::string b = testutil::read_file(root / "repeat_b" / "seed_7" / "metrics.csv");
  report(8, "determinism", !a.empty() && a == b,
         "two seed-7 two-moons runs: metrics.csv " + std::string(a == b ? "byte-identical" : "differs") + " (" +
             std::to_string(a.size()) + " bytes)",
         timer.seconds());
}

}  // namespace

int main() {
  const fs::path root = testutil::fresh_dir("acceptance");
  try {
    gradient_oracle();
    closed_forms();
    identities();
    beta_sampler();
    two_moons(root);
    confirmation_bias(root);
    sampler_contract();
    determinism(root);
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
