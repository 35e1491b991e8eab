#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "pseudolab/diagnostics.hpp"
#include "pseudolab/errors.hpp"

using namespace pseudolab;

namespace {

std::optional<double> r_t(const Tensor& probs, const std::vector<int>& truths) {
  return certainty_incorrect(probs, predictions(probs), truths);
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("argmax ties go to the lowest index") {
    CHECK(argmax(std::vector<double>{0.2, 0.4, 0.4}) == 1);
    CHECK(argmax(std::vector<double>{0.5, 0.5}) == 0);
    CHECK(predictions(Tensor::matrix({{0.1, 0.9}, {0.6, 0.4}})) == std::vector<int>{1, 0});
  }

  TEST_CASE("certainty of incorrect predictions") {
    const Tensor uniform({5, 10}, 0.1);
    const auto all_wrong = r_t(uniform, {3, 4, 5, 6, 7});  // argmax is class 0
    REQUIRE(all_wrong);
    CHECK(std::abs(*all_wrong - std::log(10.0)) < 1e-12);
    CHECK(std::abs(*all_wrong - 2.3026) < 1e-4);

    CHECK_FALSE(r_t(Tensor::matrix({{0.9, 0.1}, {0.2, 0.8}}), {0, 1}));

    const auto one = r_t(Tensor::matrix({{0.99, 0.01}, {0.3, 0.7}}), {1, 1});
    REQUIRE(one);
    CHECK(std::abs(*one + 0.5 * (std::log(0.99) + std::log(0.01))) < 1e-12);
    CHECK(std::abs(*one - 2.3076) < 1e-3);

    // Unknown truths are skipped.
    CHECK_FALSE(r_t(Tensor::matrix({{0.99, 0.01}}), {kNoLabel}));
  }

  TEST_CASE("uniform incorrect rows give ln C for any class count") {
    for (std::size_t c = 2; c <= 50; ++c) {
      const Tensor p({3, c}, 1.0 / c);
      const auto v = r_t(p, {1, 1, 1});
      REQUIRE(v);
      CHECK(std::abs(*v - std::log(double(c))) < 1e-6);
    }
  }

  TEST_CASE("sharper incorrect rows never lower the certainty") {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t c = 2 + rng.uniform_index(5);
      Tensor p = testutil::random_probs(6, c, rng);
      auto preds = predictions(p);
      std::vector<int> truths(6);
      for (std::size_t i = 0; i < 6; ++i) truths[i] = (preds[i] + 1) % int(c);
      const double before = *r_t(p, truths);
      // Move mass from every other class onto the argmax of row 0.
      const std::size_t top = preds[0];
      const double t = 0.1 + 0.8 * rng.uniform();
      for (std::size_t j = 0; j < c; ++j) {
        if (j == top) continue;
        p.at(0, top) += t * p.at(0, j);
        p.at(0, j) *= 1.0 - t;
      }
      CHECK(*r_t(p, truths) >= before - 1e-12);
    }
  }

  TEST_CASE("error rate") {
    const Tensor onehot = Tensor::matrix({{1, 0}, {0, 1}, {1, 0}});
    CHECK(error_rate(onehot, std::vector<int>{0, 1, 0}) == 0.0);
    CHECK(error_rate(onehot, std::vector<int>{1, 0, 1}) == 1.0);
    Tensor ten({10, 2});
    std::vector<int> truths(10, 0);
    for (std::size_t i = 0; i < 10; ++i) ten.at(i, i < 3 ? 1 : 0) = 1.0;
    CHECK(error_rate(ten, truths) == doctest::Approx(0.3));
    CHECK(error_rate(onehot, std::vector<int>{kNoLabel, 1, 1}) == 0.5);
    CHECK(error_rate(onehot, std::vector<int>{kNoLabel, kNoLabel, kNoLabel}) == 0.0);
    CHECK_THROWS_AS(error_rate(onehot, std::vector<int>{0, 1}), DimensionError);
  }

  TEST_CASE("pseudo-label accuracy") {
    auto ds = SslDataset::fully_labeled(Tensor::matrix({{0}, {1}, {2}, {3}}), {0, 1, 1, 0}, 2);
    CHECK_FALSE(pseudo_label_accuracy(ds));
    ds.labeled = {true, false, false, false};
    ds.reset_pseudo_labels();
    // Uniform rows resolve to class 0: correct only for sample 3.
    CHECK(*pseudo_label_accuracy(ds) == doctest::Approx(1.0 / 3.0));
    for (std::size_t i = 1; i < 4; ++i) {
      ds.pseudo_labels.at(i, 0) = ds.true_labels[i] == 0 ? 1.0 : 0.0;
      ds.pseudo_labels.at(i, 1) = ds.true_labels[i] == 1 ? 1.0 : 0.0;
    }
    CHECK(*pseudo_label_accuracy(ds) == 1.0);
  }

  TEST_CASE("metrics are invariant to sample order") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 5 + rng.uniform_index(30);
      const Tensor p = testutil::random_probs(n, 3, rng);
      std::vector<int> truths(n);
      for (int& y : truths) y = int(rng.uniform_index(3));
      const auto perm = rng.permutation(n);
      std::vector<int> pt(n);
      for (std::size_t i = 0; i < n; ++i) pt[i] = truths[perm[i]];
      const Tensor pp = gather_rows(p, perm);
      CHECK(error_rate(pp, pt) == doctest::Approx(error_rate(p, truths)).epsilon(1e-15));
      const auto a = r_t(p, truths), b = r_t(pp, pt);
      CHECK(a.has_value() == b.has_value());
      if (a) CHECK(*a == doctest::Approx(*b).epsilon(1e-12));

      SslDataset ds = SslDataset::fully_labeled(Tensor({n, 1}), truths, 3);
      std::fill(ds.labeled.begin(), ds.labeled.end(), false);
      ds.pseudo_labels = p;
      SslDataset dp = SslDataset::fully_labeled(Tensor({n, 1}), pt, 3);
      std::fill(dp.labeled.begin(), dp.labeled.end(), false);
      dp.pseudo_labels = pp;
      CHECK(*pseudo_label_accuracy(ds) == doctest::Approx(*pseudo_label_accuracy(dp)).epsilon(1e-15));
    }
  }

  TEST_CASE("metrics CSV") {
    EpochMetrics a;
    a.epoch = 0;
    a.loss_total = a.loss_ce = 0.25;
    a.term_labeled = 1.5;
    a.train_error = 0.1;
    a.val_error = 0.2;
    a.lr = 0.1;
    EpochMetrics b = a;
    b.epoch = 1;
    b.loss_ra = 1.0 / 3.0;
    b.r_t = 2.5;
    b.pseudo_acc = 0.875;
    b.lr = 0.01;
    const std::vector<EpochMetrics> rows{a, b};
    std::ostringstream out;
    write_metrics_csv(rows, out);
    const std::string text = out.str();
    CHECK(text.rfind("epoch,loss_total,loss_ce,loss_ra,loss_rh,term_labeled,term_unlabeled,r_t,train_error,"
                     "val_error,pseudo_acc,lr\n",
                     0) == 0);
    CHECK(text.find("\n0,0.25,0.25,0,0,1.5,0,,0.1,0.2,,0.1\n") != std::string::npos);

    const auto dir = testutil::fresh_dir("metrics");
    write_metrics_csv(rows, dir / "m.csv");
    const auto back = read_metrics_csv(dir / "m.csv");
    REQUIRE(back.size() == 2);
    CHECK_FALSE(back[0].r_t);
    CHECK_FALSE(back[0].pseudo_acc);
    CHECK(back[1].loss_ra == b.loss_ra);
    CHECK(*back[1].r_t == 2.5);
    CHECK(*back[1].pseudo_acc == 0.875);
    CHECK(back[1].lr == 0.01);

    testutil::write_file(dir / "bad.csv", "epoch,foo\n");
    CHECK_THROWS_AS(read_metrics_csv(dir / "bad.csv"), ParseError);
  }

  TEST_CASE("pseudo-label snapshot") {
    auto ds = SslDataset::fully_labeled(Tensor::matrix({{0}, {1}}), {0, 1}, 2);
    ds.labeled[1] = false;
    ds.true_labels[1] = kNoLabel;
    ds.reset_pseudo_labels();
    std::ostringstream out;
    write_pseudo_label_snapshot(ds, out);
    CHECK(out.str() == "index,is_labeled,y_true,p_0,p_1\n0,1,0,1,0\n1,0,-1,0.5,0.5\n");
  }
}
