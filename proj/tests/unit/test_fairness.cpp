#include "inornet/fairness.hpp"

#include <doctest.h>

#include <cmath>

using namespace inornet;

namespace {

RowVec row(std::initializer_list<double> v) {
  RowVec r(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

// Class 0 from state 1, class 1 new in state 2.
ScoreStats two_state_stats(double psi_init, double psi_cur, double psi_state1, double psi_state2) {
  ScoreStats st;
  st.set_class(0, {psi_init, 1});
  st.set_class(1, {0.9, 2});
  st.set_state_mean(1, psi_state1);
  st.set_state_mean(2, psi_state2);
  st.set_current(2, {{0, psi_cur}});
  return st;
}

}  // namespace

TEST_CASE("weight compensation hand example") {
  Mat w(2, 2);
  w << 2, 0.6, 0, 0.8;
  const double f = weight_fairness_compensation(w, 1, 1);
  CHECK(f == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(w(0, 1) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(w(1, 1) == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(w(0, 0) == 2.0);
}

TEST_CASE("weight compensation edge cases") {
  Mat w = Mat::Random(4, 3);
  const Mat orig = w;
  CHECK(weight_fairness_compensation(w, 0, 3) == 1.0);
  CHECK(w == orig);
  Mat eq(2, 2);
  eq << 1, 0, 0, 1;
  weight_fairness_compensation(eq, 1, 1);
  CHECK(eq == Mat::Identity(2, 2));
  Mat z = Mat::Random(3, 3);
  z.col(2).setZero();
  CHECK_THROWS_AS(weight_fairness_compensation(z, 1, 2), std::domain_error);
  CHECK_THROWS(weight_fairness_compensation(z, 2, 2));
}

TEST_CASE("weight compensation invariants on random heads") {
  std::srand(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Index old_k = 1 + trial % 5, new_k = 1 + (trial / 5) % 4;
    Mat w = Mat::Random(7, old_k + new_k);
    w.rightCols(new_k) *= 0.1 + (trial % 13);
    const Mat before = w;
    weight_fairness_compensation(w, old_k, new_k);
    const RowVec n = column_norms(w);
    CHECK(std::abs(n.tail(new_k).mean() / n.head(old_k).mean() - 1.0) < 1e-9);
    CHECK(w.leftCols(old_k) == before.leftCols(old_k));
    for (Index c = old_k; c < w.cols(); ++c) {
      const double cosine = w.col(c).dot(before.col(c)) / (w.col(c).norm() * before.col(c).norm());
      CHECK(cosine == doctest::Approx(1.0).epsilon(1e-12));
    }
    const Mat once = w;
    weight_fairness_compensation(w, old_k, new_k);
    CHECK(w.isApprox(once, 1e-12));
  }
}

TEST_CASE("score statistics recording") {
  ScoreStats st;
  const std::vector<RowVec> probs{row({0.1, 0.9}), row({0.1, 0.9})};
  const std::vector<int> labels{1, 1};
  record_score_statistics(st, 1, probs, labels, {1});
  CHECK(st.per_class().at(1).psi_init == doctest::Approx(0.9));
  CHECK(st.per_state().at(1) == doctest::Approx(0.9));
  CHECK(st.per_class().count(0) == 0);

  ScoreStats st2;
  const std::vector<RowVec> p2{row({0.8, 0.2}), row({0.6, 0.4}), row({0.3, 0.7})};
  const std::vector<int> l2{0, 0, 1};
  record_score_statistics(st2, 1, p2, l2, {0});
  CHECK(st2.per_class().at(0).psi_init == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(st2.per_class().at(0).initial_state == 1);
  CHECK(st2.per_class().count(1) == 0);
  CHECK_THROWS_AS(record_score_statistics(st2, 2, p2, l2, {0}), std::logic_error);
}

TEST_CASE("score statistics fall back to labeled samples") {
  ScoreStats st;
  const std::vector<RowVec> probs{row({0.7, 0.3}), row({0.6, 0.4})};
  const std::vector<int> labels{1, 1};
  record_score_statistics(st, 1, probs, labels, {1});
  CHECK(st.per_class().at(1).psi_init == doctest::Approx(0.35).epsilon(1e-12));
  ScoreStats empty;
  const std::vector<int> other{0, 0};
  CHECK_THROWS_AS(record_score_statistics(empty, 1, probs, other, {1}), std::invalid_argument);
}

TEST_CASE("current scores keep the initial value for unseen classes") {
  ScoreStats st = two_state_stats(0.8, 0.4, 0.8, 0.5);
  const std::vector<RowVec> probs{row({0.1, 0.9})};
  const std::vector<int> labels{1};
  record_current_scores(st, 2, probs, labels, {0});
  CHECK(st.current().at(0) == 0.8);
}

TEST_CASE("score compensation hand example") {
  const auto st = two_state_stats(0.8, 0.4, 0.8, 0.5);
  const RowVec probs = row({0.4, 0.6});
  const RowVec out = score_fairness_compensation(probs, st, 2, {1});
  CHECK(out(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out(1) == 0.6);
  CHECK(argmax(out) == 1);
}

TEST_CASE("score compensation gating and identity") {
  const auto st = two_state_stats(0.8, 0.4, 0.8, 0.5);
  const RowVec old_pred = row({0.7, 0.3});
  CHECK(score_fairness_compensation(old_pred, st, 2, {1}) == old_pred);
  const auto unit = two_state_stats(0.6, 0.6, 0.5, 0.5);
  const RowVec p = row({0.3, 0.7});
  CHECK(score_fairness_compensation(p, unit, 2, {1}).isApprox(p, 1e-15));
  const auto zero = two_state_stats(0.8, 0.0, 0.8, 0.5);
  CHECK_THROWS_AS(score_fairness_compensation(p, zero, 2, {1}), std::domain_error);
  ScoreStats missing;
  missing.set_state_mean(2, 0.5);
  CHECK_THROWS_AS(score_fairness_compensation(p, missing, 2, {1}), std::out_of_range);
}

TEST_CASE("score compensation invariants on random statistics") {
  std::srand(23);
  for (int trial = 0; trial < 200; ++trial) {
    const Index K = 6;
    ScoreStats st, doubled;
    for (int k = 0; k < K; ++k) {
      const int s = 1 + k / 2;
      const double init = 0.2 + 0.3 * (1 + Mat::Random(1, 1)(0, 0));
      st.set_class(k, {init, s});
      doubled.set_class(k, {2 * init, s});
    }
    std::map<int, double> cur, cur2;
    for (int s = 1; s <= 3; ++s) {
      const double m = 0.2 + 0.3 * (1 + Mat::Random(1, 1)(0, 0));
      st.set_state_mean(s, m);
      doubled.set_state_mean(s, 2 * m);
    }
    for (int k = 0; k < 4; ++k) {
      const double c = 0.2 + 0.3 * (1 + Mat::Random(1, 1)(0, 0));
      cur[k] = c;
      cur2[k] = 2 * c;
    }
    st.set_current(3, cur);
    doubled.set_current(3, cur2);
    RowVec p = (Mat::Random(1, K).array() + 1.5).matrix();
    p /= p.sum();
    const std::set<int> fresh{4, 5};
    const RowVec a = score_fairness_compensation(p, st, 3, fresh);
    const RowVec b = score_fairness_compensation(p, doubled, 3, fresh);
    CHECK(a(4) == p(4));
    CHECK(a(5) == p(5));
    CHECK(a.isApprox(b, 1e-12));
    CHECK(argmax(a) == argmax(b));
  }
}

TEST_CASE("score statistics serialization") {
  const auto st = two_state_stats(0.8, 0.4, 0.8, 0.5);
  const auto j = st.to_json();
  CHECK(j.at("per_class").at("0").at("psi_init") == 0.8);
  CHECK(j.at("per_state").at("2").at("psi_new_mean") == 0.5);
  const auto back = ScoreStats::from_json(j);
  CHECK(back.to_json() == j);
}
