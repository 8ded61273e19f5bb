// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any check fails.

#include "inornet/checkpoint.hpp"
#include "inornet/exemplars.hpp"
#include "inornet/geo_kernels.hpp"
#include "inornet/report.hpp"
#include "inornet/sampling.hpp"
#include "inornet/trainer.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

using namespace inornet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum Kind { Pass, Fail, Skip } kind = Pass;
  std::string detail;
};

// Collects named sub-checks; the first few failures end up in the detail line.
struct Checks {
  int total = 0;
  std::vector<std::string> failed;

  void expect(bool ok, const std::string& what) {
    ++total;
    if (!ok) failed.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s << what << " got " << got << " want " << want;
    expect(std::abs(got - want) <= tol, s.str());
  }
  template <class F>
  void throws(F&& f, const std::string& what) {
    bool threw = false;
    try {
      f();
    } catch (const std::exception&) {
      threw = true;
    }
    expect(threw, what + " did not throw");
  }
  Outcome outcome(const std::string& summary) const {
    std::ostringstream s;
    s << summary << ", " << (total - failed.size()) << "/" << total << " checks";
    for (std::size_t i = 0; i < failed.size() && i < 5; ++i) s << "; " << failed[i];
    return {failed.empty() ? Outcome::Pass : Outcome::Fail, s.str()};
  }
};

PointCloud cloud(std::initializer_list<std::array<float, 3>> pts) {
  PointCloud pc;
  for (const auto& p : pts) pc.points.push_back({p[0], p[1], p[2]});
  return pc;
}

PointCloud random_cloud(Rng& rng, std::size_t n) {
  PointCloud pc;
  for (std::size_t i = 0; i < n; ++i) {
    pc.points.push_back({float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))});
  }
  return pc;
}

Mat random_mat(Rng& rng, Index r, Index c, double scale = 1.0) {
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

std::vector<std::size_t> all_indices(const ParameterSet& ps) {
  std::vector<std::size_t> v(ps.size());
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// ---- gradient suite ---------------------------------------------------------

ModelDims random_dims(Rng& rng) {
  ModelDims d;
  const Index r = 2;
  d.attention_ratio = r;
  d.tnet_hidden = 3 + Index(rng.below(4));
  d.encoder = {3 + Index(rng.below(4)), 3 + Index(rng.below(4)), 4 + Index(rng.below(5))};
  d.structure_width = r * (2 + Index(rng.below(7)));  // 4..16
  d.embed_width = 3 + Index(rng.below(4));
  d.critic_conv = 2 + Index(rng.below(3));
  d.critic_state_hidden = 3 + Index(rng.below(3));
  d.critic_branch = 2 + Index(rng.below(3));
  d.classifier_hidden = {4 + Index(rng.below(4)), 3 + Index(rng.below(4))};
  d.structures = 2 + Index(rng.below(7));  // 2..8
  d.neighbors = 2 + Index(rng.below(3));
  return d;
}

Outcome gradient_suite() {
  constexpr int kConfigs = 24;
  double worst = 0.0;
  std::size_t coords = 0;
  Checks c;
  for (int cfg = 0; cfg < kConfigs; ++cfg) {
    Rng rng(mix_seed(77, cfg));
    const ModelDims d = random_dims(rng);
    const Index K = 2 + Index(rng.below(3));
    InorNet net(d, mix_seed(78, cfg));
    net.grow(K, rng);
    const auto pc = random_cloud(rng, 16 + rng.below(9));
    const int label = int(rng.below(K));
    PrototypeBank bank;
    std::map<int, RowVec> protos;
    for (int k = 0; k < K; ++k) protos[k] = random_mat(rng, 1, d.structure_width);
    bank.ema_update(protos, 1);
    const double reward = double(rng.below(3));
    const ConsistencyOptions copts{1.0 + rng.uniform() * 4.0, cfg % 2 == 1};

    enum Term { Clc, Cst, Cri, Reg };
    for (Term term : {Clc, Cst, Cri, Reg}) {
      auto loss = [&](std::vector<Mat>* grads) {
        Tape t;
        Binding bind(t, net.params());
        const auto fp = net.forward(bind, pc, {});
        Var l;
        switch (term) {
          case Clc:
            l = softmax_cross_entropy(fp.logits, label);
            break;
          case Cst:
            l = consistency_loss(bind, fp.bundle.f_m, bank, label, copts);
            break;
          case Cri: {
            const std::vector<Var> gains{critic_gain(bind, fp.bundle.f_p, fp.bundle.A_m, d)};
            l = critic_loss(gains);
            break;
          }
          case Reg: {
            const std::vector<Var> gains{critic_gain(bind, fp.bundle.f_p, fp.bundle.A_m, d)};
            const std::vector<double> r{reward};
            l = regression_loss(gains, r);
            break;
          }
        }
        if (grads) {
          t.backward(l);
          *grads = bind.gradients();
        }
        return l.value()(0, 0);
      };
      std::vector<Mat> grads;
      loss(&grads);
      const auto rep = oracle::check_params(net.params(), all_indices(net.params()), grads,
                                            [&] { return loss(nullptr); }, 2, rng);
      worst = std::max(worst, rep.max_rel);
      coords += rep.checked;
      std::ostringstream what;
      what << "config " << cfg << " term " << int(term) << " rel " << rep.max_rel;
      c.expect(rep.max_rel < 1e-4, what.str());
    }
  }
  std::ostringstream s;
  s << kConfigs << " configs, " << coords << " coordinates, max rel error " << worst;
  return c.outcome(s.str());
}

// ---- oracle suite -----------------------------------------------------------

Outcome oracle_suite() {
  Checks c;
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.below(64);
    auto pc = random_cloud(rng, n);
    if (i % 5 == 0) {
      for (auto& p : pc.points) p = {std::round(p.x * 2), std::round(p.y * 2), std::round(p.z)};
    }
    const std::size_t count = 1 + rng.below(n), start = rng.below(n);
    c.expect(farthest_point_sampling(pc, count, start) == oracle::fps(pc, count, start), "fps instance " + std::to_string(i));
  }
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.below(64);
    auto pc = random_cloud(rng, n);
    if (i % 5 == 0) {
      for (auto& p : pc.points) p = {std::round(p.x * 2), std::round(p.y * 2), 0.0f};
    }
    const std::size_t m = 1 + rng.below(n);
    Vec3 ctr{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    if (i % 7 == 0) ctr = {0, 0, 0};
    c.expect(knn_query(pc, ctr, m) == oracle::knn(pc, ctr, m), "knn instance " + std::to_string(i));
  }
  for (int i = 0; i < 1000; ++i) {
    const Index n = 1 + Index(rng.below(64));
    Mat f = random_mat(rng, n, 1 + Index(rng.below(8)));
    if (i % 5 == 0) f = f.array().round();
    const std::size_t q = 1 + rng.below(std::size_t(n));
    c.expect(herding_select(f, q) == oracle::herding(f, q), "herding instance " + std::to_string(i));
  }
  return c.outcome("3000 randomized instances");
}

// ---- closed-form examples ---------------------------------------------------

void data_examples(Checks& c) {
  TriangleMesh mesh;
  mesh.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 6, 0}, {10, 0, 0}, {11, 0, 0}, {10, 2, 0}};
  mesh.triangles = {{0, 1, 2}, {3, 4, 5}};
  const auto pc = sample_mesh_surface(mesh, 10000, 5);
  std::size_t big = 0;
  for (const auto& p : pc.points) big += p.x < 5.0f;
  c.expect(std::abs(double(big) - 9000.0) <= 90.0, "area-weighted sampling count " + std::to_string(big));

  c.expect(farthest_point_sampling(cloud({{0, 0, 0}, {1, 0, 0}, {10, 0, 0}}), 2, 0) == std::vector<std::uint32_t>{0, 2},
           "fps three points");
  c.expect(knn_query(cloud({{1, 0, 0}, {2, 0, 0}, {3, 0, 0}}), {0, 0, 0}, 2) == std::vector<std::uint32_t>{0, 1},
           "knn collinear");
}

void reasoning_examples(Checks& c) {
  {  // encoder shape and gradient, width-8 configuration
    ModelDims d;
    d.tnet_hidden = 8;
    d.encoder = {8, 16, 32};
    ParameterSet ps;
    Rng rng(3);
    add_reasoning_params(ps, d, rng);
    Tape t;
    Binding b(t, ps);
    Rng prng(4);
    const auto toy = random_cloud(prng, 4);
    const Mat out = encode_points(b, toy, d).value();
    c.expect(out.rows() == 4 && out.cols() == 32, "encoder output shape");

    d.encoder = {8, 8, 8};
    ParameterSet ps8;
    add_reasoning_params(ps8, d, rng);
    for (auto& p : ps8) {
      if (p.name.find(".fc2.w") != std::string::npos) p.value = random_mat(rng, p.value.rows(), p.value.cols(), 0.1);
    }
    const Mat probe = random_mat(rng, 4, 8);
    auto scalar = [&](std::vector<Mat>* grads) {
      Tape tt;
      Binding bb(tt, ps8);
      Var y = sum(mul(encode_points(bb, toy, d), tt.constant(probe)));
      if (grads) {
        tt.backward(y);
        *grads = bb.gradients();
      }
      return y.value()(0, 0);
    };
    std::vector<Mat> g;
    scalar(&g);
    const auto rep = oracle::check_params(ps8, all_indices(ps8), g, [&] { return scalar(nullptr); }, 4, rng);
    c.expect(rep.max_rel < 1e-4, "encoder finite differences " + std::to_string(rep.max_rel));
  }
  {  // offset voting with a constant (1,1,1) weight layer
    ParameterSet ps;
    ps.add("reasoning.offset.w", ParamGroup::EncoderClassifier, Mat::Zero(2, 3));
    ps.add("reasoning.offset.b", ParamGroup::EncoderClassifier, Mat::Ones(1, 3));
    Tape t;
    Binding b(t, ps);
    const auto pc = cloud({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
    Var feats = t.constant(Mat::Zero(3, 2));
    LocalStructureSet s;
    s.centroids = {{0, 0, 0}};
    s.neighbor_indices = {1, 2};
    s.neighbors = 2;
    s.centroid_features = gather_rows(feats, {0});
    const Mat off = predict_offsets(b, pc, s, feats).value();
    c.near(off(0, 0), -0.5, 1e-9, "offset x");
    c.near(off(0, 1), -0.5, 1e-9, "offset y");
    c.near(off(0, 2), 0.0, 1e-9, "offset z");
  }
  {  // moving a centroid onto a distant cluster
    PointCloud pc;
    for (int i = 0; i < 6; ++i) pc.points.push_back({0.02f * i, 0.01f * i, 0});
    for (int i = 0; i < 6; ++i) pc.points.push_back({8.0f + 0.02f * i, 0.01f * i, 0});
    Tape t;
    Var feats = t.constant(Mat::Random(12, 3));
    const auto init = build_structures(pc, feats, 1, 4);
    Mat offsets(1, 3);
    offsets << 8.0, 0.0, 0.0;
    const auto moved = update_structures(pc, init, offsets, feats);
    const auto expect = oracle::knn(pc, moved.centroids[0], 4);
    const std::vector<std::uint32_t> got(moved.neighbor_indices.begin(), moved.neighbor_indices.end());
    bool far = true;
    for (auto i : got) far = far && i >= 6;
    c.expect(got == expect && far, "regrouped neighbors come from the distant cluster");
  }
  {  // structure feature max
    ParameterSet ps;
    ps.add("reasoning.structure.w", ParamGroup::EncoderClassifier, Mat::Identity(2, 2));
    ps.add("reasoning.structure.b", ParamGroup::EncoderClassifier, Mat::Zero(1, 2));
    Tape t;
    Binding b(t, ps);
    Mat f(2, 2);
    f << 1, 5, 3, 2;
    LocalStructureSet s;
    s.centroids = {{0, 0, 0}};
    s.neighbor_indices = {0, 1};
    s.neighbors = 2;
    const Mat out = structure_features(b, s, t.constant(f)).value();
    c.near(out(0, 0), 3, 1e-9, "structure max 0");
    c.near(out(0, 1), 5, 1e-9, "structure max 1");
  }
  {  // prototypes
    Mat g(2, 2);
    g << 1, 1, 3, 3;
    const std::vector<int> labels{0, 0};
    const auto est = batch_prototypes(g, labels);
    c.near(est.at(0)(0), 2, 1e-9, "prototype mean x");
    c.near(est.at(0)(1), 2, 1e-9, "prototype mean y");
    PrototypeBank bank(0.7);
    bank.ema_update({{0, RowVec::Constant(1, 1.0)}}, 1);
    bank.ema_update({{0, RowVec::Constant(1, 0.0)}}, 1);
    c.near(bank.at(0).prototype(0), 0.7, 1e-9, "prototype EMA");
    RowVec x(2);
    x << 2, 0;
    const RowVec n = normalize_embed(x);
    c.near(n(0), 0.5, 1e-9, "normalize 0");
    c.near(n(1), -0.5, 1e-9, "normalize 1");
  }
  {  // consistency loss value and gradient
    ParameterSet ps;
    for (const char* name : {"reasoning.embed_local", "reasoning.embed_proto"}) {
      ps.add(std::string(name) + ".w", ParamGroup::EncoderClassifier, Mat::Identity(2, 2));
      ps.add(std::string(name) + ".b", ParamGroup::EncoderClassifier, Mat::Zero(1, 2));
    }
    const double r = 1.0 / std::sqrt(2.0);
    RowVec u(2);
    u << r, -r;
    PrototypeBank bank;
    bank.ema_update({{0, u}, {1, -u}}, 1);
    Tape t;
    Binding b(t, ps);
    const double v = consistency_loss(b, t.constant(u), bank, 0, {1.0, false}).value()(0, 0);
    c.near(v, 0.126928, 1e-6, "consistency loss");

    Rng rng(12);
    ParameterSet toy;
    for (const char* name : {"reasoning.embed_local", "reasoning.embed_proto"}) {
      toy.add(std::string(name) + ".w", ParamGroup::EncoderClassifier, random_mat(rng, 6, 4));
      toy.add(std::string(name) + ".b", ParamGroup::EncoderClassifier, random_mat(rng, 1, 4));
    }
    PrototypeBank two;
    two.ema_update({{0, random_mat(rng, 1, 6)}, {1, random_mat(rng, 1, 6)}}, 1);
    const Mat feats = random_mat(rng, 5, 6);
    auto loss = [&](std::vector<Mat>* grads) {
      Tape tt;
      Binding bb(tt, toy);
      Var l = consistency_loss(bb, tt.constant(feats), two, 1, {8.0, false});
      if (grads) {
        tt.backward(l);
        *grads = bb.gradients();
      }
      return l.value()(0, 0);
    };
    std::vector<Mat> g;
    loss(&g);
    const auto rep = oracle::check_params(toy, all_indices(toy), g, [&] { return loss(nullptr); }, 10, rng);
    c.expect(rep.max_rel < 1e-4, "consistency finite differences " + std::to_string(rep.max_rel));
  }
}

void attention_examples(Checks& c) {
  ModelDims d;
  d.structure_width = 8;
  d.attention_ratio = 2;
  d.structures = 4;
  d.critic_conv = 3;
  d.critic_state_hidden = 5;
  d.critic_branch = 4;
  Rng rng(31);
  {
    ParameterSet ps;
    add_attention_params(ps, d, rng);
    for (auto& p : ps) p.value.setZero();
    Tape t;
    Binding b(t, ps);
    const Mat fm = random_mat(rng, 4, 8);
    auto bundle = geometric_attention(b, t.constant(fm), d);
    c.expect((bundle.A_m.value().array() == 0.5).all(), "zero layers give a half gate");
    c.expect((bundle.f_p.value() - 1.5 * fm).cwiseAbs().maxCoeff() < 1e-9, "f_p is 1.5 f_m");
  }
  ParameterSet ps;
  add_attention_params(ps, d, rng);
  add_critic_params(ps, d, rng);
  const Mat fm = random_mat(rng, 4, 8);
  const Mat probe = random_mat(rng, 4, 8);
  auto attended = [&](std::vector<Mat>* grads) {
    Tape t;
    Binding b(t, ps);
    auto bundle = geometric_attention(b, t.constant(fm), d);
    Var y = sum(mul(bundle.f_p, t.constant(probe)));
    if (grads) {
      t.backward(y);
      *grads = b.gradients();
    }
    return y.value()(0, 0);
  };
  std::vector<Mat> g;
  attended(&g);
  auto rep = oracle::check_params(ps, all_indices(ps), g, [&] { return attended(nullptr); }, 6, rng);
  c.expect(rep.max_rel < 1e-4, "attention finite differences " + std::to_string(rep.max_rel));

  auto gain = [&](std::vector<Mat>* grads) {
    Tape t;
    Binding b(t, ps);
    auto bundle = geometric_attention(b, t.constant(fm), d);
    Var v = critic_gain(b, bundle.f_p, bundle.A_m, d);
    if (grads) {
      t.backward(v);
      *grads = b.gradients();
    }
    return v.value()(0, 0);
  };
  gain(&g);
  std::vector<std::size_t> critic;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].group == ParamGroup::Critic) critic.push_back(i);
  }
  rep = oracle::check_params(ps, critic, g, [&] { return gain(nullptr); }, 6, rng);
  c.expect(rep.max_rel < 1e-4, "critic finite differences " + std::to_string(rep.max_rel));

  Tape t;
  Mat rows(2, 2);
  rows << 1, 5, 3, 2;
  const Mat pooled = global_pool(t.constant(rows)).value();
  c.expect(pooled(0, 0) == 3 && pooled(0, 1) == 5, "global pool");
  const std::vector<double> gains{2, 4};
  c.near(critic_loss(gains), -3, 1e-9, "critic loss");
  c.expect(amelioration_reward(0.8, 0.6) == 1, "amelioration reward");
  const std::vector<double> v0{0}, r2{2}, v13{1, 3}, r22{2, 2};
  c.near(regression_loss(v0, r2), 4, 1e-9, "regression single");
  c.near(regression_loss(v13, r22), 1, 1e-9, "regression pairs");
}

void fairness_examples(Checks& c) {
  Mat w(2, 2);
  w << 2, 0.6, 0, 0.8;
  weight_fairness_compensation(w, 1, 1);
  c.near(w(0, 1), 1.2, 1e-9, "compensated column x");
  c.near(w(1, 1), 1.6, 1e-9, "compensated column y");

  ScoreStats st;
  const std::vector<RowVec> probs{(RowVec(2) << 0.8, 0.2).finished(), (RowVec(2) << 0.6, 0.4).finished()};
  const std::vector<int> labels{0, 0};
  record_score_statistics(st, 1, probs, labels, {0});
  c.near(st.per_class().at(0).psi_init, 0.7, 1e-9, "initial mean score");

  ScoreStats rs;
  rs.set_class(0, {0.8, 1});
  rs.set_class(1, {0.9, 2});
  rs.set_state_mean(1, 0.8);
  rs.set_state_mean(2, 0.5);
  rs.set_current(2, {{0, 0.4}});
  RowVec p(2);
  p << 0.4, 0.45;
  const RowVec out = score_fairness_compensation(p, rs, 2, {1});
  c.near(out(0), 0.5, 1e-9, "rectified old-class score");
  c.expect(argmax(p) == 1 && argmax(out) == 0, "rectification flips 0.45 vs 0.4 toward the old class");
}

void trainer_examples(Checks& c) {
  const std::vector<RowVec> uniform{RowVec::Zero(4)};
  const std::vector<int> label{0};
  c.near(classification_loss(uniform, label), std::log(4.0), 1e-6, "uniform cross-entropy");
  c.near(classification_loss(uniform, label), 1.386294, 1e-6, "uniform cross-entropy digits");
  c.near(total_objective(1, 1, 1, 1, TrainConfig{}), 2.11, 1e-9, "objective with default weights");
  Mat three(3, 2);
  three << 0, 0, 1, 0, 0, 2;
  // Exhaustive enumeration of ordered pairs under the greedy objective.
  const RowVec mu = three.colwise().mean();
  std::size_t first = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if ((three.row(Index(i)) - mu).norm() < (three.row(Index(first)) - mu).norm()) first = i;
  }
  std::size_t second = 3;
  double best = 1e300;
  for (std::size_t j = 0; j < 3; ++j) {
    if (j == first) continue;
    const double e = ((three.row(Index(first)) + three.row(Index(j))) / 2.0 - mu).norm();
    if (e < best) {
      best = e;
      second = j;
    }
  }
  c.expect(herding_select(three, 2) == std::vector<std::size_t>{first, second}, "herding three samples");
  c.expect(exemplar_quotas(10, 4) == std::vector<std::size_t>{3, 3, 2, 2}, "quota remainder rule");
  RunMetrics r;
  r.states = {StateMetrics{1, 0.9}, StateMetrics{2, 0.7}};
  c.near(r.avg_top1(), 0.8, 1e-9, "average accuracy");
  const std::vector<int> preds{0, 1}, zeros{0, 0};
  c.near(top1_accuracy(preds, zeros), 0.5, 1e-9, "top-1");
  const std::vector<int> p2{0, 1, 1, 1}, y2{0, 0, 1, 1};
  c.near(macro_recall(p2, y2, 2), 0.75, 1e-9, "macro recall");
}

Outcome closed_form() {
  Checks c;
  data_examples(c);
  reasoning_examples(c);
  attention_examples(c);
  fairness_examples(c);
  trainer_examples(c);
  return c.outcome("worked examples");
}

// ---- fairness invariants ----------------------------------------------------

Outcome fairness_invariants() {
  Checks c;
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const Index old_k = 1 + Index(rng.below(6)), new_k = 1 + Index(rng.below(4));
    Mat w = random_mat(rng, 2 + Index(rng.below(10)), old_k + new_k);
    w.rightCols(new_k) *= rng.uniform(0.05, 20.0);
    const Mat before = w;
    weight_fairness_compensation(w, old_k, new_k);
    const RowVec n = column_norms(w);
    c.expect(std::abs(n.tail(new_k).mean() / n.head(old_k).mean() - 1.0) < 1e-9, "mean norm equality");
    c.expect(w.leftCols(old_k) == before.leftCols(old_k), "old columns untouched");
    double worst = 0.0;
    for (Index k = old_k; k < w.cols(); ++k) {
      worst = std::max(worst, std::abs(1.0 - w.col(k).dot(before.col(k)) / (w.col(k).norm() * before.col(k).norm())));
    }
    c.expect(worst < 1e-12, "direction preserved");
    const Mat once = w;
    weight_fairness_compensation(w, old_k, new_k);
    c.expect((w - once).cwiseAbs().maxCoeff() < 1e-12, "idempotent");
  }
  for (int trial = 0; trial < 200; ++trial) {
    const int states = 2 + int(rng.below(3));
    const int per = 1 + int(rng.below(2));
    const int K = states * per;
    ScoreStats st, unit, doubled;
    std::map<int, double> cur, cur2, cur_unit;
    for (int s = 1; s <= states; ++s) {
      const double m = rng.uniform(0.2, 1.0);
      st.set_state_mean(s, m);
      doubled.set_state_mean(s, 2 * m);
      unit.set_state_mean(s, 0.6);
    }
    for (int k = 0; k < K; ++k) {
      const int s = 1 + k / per;
      const double init = rng.uniform(0.2, 1.0), now = rng.uniform(0.2, 1.0);
      st.set_class(k, {init, s});
      doubled.set_class(k, {2 * init, s});
      unit.set_class(k, {0.7, s});
      if (s < states) {
        cur[k] = now;
        cur2[k] = 2 * now;
        cur_unit[k] = 0.7;
      }
    }
    st.set_current(states, cur);
    doubled.set_current(states, cur2);
    unit.set_current(states, cur_unit);
    std::set<int> fresh;
    for (int k = (states - 1) * per; k < K; ++k) fresh.insert(k);
    RowVec p = random_mat(rng, 1, K).array().abs() + 0.01;
    p /= p.sum();
    const RowVec a = score_fairness_compensation(p, st, states, fresh);
    const bool triggered = fresh.count(int(argmax(p))) != 0;
    if (!triggered) c.expect(a == p, "untriggered rectification is the identity");
    for (int k : fresh) c.expect(a(k) == p(k), "current-state scores unchanged");
    c.expect((score_fairness_compensation(p, unit, states, fresh) - p).cwiseAbs().maxCoeff() < 1e-15,
             "equal statistics give the identity");
    const RowVec b = score_fairness_compensation(p, doubled, states, fresh);
    c.expect((a - b).cwiseAbs().maxCoeff() < 1e-12 && argmax(a) == argmax(b), "scale consistency");
  }
  return c.outcome("400 randomized trials");
}

// ---- trend reproduction and determinism --------------------------------------

struct Variant {
  std::string name;
  nlohmann::json overrides;
};

TrainConfig benchmark_config(std::uint64_t seed, const nlohmann::json& overrides, std::size_t threads) {
  nlohmann::json j = {{"L", 16},
                      {"m", 8},
                      {"U", 256},
                      {"epochs", 30},
                      {"exemplar_budget", 40},
                      {"seed", seed},
                      {"schedule", {{"states", 4}}},
                      {"model", {{"preset", "desk"}}}};
  j.merge_patch(overrides);
  auto cfg = TrainConfig::from_json(j);
  cfg.threads = threads;
  return cfg;
}

IncrementalData benchmark_data(std::uint64_t seed) {
  return fixture::synthetic(synthetic_shape_kinds(), 100, 30, 256, 4, seed, 0.3);
}

std::string metrics_bytes(const RunResult& r) { return r.metrics.to_json().dump(2) + "\n" + metrics_csv(r.metrics); }

struct Benchmark {
  std::map<std::string, std::vector<double>> avg;  // variant -> per-seed Avg.
  std::string full_seed0_bytes;
  double seconds = 0.0;
};

Benchmark run_benchmark(std::size_t threads, const fs::path& out_dir) {
  const std::vector<Variant> variants = {
      {"full", nlohmann::json::object()},
      {"w/oCGR", {{"ablations", {{"cgr", false}}}}},
      {"w/oCGA", {{"ablations", {{"cga", false}}}}},
      {"w/oWFC", {{"ablations", {{"wfc", false}}}}},
      {"naive", {{"exemplar_budget", 0}, {"ablations", {{"cgr", false}, {"cga", false}, {"wfc", false}, {"sfc", false}}}}},
  };
  Benchmark b;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto data = benchmark_data(seed);
    for (const auto& v : variants) {
      const auto r = run_incremental(benchmark_config(seed, v.overrides, threads), data, v.name);
      b.avg[v.name].push_back(r.metrics.avg_top1());
      if (v.name == "full") {
        b.avg["w/oSFC"].push_back(r.metrics_no_sfc.avg_top1());
        if (seed == 0) b.full_seed0_bytes = metrics_bytes(r);
      }
      std::string tag = v.name;
      std::replace(tag.begin(), tag.end(), '/', '_');
      write_text(out_dir / (tag + "_seed" + std::to_string(seed) + ".csv"), metrics_csv(r.metrics));
      std::cout << "  seed " << seed << " " << v.name << " Avg " << r.metrics.avg_top1();
      if (v.name == "full") std::cout << " (w/oSFC " << r.metrics_no_sfc.avg_top1() << ")";
      std::cout << std::endl;
    }
  }
  b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return b;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

Outcome trend(const Benchmark& b) {
  Checks c;
  const double full = mean(b.avg.at("full"));
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << "mean Avg: full " << 100 * full;
  for (const char* v : {"w/oSFC", "w/oWFC", "w/oCGA", "w/oCGR"}) {
    const double a = mean(b.avg.at(v));
    s << ", " << v << " " << 100 * a;
    // Only the variant adjacent to the full model in the ablation ordering gets the one-point tie allowance.
    const double slack = std::string(v) == "w/oSFC" ? 0.01 : 0.0;
    c.expect(full + slack >= a, std::string("full below ") + v);
  }
  const double naive = mean(b.avg.at("naive"));
  s << ", naive " << 100 * naive;
  c.expect(full - naive >= 0.10, "full does not beat naive by 10 points");
  s << "; " << b.seconds << " s";
  return c.outcome(s.str());
}

Outcome determinism(const Benchmark& b, std::size_t threads) {
  const auto again = run_incremental(benchmark_config(0, nlohmann::json::object(), threads), benchmark_data(0), "full");
  const bool same = metrics_bytes(again) == b.full_seed0_bytes;
  return {same ? Outcome::Pass : Outcome::Fail,
          same ? "repeat of the seed-0 full run is byte-identical" : "repeat of the seed-0 full run differs"};
}

// ---- degenerate configuration vs. a plain classifier trainer -----------------

// Cross-entropy-only trainer with its own Adam and batching loop.
std::vector<double> reference_trace(const TrainConfig& cfg, const IncrementalData& data) {
  InorNet net(cfg.dims(), mix_seed(cfg.seed, 1));
  ParameterSet& ps = net.params();
  std::vector<double> trace;
  for (int s = 1; s <= int(data.states.size()); ++s) {
    Rng grow_rng(mix_seed(cfg.seed, 100 + std::uint64_t(s)));
    net.grow(Index(data.states[s - 1].size()), grow_rng);
    std::vector<Mat> m(ps.size()), v(ps.size());
    long step = 0;
    std::vector<const LabeledCloud*> pool;
    for (const auto& lc : data.train) {
      if (std::find(data.states[s - 1].begin(), data.states[s - 1].end(), lc.label) != data.states[s - 1].end()) {
        pool.push_back(&lc);
      }
    }
    for (int e = 1; e <= int(cfg.epochs); ++e) {
      const auto order = epoch_permutation(cfg.seed, s, e, pool.size());
      double total = 0.0;
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t n = std::min(cfg.batch_size, order.size() - start);
        std::vector<Mat> grad(ps.size());
        for (std::size_t i = 0; i < n; ++i) {
          const auto& src = *pool[order[start + i]];
          const auto pc = augment(src.cloud, augment_seed(cfg.seed, s, e, start + i), cfg.augment);
          Tape t;
          Binding bind(t, ps);
          const auto fp = net.forward(bind, pc, {false, false, 0});
          Var ce = softmax_cross_entropy(fp.logits, src.label);
          t.backward(ce);
          total += ce.value()(0, 0);
          const auto g = bind.gradients();
          for (std::size_t p = 0; p < ps.size(); ++p) {
            if (g[p].size() == 0) continue;
            if (grad[p].size() == 0) grad[p] = Mat::Zero(g[p].rows(), g[p].cols());
            grad[p] += g[p] / double(n);
          }
        }
        ++step;
        for (std::size_t p = 0; p < ps.size(); ++p) {
          if (grad[p].size() == 0) continue;
          Mat gd = grad[p] + cfg.weight_decay * ps[p].value;
          if (m[p].size() == 0) {
            m[p] = Mat::Zero(gd.rows(), gd.cols());
            v[p] = Mat::Zero(gd.rows(), gd.cols());
          }
          m[p] = 0.9 * m[p] + 0.1 * gd;
          v[p] = 0.999 * v[p] + 0.001 * gd.cwiseProduct(gd);
          const Mat mh = m[p] / (1 - std::pow(0.9, double(step)));
          const Mat vh = v[p] / (1 - std::pow(0.999, double(step)));
          ps[p].value.array() -= cfg.lr * mh.array() / (vh.array().sqrt() + 1e-8);
        }
      }
      trace.push_back(total / double(pool.size()));
    }
  }
  return trace;
}

Outcome degenerate_equivalence(std::size_t threads) {
  const auto data = fixture::synthetic({"sphere", "cube", "cylinder", "cone"}, 20, 5, 64, 2, 11, 0.2);
  auto cfg = TrainConfig::from_json({{"L", 8},
                                     {"m", 8},
                                     {"U", 64},
                                     {"batch_size", 16},
                                     {"epochs", 4},
                                     {"exemplar_budget", 0},
                                     {"seed", 11},
                                     {"lambda1", 0.0},
                                     {"lambda2", 0.0},
                                     {"ablations", {{"cgr", false}, {"cga", false}, {"wfc", false}, {"sfc", false}}},
                                     {"model", {{"preset", "desk"}}}});
  cfg.threads = threads;
  const auto run = run_incremental(cfg, data, "degenerate");
  const auto ref = reference_trace(cfg, data);
  Checks c;
  c.expect(run.trace.size() == ref.size(), "trace length");
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(ref.size(), run.trace.size()); ++i) {
    worst = std::max({worst, std::abs(run.trace[i].objective - ref[i]), std::abs(run.trace[i].losses.clc - ref[i])});
  }
  c.expect(worst <= 1e-6, "per-epoch loss differs by " + std::to_string(worst));
  std::ostringstream s;
  s << ref.size() << " epochs, max per-epoch difference " << worst;
  return c.outcome(s.str());
}

// ---- runner -----------------------------------------------------------------

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& fn) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {Outcome::Fail, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const char* tag = o.kind == Outcome::Pass ? "PASS" : o.kind == Outcome::Fail ? "FAIL" : "SKIP";
  if (o.kind == Outcome::Fail) ++failures;
  std::printf("%s %s: %s [%.1fs]\n", tag, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";

  report("gradient suite", gradient_suite);
  report("oracle suite", oracle_suite);
  report("closed-form examples", closed_form);
  report("fairness invariants", fairness_invariants);
  report("degenerate-config equivalence", [&] { return degenerate_equivalence(threads); });

  if (quick) {
    report("trend reproduction", [] { return Outcome{Outcome::Skip, "skipped by --quick"}; });
    report("determinism", [] { return Outcome{Outcome::Skip, "skipped by --quick"}; });
  } else {
    const fs::path out = fs::temp_directory_path() / "inornet_acceptance";
    fs::create_directories(out);
    std::optional<Benchmark> bench;
    report("trend reproduction", [&] {
      bench = run_benchmark(threads, out);
      return trend(*bench);
    });
    report("determinism", [&] {
      if (!bench) return Outcome{Outcome::Fail, "benchmark did not run"};
      return determinism(*bench, threads);
    });
  }

  report("kernel parity (secondary)", [] {
    return Outcome{Outcome::Skip, "accelerated geo-kernels library not built; reference kernels in use"};
  });
  return failures == 0 ? 0 : 1;
}
