#include "inornet/trainer.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace inornet {

// ---- data -------------------------------------------------------------------

void IncrementalData::index() {
  train_index_.clear();
  for (std::size_t i = 0; i < train.size(); ++i) train_index_[train[i].id] = i;
}

const LabeledCloud& IncrementalData::train_by_id(const std::string& id) const {
  auto it = train_index_.find(id);
  if (it == train_index_.end()) throw std::out_of_range("unknown training sample id: " + id);
  return train[it->second];
}

IncrementalData IncrementalData::load(const DatasetManifest& manifest, const IncrementalSchedule& schedule,
                                      std::size_t points) {
  validate_schedule(schedule, manifest.class_count());
  IncrementalData d;
  std::vector<int> column(manifest.class_count(), -1);
  for (const auto& group : schedule.state_classes) {
    std::vector<int> cols;
    for (int c : group) {
      column[c] = static_cast<int>(d.class_order.size());
      cols.push_back(column[c]);
      d.class_order.push_back(c);
      d.class_names.push_back(manifest.classes[c]);
    }
    d.states.push_back(std::move(cols));
  }
  for (const auto& s : manifest.samples) {
    LabeledCloud lc{s.id, load_sample(manifest, s, points), column[s.class_index]};
    (s.split == Split::Train ? d.train : d.test).push_back(std::move(lc));
  }
  d.index();
  return d;
}

IncrementalData load_incremental_data(const TrainConfig& cfg) {
  const auto manifest = load_manifest(cfg.dataset);
  const auto schedule = IncrementalSchedule::from_json(cfg.schedule, manifest.class_count());
  return IncrementalData::load(manifest, schedule, cfg.U);
}

std::vector<const LabeledCloud*> seen_samples(const std::vector<LabeledCloud>& samples, const IncrementalData& data,
                                              int s) {
  std::set<int> seen;
  for (int i = 0; i < s && i < static_cast<int>(data.states.size()); ++i) {
    seen.insert(data.states[i].begin(), data.states[i].end());
  }
  std::vector<const LabeledCloud*> out;
  for (const auto& lc : samples) {
    if (seen.count(lc.label)) out.push_back(&lc);
  }
  return out;
}

// ---- losses -----------------------------------------------------------------

double classification_loss(std::span<const RowVec> logits, std::span<const int> labels) {
  if (logits.size() != labels.size()) throw std::invalid_argument("classification_loss: size mismatch");
  if (logits.empty()) throw std::invalid_argument("classification_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= logits[i].size()) throw std::out_of_range("classification_loss: label out of range");
    total -= std::log(softmax(logits[i])(labels[i]));
  }
  return total / static_cast<double>(logits.size());
}

double total_objective(double clc, double reg, double cri, double cst, const TrainConfig& cfg) {
  return clc + reg + cfg.lambda1 * cri + cfg.lambda2 * cst;
}

// ---- scheduling helpers -----------------------------------------------------

std::vector<std::size_t> epoch_permutation(std::uint64_t seed, int state, int epoch, std::size_t n) {
  Rng rng(mix_seed(mix_seed(seed, 0x5eed), mix_seed(static_cast<std::uint64_t>(state), static_cast<std::uint64_t>(epoch))));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

std::uint64_t augment_seed(std::uint64_t seed, int state, int epoch, std::size_t position) {
  return mix_seed(mix_seed(mix_seed(seed, 0xa06), mix_seed(static_cast<std::uint64_t>(state), static_cast<std::uint64_t>(epoch))),
                  position);
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- trainer ----------------------------------------------------------------

namespace {

AdamOptions adam_options(const TrainConfig& cfg) {
  AdamOptions o;
  o.lr = cfg.lr;
  o.weight_decay = cfg.weight_decay;
  return o;
}

bool finite(const Mat& m) { return m.allFinite(); }

}  // namespace

IncrementalTrainer::IncrementalTrainer(TrainConfig cfg, std::vector<std::vector<int>> states)
    : cfg_(std::move(cfg)),
      states_(std::move(states)),
      model_(cfg_.dims(), mix_seed(cfg_.seed, 1)),
      bank_(cfg_.gamma),
      store_(cfg_.exemplar_budget),
      opt_ec_(ParamGroup::EncoderClassifier, adam_options(cfg_)),
      opt_att_(ParamGroup::Attention, adam_options(cfg_)),
      opt_crit_(ParamGroup::Critic, adam_options(cfg_)) {
  cfg_.validate();
}

std::set<int> IncrementalTrainer::new_classes(int s) const {
  if (s < 1 || s > static_cast<int>(states_.size())) throw std::out_of_range("state index out of range");
  return {states_[s - 1].begin(), states_[s - 1].end()};
}

std::set<int> IncrementalTrainer::past_classes(int s) const {
  std::set<int> out;
  for (int i = 0; i + 1 < s; ++i) out.insert(states_[i].begin(), states_[i].end());
  return out;
}

ForwardOptions IncrementalTrainer::forward_options() const {
  ForwardOptions o;
  o.reasoning = cfg_.ablations.cgr;
  o.attention = cfg_.ablations.cga;
  return o;
}

void IncrementalTrainer::begin_state(int s) {
  if (s > static_cast<int>(states_.size())) throw std::out_of_range("schedule exhausted at state " + std::to_string(s));
  if (s != completed_ + 1) throw std::logic_error("states must run in order");
  Rng rng(mix_seed(cfg_.seed, 100 + static_cast<std::uint64_t>(s)));
  model_.grow(static_cast<Index>(states_[s - 1].size()), rng);
  opt_ec_.reset();
  opt_att_.reset();
  opt_crit_.reset();
}

LossRecord IncrementalTrainer::train_batch(std::span<const LabeledCloud* const> batch, int s) {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("train_batch: empty batch");
  const auto fopts = forward_options();
  const bool cgr = cfg_.ablations.cgr, cga = cfg_.ablations.cga;

  struct Work {
    std::unique_ptr<Tape> tape;
    std::unique_ptr<Binding> bind;
    ForwardPass fp;
    std::vector<Mat> g_main, g_gain;
    double ce = 0.0, cst = 0.0, gain = 0.0, reward = 0.0;
  };
  std::vector<Work> work(n);

  parallel_for(n, cfg_.threads, [&](std::size_t i) {
    auto& w = work[i];
    w.tape = std::make_unique<Tape>();
    w.bind = std::make_unique<Binding>(*w.tape, model_.params());
    w.fp = model_.forward(*w.bind, batch[i]->cloud, fopts);
  });

  if (cgr) {
    Mat feats(static_cast<Index>(n), work[0].fp.bundle.f_g.cols());
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      feats.row(static_cast<Index>(i)) = work[i].fp.bundle.f_g.value();
      labels[i] = batch[i]->label;
    }
    bank_.ema_update(batch_prototypes(feats, labels), s);
  }

  const ConsistencyOptions copts{cfg_.tau, cfg_.centered_norm};
  parallel_for(n, cfg_.threads, [&](std::size_t i) {
    auto& w = work[i];
    const int label = batch[i]->label;
    Var ce = softmax_cross_entropy(w.fp.logits, label);
    Var root = ce;
    w.ce = ce.value()(0, 0);
    if (cgr) {
      Var cst = consistency_loss(*w.bind, w.fp.bundle.f_m, bank_, label, copts);
      w.cst = cst.value()(0, 0);
      root = add(ce, scale(cst, cfg_.lambda2));
    }
    w.tape->backward(root, 1.0);
    w.g_main = w.bind->gradients();
    if (cga) {
      Var v = critic_gain(*w.bind, w.fp.bundle.f_p, w.fp.bundle.A_m, model_.dims());
      w.gain = v.value()(0, 0);
      const RowVec probs = softmax(w.fp.logits.value());
      const RowVec plain = softmax(model_.classify_value(w.fp.bundle.f_g_prime));
      w.reward = classification_reward(probs, label) + amelioration_reward(probs(label), plain(label));
      const Var stop[] = {w.fp.bundle.f_m};
      w.tape->backward(v, 1.0, stop);
      w.g_gain = w.bind->gradients();
    }
    w.fp = ForwardPass{};
    w.bind.reset();
    w.tape.reset();
  });

  const auto& params = model_.params();
  const double inv_b = 1.0 / static_cast<double>(n);
  std::vector<Mat> grads(params.size());
  auto accumulate = [&](std::size_t p, const Mat& g, double c) {
    if (g.size() == 0) return;
    if (grads[p].size() == 0) grads[p] = Mat::Zero(g.rows(), g.cols());
    grads[p] += c * g;
  };
  LossRecord rec;
  rec.samples = n;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = work[i];
    if (!std::isfinite(w.ce) || !std::isfinite(w.cst) || !std::isfinite(w.gain)) {
      std::ostringstream msg;
      msg << "non-finite loss at state " << s << " on sample " << batch[i]->id << " (clc=" << w.ce
          << ", cst=" << w.cst << ", gain=" << w.gain << ")";
      throw NumericError(msg.str());
    }
    rec.clc += w.ce * inv_b;
    rec.cst += w.cst * inv_b;
    rec.cri -= w.gain * inv_b;
    rec.reg += (w.gain - w.reward) * (w.gain - w.reward) * inv_b;
    for (std::size_t p = 0; p < params.size(); ++p) {
      const ParamGroup g = params[p].group;
      if (g != ParamGroup::Critic && p < w.g_main.size()) accumulate(p, w.g_main[p], inv_b);
      if (!cga || p >= w.g_gain.size()) continue;
      if (g == ParamGroup::Attention) accumulate(p, w.g_gain[p], -cfg_.lambda1 * inv_b);
      if (g == ParamGroup::Critic) accumulate(p, w.g_gain[p], 2.0 * (w.gain - w.reward) * inv_b);
    }
  }
  for (std::size_t p = 0; p < grads.size(); ++p) {
    if (grads[p].size() != 0 && !finite(grads[p])) {
      throw NumericError("non-finite gradient for " + params[p].name + " at state " + std::to_string(s));
    }
  }

  opt_ec_.step(model_.params(), grads);
  if (cga) {
    opt_att_.step(model_.params(), grads);
    opt_crit_.step(model_.params(), grads);
  }
  return rec;
}

EpochRecord IncrementalTrainer::train_epoch(std::span<const LabeledCloud* const> pool, int s, int epoch) {
  const auto order = epoch_permutation(cfg_.seed, s, epoch, pool.size());
  EpochRecord er;
  er.state = s;
  er.epoch = epoch;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t n = std::min(cfg_.batch_size, order.size() - start);
    std::vector<LabeledCloud> augmented(n);
    parallel_for(n, cfg_.threads, [&](std::size_t i) {
      const LabeledCloud& src = *pool[order[start + i]];
      augmented[i] = {src.id, augment(src.cloud, augment_seed(cfg_.seed, s, epoch, start + i), cfg_.augment), src.label};
    });
    std::vector<const LabeledCloud*> batch(n);
    for (std::size_t i = 0; i < n; ++i) batch[i] = &augmented[i];
    const LossRecord r = train_batch(batch, s);
    const double w = static_cast<double>(n);
    er.losses.clc += r.clc * w;
    er.losses.cst += r.cst * w;
    er.losses.cri += r.cri * w;
    er.losses.reg += r.reg * w;
    er.losses.samples += n;
  }
  if (er.losses.samples > 0) {
    const double inv = 1.0 / static_cast<double>(er.losses.samples);
    er.losses.clc *= inv;
    er.losses.cst *= inv;
    er.losses.cri *= inv;
    er.losses.reg *= inv;
  }
  er.objective = total_objective(er.losses.clc, er.losses.reg, er.losses.cri, er.losses.cst, cfg_);
  if (cfg_.ablations.wfc && s >= 2) {
    const auto old = static_cast<Index>(past_classes(s).size());
    er.wfc_factor = weight_fairness_compensation(model_.last_layer(), old, model_.classes() - old);
  }
  return er;
}

void IncrementalTrainer::finish_state(int s, std::span<const LabeledCloud* const> new_data,
                                      std::span<const LabeledCloud* const> replay) {
  if (cfg_.ablations.wfc && s >= 2) {
    const auto old = static_cast<Index>(past_classes(s).size());
    weight_fairness_compensation(model_.last_layer(), old, model_.classes() - old);
  }
  std::vector<const LabeledCloud*> pool(new_data.begin(), new_data.end());
  pool.insert(pool.end(), replay.begin(), replay.end());
  const auto preds = predict_all(pool, false);
  std::vector<RowVec> probs;
  std::vector<int> labels;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    probs.push_back(preds[i].probs);
    labels.push_back(pool[i]->label);
  }
  record_score_statistics(stats_, s, probs, labels, new_classes(s));
  const std::span<const RowVec> replay_probs(probs.data() + new_data.size(), replay.size());
  const std::span<const int> replay_labels(labels.data() + new_data.size(), replay.size());
  record_current_scores(stats_, s, replay_probs, replay_labels, past_classes(s));

  std::vector<int> seen;
  for (int i = 0; i < s; ++i) seen.insert(seen.end(), states_[i].begin(), states_[i].end());
  store_.rebalance(seen);
  const auto quotas = exemplar_quotas(store_.budget(), seen.size());
  const std::size_t new_count = new_data.size();
  const std::size_t k_new = states_[s - 1].size();
  if (store_.budget() > 0 && store_.budget() < seen.size()) {
    warnings.push_back("exemplar budget " + std::to_string(store_.budget()) + " is below the " +
                       std::to_string(seen.size()) + " classes seen after state " + std::to_string(s));
  }
  if (k_new > 0 && !quotas.empty() && 2 * quotas.front() * k_new > new_count) {
    warnings.push_back("exemplar quota " + std::to_string(quotas.front()) +
                       " per class is not small against the new-class sample count after state " + std::to_string(s));
  }
  for (std::size_t pos = 0; pos < seen.size(); ++pos) {
    const int cls = seen[pos];
    if (!new_classes(s).count(cls)) continue;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < new_data.size(); ++i) {
      if (new_data[i]->label == cls) rows.push_back(i);
    }
    std::size_t quota = quotas[pos];
    if (quota > rows.size()) {
      warnings.push_back("class " + std::to_string(cls) + " has fewer samples than its exemplar quota");
      quota = rows.size();
    }
    Mat feats(static_cast<Index>(rows.size()), model_.dims().structure_width);
    for (std::size_t r = 0; r < rows.size(); ++r) feats.row(static_cast<Index>(r)) = preds[rows[r]].global_feature;
    std::vector<std::string> ids;
    for (std::size_t r : herding_select(feats, quota)) ids.push_back(new_data[rows[r]]->id);
    store_.set_class(cls, std::move(ids));
  }
  completed_ = s;
}

Prediction IncrementalTrainer::predict(const PointCloud& pc, bool sfc) const {
  Tape tape;
  Binding bind(tape, model_.params());
  const ForwardPass fp = model_.forward(bind, pc, forward_options());
  Prediction p;
  p.probs = softmax(fp.logits.value());
  p.global_feature = fp.bundle.f_g.value();
  p.rectified = p.probs;
  if (sfc && completed_ >= 1) {
    if (static_cast<Index>(stats_.per_class().size()) != model_.classes()) {
      throw ValidationError("class count mismatch between checkpoint (" + std::to_string(model_.classes()) +
                            ") and score statistics (" + std::to_string(stats_.per_class().size()) + ")");
    }
    p.rectified = score_fairness_compensation(p.probs, stats_, completed_, new_classes(completed_));
  }
  p.label = static_cast<int>(argmax(p.rectified));
  return p;
}

std::vector<Prediction> IncrementalTrainer::predict_all(std::span<const LabeledCloud* const> samples, bool sfc) const {
  std::vector<Prediction> out(samples.size());
  parallel_for(samples.size(), cfg_.threads, [&](std::size_t i) { out[i] = predict(samples[i]->cloud, sfc); });
  return out;
}

std::vector<const LabeledCloud*> IncrementalTrainer::exemplar_pool(const IncrementalData& data) const {
  std::vector<const LabeledCloud*> out;
  for (const auto& [cls, ids] : store_.classes()) {
    for (const auto& id : ids) out.push_back(&data.train_by_id(id));
  }
  return out;
}

// ---- orchestration ----------------------------------------------------------

namespace {

std::pair<StateMetrics, StateMetrics> evaluate_both(const IncrementalTrainer& trainer, const IncrementalData& data,
                                                    std::span<const LabeledCloud* const> samples, int s) {
  const auto preds = trainer.predict_all(samples, true);
  std::vector<int> with, without, labels;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    with.push_back(preds[i].label);
    without.push_back(static_cast<int>(argmax(preds[i].probs)));
    labels.push_back(samples[i]->label);
  }
  const int k = static_cast<int>(trainer.model().classes());
  return {score_state(s, with, labels, k, data.class_names), score_state(s, without, labels, k, data.class_names)};
}

}  // namespace

StateMetrics evaluate_state(const IncrementalTrainer& trainer, const IncrementalData& data,
                            std::span<const LabeledCloud* const> samples, int s, bool sfc) {
  auto [with, without] = evaluate_both(trainer, data, samples, s);
  return sfc ? with : without;
}

RunResult run_incremental(const TrainConfig& cfg, const IncrementalData& data, const std::string& run_id,
                          const StateCallback& on_state) {
  IncrementalTrainer trainer(cfg, data.states);
  RunResult result;
  nlohmann::json schedule = nlohmann::json::array();
  for (const auto& group : data.states) {
    nlohmann::json names = nlohmann::json::array();
    for (int c : group) names.push_back(data.class_names[c]);
    schedule.push_back(names);
  }
  for (RunMetrics* m : {&result.metrics, &result.metrics_no_sfc}) {
    m->run_id = run_id;
    m->seed = cfg.seed;
    m->schedule = schedule;
  }
  result.metrics.sfc = cfg.ablations.sfc;
  result.metrics_no_sfc.sfc = false;

  for (int s = 1; s <= static_cast<int>(data.states.size()); ++s) {
    trainer.begin_state(s);
    std::vector<const LabeledCloud*> new_data;
    const auto fresh = trainer.new_classes(s);
    for (const auto& lc : data.train) {
      if (fresh.count(lc.label)) new_data.push_back(&lc);
    }
    const auto replay = trainer.exemplar_pool(data);
    std::vector<const LabeledCloud*> pool = new_data;
    pool.insert(pool.end(), replay.begin(), replay.end());
    for (int e = 1; e <= static_cast<int>(cfg.epochs); ++e) result.trace.push_back(trainer.train_epoch(pool, s, e));
    trainer.finish_state(s, new_data, replay);

    const auto test = seen_samples(data.test, data, s);
    auto [with, without] = evaluate_both(trainer, data, test, s);
    result.metrics.states.push_back(cfg.ablations.sfc ? with : without);
    result.metrics_no_sfc.states.push_back(without);
    if (on_state) on_state(trainer, data, s);
  }
  result.warnings = trainer.warnings;
  return result;
}

}  // namespace inornet
