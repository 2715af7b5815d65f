#include "rispls/training.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>

#include "rispls/csv.hpp"

namespace rispls {

namespace {

using clk = std::chrono::steady_clock;

double seconds_since(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

std::vector<ChannelRealization> gather(const std::vector<ChannelRealization>& all,
                                       std::span<const std::size_t> idx) {
  std::vector<ChannelRealization> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace

double mean_hard_see(const TwoStageModel& model,
                     std::span<const ChannelRealization> samples, HeadKind head,
                     ModelFlags flags, double p_max, double p_c,
                     std::size_t batch_size) {
  NoGradGuard ng;
  double acc = 0;
  for (std::size_t off = 0; off < samples.size(); off += batch_size) {
    std::size_t n = std::min(batch_size, samples.size() - off);
    ModelForward fwd = model.forward(samples.subspan(off, n), head, flags, p_max);
    for (std::size_t i = 0; i < n; ++i)
      acc += see(samples[off + i], fwd.designs[i], p_c).see;
  }
  return acc / static_cast<double>(samples.size());
}

TrainReport train(const TrainConfig& cfg) {
  cfg.validate();
  Dataset ds = read_dataset(cfg.dataset);
  if (ds.samples.empty()) throw config_error("train: empty dataset");
  if (cfg.val_samples >= ds.samples.size())
    throw config_error("train: validation split >= dataset size");

  std::size_t n_train = ds.samples.size() - cfg.val_samples;
  std::span<const ChannelRealization> val(ds.samples.data() + n_train,
                                          cfg.val_samples);
  double p_max = ds.cfg.p_max_watt();
  double p_c = ds.cfg.p_c_watt;

  TwoStageModel model = TwoStageModel::init(ds.cfg.n_t, Rng(cfg.seed).split(7).next_u64());
  AdamConfig acfg;
  acfg.lr = cfg.lr;
  AdamState adam = AdamState::init(model.params, acfg);
  ModelFlags flags{cfg.residual_on, cfg.two_stage_on};

  TrainReport report;
  double best_val = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_values;
  auto t_start = clk::now();

  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t_epoch = clk::now();
    Rng shuffle_rng = Rng(cfg.seed).split(1000 + epoch);
    for (std::size_t i = n_train; i > 1; --i)
      std::swap(order[i - 1],
                order[shuffle_rng.next_u64() % i]);

    double loss_acc = 0;
    std::size_t batches = 0;
    for (std::size_t off = 0; off < n_train; off += cfg.batch_size) {
      std::size_t n = std::min(cfg.batch_size, n_train - off);
      std::vector<ChannelRealization> batch =
          gather(ds.samples, std::span<const std::size_t>(order.data() + off, n));
      ModelForward fwd = model.forward(batch, cfg.head, flags, p_max);
      LossTensors lt =
          training_loss_graph(batch, fwd.csi, fwd.s2.design, cfg.gamma, p_c);
      backward(lt.mean);
      adam_step(model.params, adam);
      loss_acc += lt.mean->values[0];
      ++batches;
    }

    double val_see = val.empty() ? 0.0
                                 : mean_hard_see(model, val, cfg.head, flags, p_max,
                                                 p_c, cfg.batch_size);
    EpochRow row;
    row.epoch = epoch;
    row.mean_loss = loss_acc / static_cast<double>(batches);
    row.val_see = val_see;
    row.wall_seconds = seconds_since(t_epoch);
    report.epochs.push_back(row);

    if (val_see > best_val || val.empty()) {
      best_val = val_see;
      report.best_epoch = epoch;
      best_values.clear();
      for (const auto& [name, t] : model.params.items())
        best_values.push_back(t->values);
    }
  }

  // restore the best-validation weights before saving
  if (!best_values.empty()) {
    std::size_t i = 0;
    for (const auto& [name, t] : model.params.items()) t->values = best_values[i++];
  }
  report.best_val_see = best_val;
  report.total_seconds = seconds_since(t_start);

  if (!cfg.checkpoint.empty()) {
    CheckpointMeta meta;
    meta.n_t = ds.cfg.n_t;
    meta.l = ds.cfg.l;
    meta.k = ds.cfg.k;
    meta.m = ds.cfg.m;
    meta.head = cfg.head;
    save_checkpoint(cfg.checkpoint, model, meta);
  }
  if (!cfg.log_csv.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : report.epochs)
      rows.push_back({std::to_string(r.epoch), csv_double(r.mean_loss),
                      csv_double(r.val_see), csv_double(r.wall_seconds)});
    write_csv(cfg.log_csv, {"epoch", "mean_loss", "val_see", "wall_seconds"}, rows);
  }
  return report;
}

EvalReport evaluate(const TwoStageModel& model, const Dataset& ds, HeadKind head,
                    ModelFlags flags, std::size_t batch_size, double p_max_override,
                    std::size_t limit) {
  if (!ds.oracle_see)
    throw usage_error("evaluate: dataset has no oracle labels; run label first");
  std::size_t n = ds.samples.size();
  if (limit > 0 && limit < n) n = limit;
  double p_max = p_max_override > 0 ? p_max_override : ds.cfg.p_max_watt();
  double p_c = ds.cfg.p_c_watt;

  EvalReport rep;
  rep.rows.resize(n);
  NoGradGuard ng;
  auto t0 = clk::now();
  for (std::size_t off = 0; off < n; off += batch_size) {
    std::size_t b = std::min(batch_size, n - off);
    std::span<const ChannelRealization> batch(ds.samples.data() + off, b);
    ModelForward fwd = model.forward(batch, head, flags, p_max);
    for (std::size_t i = 0; i < b; ++i) {
      const auto& ch = ds.samples[off + i];
      EvalRow& row = rep.rows[off + i];
      row.sample = off + i;
      row.see = see(ch, fwd.designs[i], p_c).see;
      row.oracle_see = (*ds.oracle_see)[off + i];
      row.ratio = row.oracle_see > 0 ? row.see / row.oracle_see : 0.0;
      double power = design_power(fwd.designs[i]);
      bool phases_ok = true;
      for (double p : fwd.designs[i].phi)
        if (!(p >= 0.0 && p < kTwoPi)) phases_ok = false;
      row.feasible = power <= p_max * (1.0 + 1e-9) && phases_ok;
      if (!row.feasible) ++rep.violations;
    }
  }
  double wall = seconds_since(t0);

  double see_acc = 0, ratio_acc = 0;
  std::vector<double> ratios;
  ratios.reserve(n);
  for (const auto& r : rep.rows) {
    see_acc += r.see;
    ratio_acc += r.ratio;
    ratios.push_back(r.ratio);
  }
  rep.mean_see = n ? see_acc / static_cast<double>(n) : 0;
  rep.mean_ratio = n ? ratio_acc / static_cast<double>(n) : 0;
  std::sort(ratios.begin(), ratios.end());
  rep.median_ratio = n ? (n % 2 ? ratios[n / 2]
                                : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]))
                       : 0;
  rep.mean_inference_ms = n ? 1e3 * wall / static_cast<double>(n) : 0;
  return rep;
}

}  // namespace rispls
