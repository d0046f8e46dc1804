#include "rareda/trainer.hpp"

#include <cmath>
#include <numeric>

#include "rareda/losses.hpp"

namespace rareda {

AdamSettings adam_settings(const TrainConfig& cfg) {
  AdamSettings s;
  s.learning_rate = cfg.learning_rate;
  s.beta1 = cfg.adam_beta1;
  s.beta2 = cfg.adam_beta2;
  s.epsilon = cfg.adam_epsilon;
  s.l2 = cfg.l2;
  s.l2_on_bias = cfg.l2_on_bias;
  s.head_lr_multiplier = cfg.head_lr_multiplier;
  s.discriminator_lr_multiplier = cfg.discriminator_lr_multiplier;
  s.update_discriminator = uses_discriminator(cfg.method);
  return s;
}

double grl_coefficient(const TrainConfig& cfg, double progress) {
  if (cfg.grl_schedule == GrlSchedule::constant) return cfg.grl_scale;
  return cfg.grl_scale * (2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0);
}

namespace {

std::vector<std::size_t> iota_rows(std::size_t begin, std::size_t count) {
  std::vector<std::size_t> v(count);
  std::iota(v.begin(), v.end(), begin);
  return v;
}

Matrix row_block(const Matrix& m, std::size_t begin, std::size_t count) {
  return gather_rows(m, iota_rows(begin, count));
}

void add_block(Matrix& dst, std::size_t begin, double alpha, const Matrix& src) {
  for (std::size_t i = 0; i < src.rows(); ++i) {
    auto d = dst.row(begin + i);
    auto s = src.row(i);
    for (std::size_t j = 0; j < s.size(); ++j) d[j] += alpha * s[j];
  }
}

}  // namespace

BatchLoss batch_loss_and_grad(ModelParams& params, const BatchPair& batch, const TrainConfig& cfg,
                              double grl_scale, bool compute_grad) {
  const Method method = cfg.method;
  const std::size_t ns = batch.source_x.rows();
  const std::size_t nt = batch.target_x.rows();
  const bool coral = method == Method::deercoral;
  const bool dann = uses_discriminator(method);

  DiscriminatorRouting routing;
  if (dann) routing = discriminator_routing(batch, cfg.source_real_policy);
  const bool has_domain_term = dann && !routing.labels.empty();
  const bool forward_target = (coral || (has_domain_term && !routing.target_rows.empty())) && nt > 0;
  if (coral && nt < 2) throw Error("deercoral batch needs at least 2 target rows");

  const Matrix x = forward_target ? vstack(batch.source_x, batch.target_x) : batch.source_x;

  std::vector<std::size_t> c_rows = iota_rows(0, ns);
  if (coral && cfg.coral_space == CoralSpace::logits) {
    auto t = iota_rows(ns, nt);
    c_rows.insert(c_rows.end(), t.begin(), t.end());
  }
  std::optional<std::vector<std::size_t>> d_rows;
  if (has_domain_term) {
    d_rows = routing.source_rows;
    for (std::size_t r : routing.target_rows) d_rows->push_back(ns + r);
  }

  const ForwardTrace trace = forward(params, x, c_rows, d_rows);
  const Matrix& logits = trace.classifier->logits();

  BatchLoss out;
  const LossValue ce = cross_entropy(row_block(logits, 0, ns), batch.source_labels);
  out.classification = ce.value;
  Matrix d_logits(c_rows.size(), logits.cols());
  add_block(d_logits, 0, 1.0, ce.dlogits);

  std::optional<Matrix> d_features;
  if (coral) {
    if (cfg.coral_space == CoralSpace::logits) {
      const CoralValue cv = coral_loss(row_block(logits, 0, ns), row_block(logits, ns, nt));
      out.coral = cv.value;
      add_block(d_logits, 0, cfg.coral_lambda, cv.d_source);
      add_block(d_logits, ns, cfg.coral_lambda, cv.d_target);
    } else {
      const Matrix& f = trace.feature_matrix();
      const CoralValue cv = coral_loss(row_block(f, 0, ns), row_block(f, ns, nt));
      out.coral = cv.value;
      d_features = Matrix(f.rows(), f.cols());
      add_block(*d_features, 0, cfg.coral_lambda, cv.d_source);
      add_block(*d_features, ns, cfg.coral_lambda, cv.d_target);
    }
  }

  std::optional<LossValue> domain;
  Matrix d_disc;
  if (has_domain_term) {
    domain = domain_confusion(trace.discriminator->logits(), routing.labels);
    out.domain = domain->value;
    d_disc = cfg.domain_weight * domain->dlogits;
    const auto pred = [&] {
      std::vector<std::size_t> p;
      const Matrix& dl = trace.discriminator->logits();
      for (std::size_t i = 0; i < dl.rows(); ++i) p.push_back(dl(i, 1) > dl(i, 0) ? 1 : 0);
      return p;
    }();
    for (std::size_t i = 0; i < routing.labels.size(); ++i) {
      const auto want = static_cast<std::size_t>(routing.labels[i]);
      const bool correct = pred[i] == want;
      if (routing.labels[i] == DomainLabel::source) {
        ++out.disc_total_source;
        out.disc_correct_source += correct ? 1 : 0;
      } else {
        ++out.disc_total_target;
        out.disc_correct_target += correct ? 1 : 0;
      }
    }
  }

  out.total = composite_dann(ce, dann ? domain : std::nullopt, cfg.domain_weight);
  if (coral) out.total = composite_coral(ce, *out.coral, cfg.coral_lambda);

  if (compute_grad) {
    BackwardInputs in;
    in.classifier = &d_logits;
    in.discriminator = has_domain_term ? &d_disc : nullptr;
    in.features = d_features ? &*d_features : nullptr;
    in.grl_scale = grl_scale;
    backward(params, trace, in);
  }
  return out;
}

std::size_t select_epoch(const std::vector<EpochRecord>& history, double tolerance) {
  if (history.empty()) throw Error("select_epoch: empty history");
  double best_other = -1.0;
  for (const auto& h : history) {
    const auto& m = h.metrics.at(Split::trans_val);
    if (!m.other_macro || !m.rare_accuracy) {
      throw Error("select_epoch: trans_val needs rare and other-class samples");
    }
    best_other = std::max(best_other, *m.other_macro);
  }
  std::size_t chosen = history.size();
  double chosen_rare = -1.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& m = history[i].metrics.at(Split::trans_val);
    if (*m.other_macro < best_other - tolerance) continue;
    if (*m.rare_accuracy > chosen_rare) {
      chosen = i;
      chosen_rare = *m.rare_accuracy;
    }
  }
  return chosen;
}

std::vector<std::pair<std::string, double>> metric_snapshot(const RunMetrics& m) {
  std::vector<std::pair<std::string, double>> out;
  for (Split s : kAllSplits) {
    if (!m.has(s)) continue;
    const auto& sm = m.at(s);
    const std::string prefix(to_string(s));
    if (sm.rare_accuracy) out.emplace_back(prefix + ".rare_acc", *sm.rare_accuracy);
    if (sm.other_macro) out.emplace_back(prefix + ".other_macro", *sm.other_macro);
    out.emplace_back(prefix + ".overall", sm.overall);
  }
  return out;
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  const DomainOrg org =
      build_domains(ds, cfg.method, cfg.synthetic_count, cfg.oversample_factor, cfg.seed);
  ModelParams params =
      init_model(cfg.network(ds.feature_dim, ds.class_count), derive_seed(cfg.seed, "model"));
  AdamState adam(params);
  const AdamSettings settings = adam_settings(cfg);
  RngStream jitter_rng(derive_seed(cfg.seed, "train.jitter"));

  const std::size_t per_epoch = PairedSampler(ds, org, cfg.batch_size, cfg.seed, 1).batch_count();
  const double total_steps = static_cast<double>(per_epoch * cfg.epochs);

  TrainResult result;
  std::vector<ModelParams> snapshots;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    PairedSampler sampler(ds, org, cfg.batch_size, cfg.seed, epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    double sum_c = 0.0, sum_total = 0.0, sum_d = 0.0, sum_coral = 0.0;
    std::size_t n_batches = 0, n_d = 0, n_coral = 0;
    std::size_t src_ok = 0, src_n = 0, tgt_ok = 0, tgt_n = 0;
    std::size_t batch_index = 0;
    while (auto batch = sampler.next()) {
      ++batch_index;
      const double grl = grl_coefficient(cfg, static_cast<double>(step) / total_steps);
      rec.grl_scale = grl;
      if (cfg.feature_jitter > 0.0) {
        for (Matrix* m : {&batch->source_x, &batch->target_x})
          for (double& v : m->values()) v += jitter_rng.normal(0.0, cfg.feature_jitter);
      }
      const std::string where =
          " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index);
      params.zero_grad();
      BatchLoss bl;
      try {
        bl = batch_loss_and_grad(params, *batch, cfg, grl);
        if (!std::isfinite(bl.total)) throw NonFiniteError("non-finite loss");
        adam.step(params, settings);
      } catch (const NonFiniteError& e) {
        throw TrainingDiverged(std::string(e.what()) + where);
      }
      ++step;
      if (hooks.on_step) hooks.on_step(step, params);

      ++n_batches;
      sum_c += bl.classification;
      sum_total += bl.total;
      if (bl.domain) {
        sum_d += *bl.domain;
        ++n_d;
      }
      if (bl.coral) {
        sum_coral += *bl.coral;
        ++n_coral;
      }
      src_ok += bl.disc_correct_source;
      src_n += bl.disc_total_source;
      tgt_ok += bl.disc_correct_target;
      tgt_n += bl.disc_total_target;
    }
    if (n_batches == 0) throw Error("training: source domain yields no batches");
    rec.classification_loss = sum_c / static_cast<double>(n_batches);
    rec.total_loss = sum_total / static_cast<double>(n_batches);
    if (n_d > 0) rec.domain_loss = sum_d / static_cast<double>(n_d);
    if (n_coral > 0) rec.coral_loss = sum_coral / static_cast<double>(n_coral);
    if (src_n > 0 && tgt_n > 0) {
      rec.discriminator_accuracy =
          0.5 * (static_cast<double>(src_ok) / static_cast<double>(src_n) +
                 static_cast<double>(tgt_ok) / static_cast<double>(tgt_n));
    }
    rec.metrics = evaluate_all(params, ds);
    result.history.push_back(std::move(rec));
    snapshots.push_back(params);
  }

  const std::size_t chosen = select_epoch(result.history, cfg.selection_tolerance);
  result.selected_epoch = result.history[chosen].epoch;
  result.best.params = std::move(snapshots[chosen]);
  result.best.params.zero_grad();
  result.best.epoch = result.selected_epoch;
  result.best.config_hash = cfg.hash();
  result.best.metrics = metric_snapshot(result.history[chosen].metrics);
  return result;
}

}  // namespace rareda
