#include "reid/trainer.hpp"

#include "reid/augment.hpp"
#include "reid/dve_loss.hpp"
#include "reid/errors.hpp"
#include "reid/evaluation.hpp"
#include "reid/features.hpp"
#include "reid/jsonl.hpp"
#include "reid/losses.hpp"
#include "reid/optim.hpp"
#include "reid/rng.hpp"
#include "reid/sampler.hpp"
#include "reid/warp.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace reid::train {
namespace fs = std::filesystem;
using loss::Matrix;

std::pair<data::DatasetManifest, data::DatasetManifest> split_validation(const data::DatasetManifest& manifest,
                                                                         double fraction, std::uint64_t seed) {
  if (fraction <= 0.0) return {manifest, data::subset_entities(manifest, {})};
  const int n = manifest.num_entities;
  int held = std::max(2, static_cast<int>(std::lround(fraction * n)));
  if (n - held < 2) throw InputError("too few identities (" + std::to_string(n) + ") to hold out a validation split");
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(seed, {0x7a1}));
  shuffle(ids.begin(), ids.end(), rng);
  std::vector<int> val(ids.begin(), ids.begin() + held), keep(ids.begin() + held, ids.end());
  std::sort(val.begin(), val.end());
  std::sort(keep.begin(), keep.end());
  return {data::subset_entities(manifest, keep), data::subset_entities(manifest, val)};
}

double validation_map(nn::ReIdModel& model, const data::DatasetManifest& manifest, bool apply_mask) {
  eval::ExtractOptions opt;
  opt.apply_mask = apply_mask;
  const auto store = eval::extract_features(model, manifest, opt);
  return eval::metrics(eval::rank(store, eval::ProtocolKind::plain)).mAP;
}

namespace {

Matrix to_matrix(const nn::Tensor& t) {
  Matrix m(t.shape.n, static_cast<Eigen::Index>(t.shape.sample()));
  for (int i = 0; i < t.shape.n; ++i)
    for (std::size_t k = 0; k < t.shape.sample(); ++k) m(i, static_cast<Eigen::Index>(k)) = t.sample(i)[k];
  return m;
}

nn::Tensor to_tensor(const Matrix& m, nn::Shape shape) {
  nn::Tensor t(shape);
  for (int i = 0; i < shape.n; ++i)
    for (std::size_t k = 0; k < shape.sample(); ++k) t.sample(i)[k] = static_cast<float>(m(i, static_cast<Eigen::Index>(k)));
  return t;
}

// Descriptor field of one sample as (h w) x D.
Matrix field(const nn::Tensor& desc, int n) {
  const auto& s = desc.shape;
  Matrix m(static_cast<Eigen::Index>(s.plane()), s.c);
  const float* p = desc.sample(n);
  for (int c = 0; c < s.c; ++c)
    for (std::size_t u = 0; u < s.plane(); ++u) m(static_cast<Eigen::Index>(u), c) = p[static_cast<std::size_t>(c) * s.plane() + u];
  return m;
}

void add_field(nn::Tensor& grad, int n, const Matrix& g) {
  const auto& s = grad.shape;
  float* p = grad.sample(n);
  for (int c = 0; c < s.c; ++c)
    for (std::size_t u = 0; u < s.plane(); ++u)
      p[static_cast<std::size_t>(c) * s.plane() + u] += static_cast<float>(g(static_cast<Eigen::Index>(u), c));
}

struct StepParts {
  loss::LossBreakdown breakdown;
  int anchors_without_positive = 0;
};

}  // namespace

TrainResult train(const TrainConfig& config_in, const data::DatasetManifest& manifest, const fs::path& out_dir,
                  const TrainOptions& options) {
  TrainConfig config = config_in;
  auto [train_set, val_set] = split_validation(manifest, config.val_fraction, config.seed);
  config.model.num_identities = train_set.num_entities;
  config.validate();

  const bool use_dve = config.losses.dve && config.weights.lambda_dve > 0.0;
  const bool use_reid = config.losses.reid && config.weights.lambda_reid > 0.0;
  const int k = config.instances_per_identity;
  const data::BatchPlan plan{config.batch_size / k, k};
  std::optional<data::PKSampler> sampler;
  if (config.identity_sampler) sampler.emplace(train_set, plan, derive_seed(config.seed, {0x5e}));

  fs::create_directories(out_dir / "checkpoints");
  config.to_kv().save(out_dir / "config.txt");

  TrainResult result;
  result.model = std::make_unique<nn::ReIdModel>(config.model);
  nn::ReIdModel& model = *result.model;
  nn::Sgd sgd(model.parameter_set(), {config.momentum, config.weight_decay});
  result.last_checkpoint = out_dir / "checkpoints" / "last.ckpt";
  result.best_checkpoint = out_dir / "checkpoints" / "best.ckpt";

  int start_epoch = 0;
  std::vector<std::map<std::string, double>> history;
  if (options.resume && fs::exists(result.last_checkpoint)) {
    const nn::Checkpoint ck = nn::load_checkpoint(result.last_checkpoint);
    nn::restore(ck, model, &sgd);
    start_epoch = ck.epoch;
    history = ck.metric_history;
    for (const auto& h : history)
      if (h.count("val_map") && (!result.best_val_map || h.at("val_map") > *result.best_val_map))
        result.best_val_map = h.at("val_map");
  }

  JsonlLog step_log(out_dir / "train_log.jsonl", start_epoch > 0);
  JsonlLog epoch_log(out_dir / "epochs.jsonl", start_epoch > 0);

  auto snapshot = [&](int epochs_done) {
    nn::Checkpoint ck = nn::capture(model, &sgd);
    ck.train_config = config.to_kv();
    ck.epoch = epochs_done;
    ck.entity_labels = train_set.raw_labels;
    ck.metric_history = history;
    return ck;
  };

  const double tau = config.temperature();
  long long step = 0;
  for (int e = 0; e < start_epoch; ++e)
    step += static_cast<long long>(sampler ? sampler->epoch(e).size()
                                           : data::random_batches(train_set.records.size(), config.batch_size,
                                                                  derive_seed(config.seed, {0xba}), e).size());

  const int end_epoch = options.stop_after ? std::min(config.epochs, *options.stop_after) : config.epochs;
  for (int epoch = start_epoch; epoch < end_epoch; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [lr_b, lr_h] = lr_at(epoch, config);
    const bool frozen = epoch < config.freeze_epochs;
    const auto batches = sampler ? sampler->epoch(epoch)
                                 : data::random_batches(train_set.records.size(), config.batch_size,
                                                        derive_seed(config.seed, {0xba}), epoch);
    EpochSummary summary;
    summary.epoch = epoch;
    summary.lr_backbone = lr_b;
    summary.lr_heads = lr_h;
    summary.backbone_frozen = frozen;

    for (std::size_t bi = 0; bi < batches.size(); ++bi, ++step) {
      const auto& batch = batches[bi];
      const int n = static_cast<int>(batch.size());
      std::vector<Image> images, warped;
      std::vector<int> ids, sides;
      std::vector<warp::WarpField> fields;
      for (int i = 0; i < n; ++i) {
        const auto& rec = train_set.records[batch[static_cast<std::size_t>(i)]];
        const std::uint64_t s = derive_seed(config.seed, {static_cast<std::uint64_t>(epoch), bi, static_cast<std::uint64_t>(i)});
        auto aug = data::augment(train_set, rec, config.augment, s, config.apply_mask);
        ids.push_back(rec.entity_id);
        sides.push_back(static_cast<int>(aug.orientation));
        if (use_dve) {
          auto w = warp::sample_warp(derive_seed(s, {0xd7e}), config.warp_strength);
          warped.push_back(warp::warp_image(aug.image, w.field));
          fields.push_back(w.field);
        }
        images.push_back(std::move(aug.image));
      }
      const nn::Tensor x = model.preprocess(images);
      nn::Tensor xw;
      if (use_dve) xw = model.preprocess(warped);

      model.reseed_dropout(derive_seed(config.seed, {static_cast<std::uint64_t>(epoch), bi, 0xd0}));
      const nn::ForwardOutput out = model.forward(x, nn::Mode::train, use_dve ? &xw : nullptr, use_dve);

      loss::LossParts parts;
      nn::ForwardGrads grads;
      StepParts sp;
      if (config.losses.id) {
        Matrix g;
        parts.id = loss::id_loss(to_matrix(out.id_logits), ids, config.label_smoothing, &g);
        grads.id_logits = to_tensor(g, out.id_logits.shape);
      }
      if (config.losses.lr) {
        loss::Vector g;
        const Matrix z = to_matrix(out.lr_logit);
        parts.lr = loss::lr_loss(z.col(0), sides, &g);
        grads.lr_logit = to_tensor(g, out.lr_logit.shape);
      }
      Matrix g_reid;
      if (use_reid) {
        const auto r = loss::batch_circle_loss(to_matrix(out.embedding), ids, config.circle, &g_reid);
        parts.reid = r.loss;
        sp.anchors_without_positive = r.anchors_without_positive;
      }
      if (use_dve) {
        const auto& ds = out.descriptors.shape;
        grads.descriptors = nn::Tensor(ds);
        Rng pick(derive_seed(config.seed, {static_cast<std::uint64_t>(epoch), bi, 0xa0}));
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
          std::vector<int> others;
          for (int j = 0; j < n; ++j)
            if (ids[static_cast<std::size_t>(j)] != ids[static_cast<std::size_t>(i)]) others.push_back(j);
          const int aux = others.empty() ? i : others[uniform_index(pick, others.size())];
          loss::DveInputs in;
          in.height = ds.h;
          in.width = ds.w;
          in.phi_x = field(out.descriptors, i);
          in.phi_xprime = field(out.descriptors, n + i);
          in.phi_aux = field(out.descriptors, aux);
          in.warp = warp::warp_grid(fields[static_cast<std::size_t>(i)], ds.h, ds.w);
          in.temperature = tau;
          loss::DveGrads g;
          total += loss::dve_loss(in, &g).loss;
          const double scale = config.weights.lambda_dve / n;
          add_field(grads.descriptors, i, g.phi_x * scale);
          add_field(grads.descriptors, n + i, g.phi_xprime * scale);
          add_field(grads.descriptors, aux, g.phi_aux * scale);
        }
        parts.dve = total / n;
      }

      try {
        sp.breakdown = loss::total_loss(parts, config.weights);
      } catch (const NonFiniteError& err) {
        std::ofstream dump(out_dir / "nonfinite_batch.txt");
        for (auto idx : batch) dump << train_set.records[idx].image_path << '\n';
        std::string msg = std::string(err.what()) + " at epoch " + std::to_string(epoch) + " step " +
                          std::to_string(step) + "; batch:";
        for (auto idx : batch) msg += " " + train_set.records[idx].image_path;
        throw NonFiniteError(msg);
      }

      if (use_reid) grads.embedding = to_tensor(g_reid * config.weights.lambda_reid, out.embedding.shape);
      model.zero_grad();
      model.backward(grads, !frozen);
      sgd.step(lr_b, lr_h, frozen);

      const auto& b = sp.breakdown;
      step_log.write({{"step", step},
                      {"epoch", static_cast<long long>(epoch)},
                      {"L_ID", b.id},
                      {"L_LR", b.lr},
                      {"L_reID", b.reid},
                      {"L_DVE", b.dve},
                      {"total", b.total}});
      summary.mean_id += b.id;
      summary.mean_lr += b.lr;
      summary.mean_reid += b.reid;
      summary.mean_dve += b.dve;
      summary.mean_total += b.total;
      summary.anchors_without_positive += sp.anchors_without_positive;
    }
    const double nb = std::max<std::size_t>(1, batches.size());
    summary.mean_id /= nb;
    summary.mean_lr /= nb;
    summary.mean_reid /= nb;
    summary.mean_dve /= nb;
    summary.mean_total /= nb;

    std::map<std::string, double> h{{"epoch", epoch}, {"loss", summary.mean_total}};
    bool improved = false;
    if (!val_set.records.empty()) {
      summary.val_map = validation_map(model, val_set, config.apply_mask);
      h["val_map"] = *summary.val_map;
      improved = !result.best_val_map || *summary.val_map > *result.best_val_map;
      if (improved) result.best_val_map = summary.val_map;
    }
    history.push_back(h);
    summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const nn::Checkpoint ck = snapshot(epoch + 1);
    nn::save_checkpoint(result.last_checkpoint, ck);
    if (improved || (val_set.records.empty() && epoch + 1 == config.epochs)) nn::save_checkpoint(result.best_checkpoint, ck);

    JsonRecord rec{{"epoch", static_cast<long long>(epoch)},
                   {"lr_backbone", lr_b},
                   {"lr_heads", lr_h},
                   {"backbone_frozen", frozen},
                   {"L_ID", summary.mean_id},
                   {"L_LR", summary.mean_lr},
                   {"L_reID", summary.mean_reid},
                   {"L_DVE", summary.mean_dve},
                   {"total", summary.mean_total},
                   {"anchors_without_positive", static_cast<long long>(summary.anchors_without_positive)}};
    if (summary.val_map) rec.emplace_back("val_mAP", *summary.val_map);
    epoch_log.write(rec);
    result.epochs.push_back(summary);
    if (options.on_epoch) options.on_epoch(summary);
  }
  result.train_manifest = std::move(train_set);
  result.val_manifest = std::move(val_set);
  return result;
}

}  // namespace reid::train
