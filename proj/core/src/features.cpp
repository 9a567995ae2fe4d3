#include "reid/features.hpp"

#include "reid/augment.hpp"
#include "reid/checkpoint.hpp"
#include "reid/errors.hpp"

namespace reid::eval {

FeatureStore extract_features(nn::ReIdModel& model, const data::DatasetManifest& manifest,
                              const ExtractOptions& options) {
  const int size = model.config().input_size;
  FeatureStore store;
  std::vector<Image> pending;
  std::vector<const data::SampleRecord*> pending_rec;
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<data::Split> splits;

  auto flush = [&] {
    if (pending.empty()) return;
    const nn::Tensor emb = model.embed_eval(model.preprocess(pending));
    for (int i = 0; i < emb.shape.n; ++i) {
      Eigen::RowVectorXd r(emb.shape.c);
      for (int k = 0; k < emb.shape.c; ++k) r(k) = emb.at(i, k);
      rows.push_back(std::move(r));
      const auto& rec = *pending_rec[static_cast<std::size_t>(i)];
      store.ids.push_back(manifest.raw_labels.at(static_cast<std::size_t>(rec.entity_id)));
      store.cameras.push_back(rec.camera_id);
      store.paths.push_back(rec.image_path);
      splits.push_back(rec.split);
    }
    pending.clear();
    pending_rec.clear();
  };

  bool has_roles = false;
  for (const auto& rec : manifest.records)
    if (rec.split == data::Split::test_query) has_roles = true;

  for (const auto& rec : manifest.records) {
    try {
      Image img = data::load_record_image(manifest, rec, options.apply_mask);
      if (img.height != size || img.width != size) img = resize_bilinear(img, size, size);
      pending.push_back(std::move(img));
      pending_rec.push_back(&rec);
    } catch (const std::exception& e) {
      store.skipped.push_back(rec.image_path + ": " + e.what());
    }
    if (static_cast<int>(pending.size()) >= options.batch_size) flush();
  }
  flush();

  store.vectors.resize(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) store.vectors.row(static_cast<Eigen::Index>(i)) = rows[i];

  // With explicit query/gallery splits, queries rank against the gallery only; otherwise leave-one-out.
  if (has_roles)
    for (const auto split : splits) {
      store.is_query.push_back(split == data::Split::test_query);
      store.is_gallery.push_back(split != data::Split::test_query);
    }
  if (store.size() == 0) throw InputError("no record of " + manifest.name + " could be decoded");
  return store;
}

FeatureStore extract_features(const std::filesystem::path& checkpoint, const data::DatasetManifest& manifest,
                              const ExtractOptions& options) {
  auto model = nn::model_from_checkpoint(nn::load_checkpoint(checkpoint));
  return extract_features(*model, manifest, options);
}

}  // namespace reid::eval
