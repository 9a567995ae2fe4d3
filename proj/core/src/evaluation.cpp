#include "reid/evaluation.hpp"

#include "reid/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace reid::eval {

bool FeatureStore::has_cameras() const {
  return !cameras.empty() && std::all_of(cameras.begin(), cameras.end(), [](const auto& c) { return c.has_value(); });
}

void FeatureStore::validate() const {
  const std::size_t n = size();
  if (n == 0) throw InputError("feature store is empty");
  if (ids.size() != n) throw InputError("feature store: " + std::to_string(ids.size()) + " ids for " + std::to_string(n) + " rows");
  if (!cameras.empty() && cameras.size() != n) throw InputError("feature store: camera column has the wrong length");
  if (!is_query.empty() && is_query.size() != n) throw InputError("feature store: query flags have the wrong length");
  if (!is_gallery.empty() && is_gallery.size() != n) throw InputError("feature store: gallery flags have the wrong length");
}

const char* to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::plain: return "plain";
    case ProtocolKind::single_camera: return "single-camera";
    case ProtocolKind::cross_camera: return "cross-camera";
  }
  return "?";
}

ProtocolKind parse_protocol_kind(const std::string& s) {
  if (s == "plain") return ProtocolKind::plain;
  if (s == "single-camera" || s == "single") return ProtocolKind::single_camera;
  if (s == "cross-camera" || s == "cross") return ProtocolKind::cross_camera;
  throw ConfigError("protocol", "unknown protocol kind '" + s + "'");
}

namespace {

// Sequential accumulation: the result depends only on the two rows' values, never on where they sit
// in memory, so duplicate rows tie exactly and sim(a, b) == sim(b, a).
double row_dot(const Matrix& m, Eigen::Index a, Eigen::Index b) {
  const double* x = m.data() + a * m.cols();
  const double* y = m.data() + b * m.cols();
  double s = 0.0;
  for (Eigen::Index k = 0; k < m.cols(); ++k) s += x[k] * y[k];
  return s;
}

}  // namespace

Matrix cosine_similarity(const FeatureStore& store) {
  Matrix u = store.vectors;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double n = std::sqrt(row_dot(u, i, i));
    if (n > 0.0)
      for (Eigen::Index k = 0; k < u.cols(); ++k) u(i, k) /= n;
  }
  Matrix sim(u.rows(), u.rows());
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = i; j < u.rows(); ++j) sim(i, j) = sim(j, i) = row_dot(u, i, j);
  return sim;
}

namespace {

struct Candidate {
  int row;
  bool positive;
};

// Eligible gallery rows and positivity for one query under a protocol.
std::vector<Candidate> eligible(const FeatureStore& store, ProtocolKind protocol, int q) {
  std::vector<Candidate> out;
  const int n = static_cast<int>(store.size());
  for (int j = 0; j < n; ++j) {
    if (j == q) continue;
    if (!store.is_gallery.empty() && !store.is_gallery[static_cast<std::size_t>(j)]) continue;
    const bool same_id = store.ids[static_cast<std::size_t>(j)] == store.ids[static_cast<std::size_t>(q)];
    if (protocol != ProtocolKind::plain) {
      const bool same_cam = *store.cameras[static_cast<std::size_t>(j)] == *store.cameras[static_cast<std::size_t>(q)];
      if (protocol == ProtocolKind::single_camera && !same_cam) continue;
      if (protocol == ProtocolKind::cross_camera && same_cam && same_id) continue;
    }
    out.push_back({j, same_id});
  }
  return out;
}

template <class Less>
RankingResult rank_with(const FeatureStore& store, ProtocolKind protocol, Less less) {
  store.validate();
  if (protocol != ProtocolKind::plain && !store.has_cameras())
    throw InputError(std::string("protocol ") + to_string(protocol) + " needs a camera id on every record");
  RankingResult res;
  res.protocol = protocol;
  const int n = static_cast<int>(store.size());
  for (int q = 0; q < n; ++q) {
    if (!store.is_query.empty() && !store.is_query[static_cast<std::size_t>(q)]) continue;
    auto cands = eligible(store, protocol, q);
    if (cands.empty()) {
      ++res.dropped_empty_gallery;
      continue;
    }
    if (std::none_of(cands.begin(), cands.end(), [](const Candidate& c) { return c.positive; })) {
      ++res.dropped_no_positive;
      continue;
    }
    std::stable_sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) { return less(q, a.row, b.row); });
    QueryRanking qr;
    qr.query = q;
    for (const auto& c : cands) {
      qr.order.push_back(c.row);
      qr.positive.push_back(c.positive);
    }
    res.queries.push_back(std::move(qr));
  }
  return res;
}

}  // namespace

RankingResult rank(const FeatureStore& store, ProtocolKind protocol) {
  const Matrix sim = cosine_similarity(store);
  return rank_with(store, protocol, [&](int q, int a, int b) {
    if (sim(q, a) != sim(q, b)) return sim(q, a) > sim(q, b);
    return a < b;
  });
}

RankingResult rank_by_distance(const FeatureStore& store, ProtocolKind protocol, const Matrix& distance,
                               const Matrix& similarity) {
  const auto n = static_cast<Eigen::Index>(store.size());
  if (distance.rows() != n || distance.cols() != n || similarity.rows() != n || similarity.cols() != n)
    throw InputError("rank_by_distance: matrices must be N x N");
  return rank_with(store, protocol, [&](int q, int a, int b) {
    if (distance(q, a) != distance(q, b)) return distance(q, a) < distance(q, b);
    if (similarity(q, a) != similarity(q, b)) return similarity(q, a) > similarity(q, b);
    return a < b;
  });
}

double average_precision(const std::vector<bool>& flags) {
  double sum = 0.0;
  int hits = 0;
  for (std::size_t r = 0; r < flags.size(); ++r)
    if (flags[r]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  if (hits == 0) throw InputError("average_precision: ranking has no positive");
  return sum / hits;
}

Metrics metrics(const RankingResult& result) {
  Metrics m;
  m.dropped = result.dropped_empty_gallery + result.dropped_no_positive;
  if (result.queries.empty())
    throw InputError(std::string("empty protocol: every query was dropped under ") + to_string(result.protocol));
  auto hit_at = [](const QueryRanking& q, std::size_t k) {
    for (std::size_t i = 0; i < std::min(k, q.positive.size()); ++i)
      if (q.positive[i]) return true;
    return false;
  };
  double ap = 0.0;
  int h1 = 0, h5 = 0, h10 = 0;
  for (const auto& q : result.queries) {
    ap += average_precision(q.positive);
    h1 += hit_at(q, 1);
    h5 += hit_at(q, 5);
    h10 += hit_at(q, 10);
  }
  m.queries = static_cast<int>(result.queries.size());
  const double nq = m.queries;
  m.mAP = ap / nq;
  m.r1 = h1 / nq;
  m.r5 = h5 / nq;
  m.r10 = h10 / nq;
  return m;
}

const char* to_string(EvalProtocol p) { return p == EvalProtocol::atrw ? "atrw" : "plain"; }

EvalProtocol parse_eval_protocol(const std::string& s) {
  if (s == "plain") return EvalProtocol::plain;
  if (s == "atrw") return EvalProtocol::atrw;
  throw ConfigError("protocol", "expected 'plain' or 'atrw', got '" + s + "'");
}

double EvalReport::get(const std::string& name) const {
  for (const auto& [k, v] : columns)
    if (k == name) return v;
  throw InputError("report has no column '" + name + "'");
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "\t" : "") << columns[i].first;
  os << '\n' << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "\t" : "") << columns[i].second;
  os << '\n';
  for (const auto& [k, v] : counts) os << "# " << k << " = " << v << '\n';
  for (const auto& w : warnings) os << "# warning: " << w << '\n';
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : columns) j[k] = v;
  for (const auto& [k, v] : counts) j["counts"][k] = v;
  j["warnings"] = warnings;
  return j.dump(2);
}

EvalReport evaluate(const FeatureStore& store, const EvalOptions& options) {
  EvalReport rep;
  auto run = [&](ProtocolKind kind) {
    RankingResult r = options.rerank ? rerank(store, kind, options.rerank_params, &rep.warnings) : rank(store, kind);
    const std::string tag = to_string(kind);
    rep.counts[tag + ".queries"] = static_cast<int>(r.queries.size());
    rep.counts[tag + ".dropped_empty_gallery"] = r.dropped_empty_gallery;
    rep.counts[tag + ".dropped_no_positive"] = r.dropped_no_positive;
    return metrics(r);
  };
  if (options.protocol == EvalProtocol::plain) {
    const Metrics m = run(ProtocolKind::plain);
    rep.columns = {{"mAP", m.mAP}, {"R@1", m.r1}, {"R@5", m.r5}, {"R@10", m.r10}};
  } else {
    const Metrics s = run(ProtocolKind::single_camera);
    const Metrics c = run(ProtocolKind::cross_camera);
    rep.columns = {{"mmAP", mmap(s.mAP, c.mAP)}, {"mAP(s)", s.mAP}, {"mAP(c)", c.mAP}, {"R@1(s)", s.r1}, {"R@1(c)", c.r1}};
  }
  auto last = std::unique(rep.warnings.begin(), rep.warnings.end());
  rep.warnings.erase(last, rep.warnings.end());
  return rep;
}

}  // namespace reid::eval
