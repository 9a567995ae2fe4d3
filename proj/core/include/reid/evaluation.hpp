#pragma once

#include "reid/losses.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace reid::eval {

using Matrix = loss::Matrix;

/// Eval embeddings plus the metadata the protocols need. Every row is both a query and a gallery
/// item unless the role flags say otherwise.
struct FeatureStore {
  std::vector<std::string> ids;
  std::vector<std::optional<int>> cameras;  ///< empty, or one entry per row
  std::vector<std::string> paths;           ///< provenance of each row (may be empty)
  std::vector<bool> is_query;               ///< empty means every row
  std::vector<bool> is_gallery;             ///< empty means every row
  Matrix vectors;                           ///< N x D
  std::vector<std::string> skipped;         ///< records that failed to decode

  std::size_t size() const noexcept { return static_cast<std::size_t>(vectors.rows()); }
  bool has_cameras() const;
  void validate() const;
};

enum class ProtocolKind { plain, single_camera, cross_camera };
const char* to_string(ProtocolKind k);
ProtocolKind parse_protocol_kind(const std::string& s);

struct QueryRanking {
  int query = 0;
  std::vector<int> order;       ///< eligible gallery rows, best first
  std::vector<bool> positive;   ///< aligned with order
};

struct RankingResult {
  ProtocolKind protocol = ProtocolKind::plain;
  std::vector<QueryRanking> queries;  ///< retained queries (>= 1 eligible item, >= 1 positive)
  int dropped_empty_gallery = 0;
  int dropped_no_positive = 0;
};

/// Pairwise cosine similarity of the row-normalized vectors.
Matrix cosine_similarity(const FeatureStore& store);

/// Orders each query's eligible gallery by descending similarity, ties by gallery row.
RankingResult rank(const FeatureStore& store, ProtocolKind protocol);

/// Orders by ascending `distance`; ties go to higher `similarity`, then lower gallery row.
RankingResult rank_by_distance(const FeatureStore& store, ProtocolKind protocol, const Matrix& distance,
                               const Matrix& similarity);

/// Mean over positive ranks r_i (1-based) of i / r_i. Throws InputError without positives.
double average_precision(const std::vector<bool>& flags);

struct Metrics {
  double mAP = 0.0;
  double r1 = 0.0, r5 = 0.0, r10 = 0.0;
  int queries = 0;
  int dropped = 0;
};

/// Throws InputError when the protocol retained no query.
Metrics metrics(const RankingResult& result);

inline double mmap(double single_map, double cross_map) { return 0.5 * (single_map + cross_map); }

struct RerankParams {
  int k1 = 20;
  int k2 = 6;
  double lambda = 0.3;
  void validate() const;
};

struct RerankOutput {
  Matrix distance;  ///< final N x N distance
  int k1_used = 0, k2_used = 0;
  std::vector<std::string> warnings;
};

/// k-reciprocal re-ranking: lambda d_orig + (1 - lambda) d_jaccard over all rows of `similarity`.
RerankOutput rerank_distance(const Matrix& similarity, const RerankParams& params);

RankingResult rerank(const FeatureStore& store, ProtocolKind protocol, const RerankParams& params,
                     std::vector<std::string>* warnings = nullptr);

enum class EvalProtocol { plain, atrw };
const char* to_string(EvalProtocol p);
EvalProtocol parse_eval_protocol(const std::string& s);

struct EvalOptions {
  EvalProtocol protocol = EvalProtocol::plain;
  bool rerank = false;
  RerankParams rerank_params;
};

/// Named result columns in report order: plain -> mAP, R@1, R@5, R@10;
/// atrw -> mmAP, mAP(s), mAP(c), R@1(s), R@1(c).
struct EvalReport {
  std::vector<std::pair<std::string, double>> columns;
  std::map<std::string, int> counts;  ///< queries and drops per protocol
  std::vector<std::string> warnings;

  double get(const std::string& name) const;
  std::string to_table() const;
  std::string to_json() const;
};

EvalReport evaluate(const FeatureStore& store, const EvalOptions& options);

}  // namespace reid::eval
