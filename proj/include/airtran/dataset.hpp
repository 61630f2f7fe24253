#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace airtran {

using RowIndex = std::uint64_t;

struct LabeledPair {
  RowIndex query_row = 0;
  RowIndex doc_row = 0;
  int label = 0;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

/// One relevant document plus k-1 sampled irrelevant ones for a query.
struct CandidateGroup {
  RowIndex query_row = 0;
  RowIndex relevant_row = 0;
  std::vector<RowIndex> irrelevant_rows;
  std::size_t first_pair = 0;  ///< offset of this group's block in RankingDataset::pairs()

  std::size_t size() const noexcept { return irrelevant_rows.size() + 1; }
  friend bool operator==(const CandidateGroup&, const CandidateGroup&) = default;
};

struct RelevantPair {
  RowIndex query_row = 0;
  RowIndex doc_row = 0;
};

/// Labeled (query, doc) pairs grouped per query. Immutable once built; the
/// constructor enforces one relevant per group, no duplicate irrelevants and
/// a shared candidate size.
class RankingDataset {
 public:
  static constexpr std::size_t kDefaultMaxCandidateSize = 10;

  RankingDataset() = default;
  explicit RankingDataset(std::vector<LabeledPair> pairs,
                          std::size_t max_candidate_size = kDefaultMaxCandidateSize);

  const std::vector<LabeledPair>& pairs() const noexcept { return pairs_; }
  const std::vector<CandidateGroup>& groups() const noexcept { return groups_; }
  std::size_t query_count() const noexcept { return groups_.size(); }
  std::size_t pair_count() const noexcept { return pairs_.size(); }
  std::size_t candidate_size() const noexcept { return candidate_size_; }
  bool empty() const noexcept { return pairs_.empty(); }

  /// Throws Error{Shape} if any index reaches past the given row counts.
  void check_bounds(std::size_t query_rows, std::size_t doc_rows) const;

  friend bool operator==(const RankingDataset&, const RankingDataset&) = default;

 private:
  std::vector<LabeledPair> pairs_;
  std::vector<CandidateGroup> groups_;
  std::size_t candidate_size_ = 0;
};

/// JSON-lines, one {"q":int,"d":int,"y":0|1} object per line.
RankingDataset read_manifest(std::istream& source,
                             std::size_t max_candidate_size = RankingDataset::kDefaultMaxCandidateSize);
RankingDataset load_manifest(const std::filesystem::path& path,
                             std::size_t max_candidate_size = RankingDataset::kDefaultMaxCandidateSize);
std::string format_manifest(const RankingDataset& dataset);
void save_manifest(const RankingDataset& dataset, const std::filesystem::path& path);

/// Relevant (query, doc) pairs as JSON-lines {"q":int,"d":int}; lines carrying
/// "y":0 are skipped so a full manifest is also accepted.
std::vector<RelevantPair> read_relevant_pairs(std::istream& source);
std::vector<RelevantPair> load_relevant_pairs(const std::filesystem::path& path);
std::string format_relevant_pairs(const std::vector<RelevantPair>& pairs);

struct SamplingOptions {
  std::size_t candidate_size = 10;
  std::uint64_t seed = 0;
  std::size_t query_cap = 1000;  ///< 0 means no cap
};

/// Builds candidate groups: per query one relevant document and k-1 distinct
/// irrelevant ones drawn uniformly from the pool minus every document known
/// to be relevant to that query. Queries beyond the cap are dropped through a
/// seeded shuffle; selected queries come out in ascending order.
RankingDataset sample_candidates(const std::vector<RelevantPair>& relevant_pairs, std::size_t doc_pool_size,
                                 const SamplingOptions& options);

struct TruthEntry {
  std::string model_id;
  double fine_tune_score = 0.0;
};

/// Ground-truth fine-tuning results for a model pool.
struct ModelPoolTruth {
  std::vector<TruthEntry> entries;

  void validate() const;
};

ModelPoolTruth parse_truth(const std::string& json_text);
ModelPoolTruth load_truth(const std::filesystem::path& path);
std::string format_truth(const ModelPoolTruth& truth);

}  // namespace airtran
