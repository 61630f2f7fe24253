#include "airtran/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "airtran/error.hpp"
#include "airtran/fs_util.hpp"
#include "airtran/random.hpp"

namespace airtran {

using nlohmann::json;

RankingDataset::RankingDataset(std::vector<LabeledPair> pairs, std::size_t max_candidate_size)
    : pairs_(std::move(pairs)) {
  std::unordered_set<RowIndex> finished_queries;
  std::size_t begin = 0;
  while (begin < pairs_.size()) {
    const RowIndex query = pairs_[begin].query_row;
    if (finished_queries.count(query) != 0) {
      throw Error(ErrorKind::Schema, "lines for query " + std::to_string(query) + " are not contiguous");
    }
    std::size_t end = begin;
    while (end < pairs_.size() && pairs_[end].query_row == query) ++end;

    CandidateGroup group;
    group.query_row = query;
    group.first_pair = begin;
    std::size_t relevant_count = 0;
    std::unordered_set<RowIndex> seen_docs;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& pair = pairs_[i];
      if (pair.label != 0 && pair.label != 1) {
        throw Error(ErrorKind::Schema, "label must be 0 or 1 for query " + std::to_string(query));
      }
      if (!seen_docs.insert(pair.doc_row).second) {
        throw Error(ErrorKind::Schema, "query " + std::to_string(query) + " lists doc " +
                                           std::to_string(pair.doc_row) + " twice");
      }
      if (pair.label == 1) {
        ++relevant_count;
        group.relevant_row = pair.doc_row;
      } else {
        group.irrelevant_rows.push_back(pair.doc_row);
      }
    }
    if (relevant_count != 1) {
      throw Error(ErrorKind::Schema, "query " + std::to_string(query) + " has " + std::to_string(relevant_count) +
                                         " relevant documents, expected exactly 1");
    }
    const std::size_t k = end - begin;
    if (k < 2 || k > max_candidate_size) {
      throw Error(ErrorKind::Schema, "query " + std::to_string(query) + " has candidate size " +
                                         std::to_string(k) + ", allowed range is 2.." +
                                         std::to_string(max_candidate_size));
    }
    if (candidate_size_ == 0) {
      candidate_size_ = k;
    } else if (k != candidate_size_) {
      throw Error(ErrorKind::Schema, "query " + std::to_string(query) + " has candidate size " +
                                         std::to_string(k) + " but earlier groups have " +
                                         std::to_string(candidate_size_));
    }
    groups_.push_back(std::move(group));
    finished_queries.insert(query);
    begin = end;
  }
}

void RankingDataset::check_bounds(std::size_t query_rows, std::size_t doc_rows) const {
  for (const auto& pair : pairs_) {
    if (pair.query_row >= query_rows) {
      throw Error(ErrorKind::Shape, "query row " + std::to_string(pair.query_row) + " out of bounds (" +
                                        std::to_string(query_rows) + " rows)");
    }
    if (pair.doc_row >= doc_rows) {
      throw Error(ErrorKind::Shape, "doc row " + std::to_string(pair.doc_row) + " out of bounds (" +
                                        std::to_string(doc_rows) + " rows)");
    }
  }
}

namespace {

RowIndex index_field(const json& object, const char* key, std::size_t line_no) {
  const auto it = object.find(key);
  if (it == object.end() || !it->is_number_integer() || it->get<long long>() < 0) {
    throw Error(ErrorKind::Schema, "line " + std::to_string(line_no) + ": field \"" + key +
                                       "\" must be a non-negative integer");
  }
  return it->get<RowIndex>();
}

json parse_line(const std::string& line, std::size_t line_no) {
  json object;
  try {
    object = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Format, "line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!object.is_object()) throw Error(ErrorKind::Schema, "line " + std::to_string(line_no) + ": not an object");
  return object;
}

template <typename F>
void for_each_line(std::istream& source, F&& f) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    f(line, line_no);
  }
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

RankingDataset read_manifest(std::istream& source, std::size_t max_candidate_size) {
  std::vector<LabeledPair> pairs;
  for_each_line(source, [&](const std::string& line, std::size_t line_no) {
    const json object = parse_line(line, line_no);
    LabeledPair pair;
    pair.query_row = index_field(object, "q", line_no);
    pair.doc_row = index_field(object, "d", line_no);
    const auto y = object.find("y");
    if (y == object.end() || !y->is_number_integer() || (y->get<long long>() != 0 && y->get<long long>() != 1)) {
      throw Error(ErrorKind::Schema, "line " + std::to_string(line_no) + ": field \"y\" must be 0 or 1 (query " +
                                         std::to_string(pair.query_row) + ")");
    }
    pair.label = y->get<int>();
    pairs.push_back(pair);
  });
  return RankingDataset(std::move(pairs), max_candidate_size);
}

RankingDataset load_manifest(const std::filesystem::path& path, std::size_t max_candidate_size) {
  auto in = open_or_throw(path);
  try {
    return read_manifest(in, max_candidate_size);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

std::string format_manifest(const RankingDataset& dataset) {
  std::string out;
  out.reserve(dataset.pair_count() * 24);
  for (const auto& pair : dataset.pairs()) {
    out += "{\"q\":" + std::to_string(pair.query_row) + ",\"d\":" + std::to_string(pair.doc_row) +
           ",\"y\":" + std::to_string(pair.label) + "}\n";
  }
  return out;
}

void save_manifest(const RankingDataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, format_manifest(dataset));
}

std::vector<RelevantPair> read_relevant_pairs(std::istream& source) {
  std::vector<RelevantPair> pairs;
  for_each_line(source, [&](const std::string& line, std::size_t line_no) {
    const json object = parse_line(line, line_no);
    const auto y = object.find("y");
    if (y != object.end()) {
      if (!y->is_number_integer()) throw Error(ErrorKind::Schema, "line " + std::to_string(line_no) + ": bad \"y\"");
      if (y->get<long long>() == 0) return;
    }
    pairs.push_back({index_field(object, "q", line_no), index_field(object, "d", line_no)});
  });
  return pairs;
}

std::vector<RelevantPair> load_relevant_pairs(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  try {
    return read_relevant_pairs(in);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

std::string format_relevant_pairs(const std::vector<RelevantPair>& pairs) {
  std::string out;
  for (const auto& pair : pairs) {
    out += "{\"q\":" + std::to_string(pair.query_row) + ",\"d\":" + std::to_string(pair.doc_row) + "}\n";
  }
  return out;
}

namespace {

// Partial Fisher-Yates over the virtual array [0, pool) \ excluded, storing
// only displaced slots. `excluded` must be sorted and unique.
std::vector<RowIndex> draw_without_replacement(Rng& rng, std::size_t pool, const std::vector<RowIndex>& excluded,
                                               std::size_t count) {
  const std::size_t available = pool - excluded.size();
  std::unordered_map<std::size_t, std::size_t> displaced;
  auto slot = [&](std::size_t i) {
    const auto it = displaced.find(i);
    return it == displaced.end() ? i : it->second;
  };
  std::vector<RowIndex> drawn;
  drawn.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(available - i));
    const std::size_t picked = slot(j);
    displaced[j] = slot(i);
    // Map the compacted index back to a document row by skipping excluded rows.
    RowIndex doc = picked;
    for (const RowIndex e : excluded) {
      if (e <= doc) {
        ++doc;
      } else {
        break;
      }
    }
    drawn.push_back(doc);
  }
  return drawn;
}

}  // namespace

RankingDataset sample_candidates(const std::vector<RelevantPair>& relevant_pairs, std::size_t doc_pool_size,
                                 const SamplingOptions& options) {
  const std::size_t k = options.candidate_size;
  if (k < 2) throw Error(ErrorKind::Config, "candidate size must be at least 2, got " + std::to_string(k));
  if (doc_pool_size < k) {
    throw Error(ErrorKind::Capacity, "document pool of " + std::to_string(doc_pool_size) +
                                         " cannot supply candidate groups of size " + std::to_string(k));
  }
  if (relevant_pairs.empty()) throw Error(ErrorKind::EmptyInput, "no relevant pairs to sample from");

  std::map<RowIndex, std::vector<RowIndex>> relevant_by_query;
  for (const auto& pair : relevant_pairs) {
    if (pair.doc_row >= doc_pool_size) {
      throw Error(ErrorKind::Shape, "relevant doc " + std::to_string(pair.doc_row) + " outside pool of " +
                                        std::to_string(doc_pool_size));
    }
    relevant_by_query[pair.query_row].push_back(pair.doc_row);
  }
  for (auto& [query, docs] : relevant_by_query) {
    std::sort(docs.begin(), docs.end());
    docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
  }

  Rng rng(options.seed);
  std::vector<RowIndex> queries;
  queries.reserve(relevant_by_query.size());
  for (const auto& entry : relevant_by_query) queries.push_back(entry.first);
  rng.shuffle(std::span<RowIndex>(queries));
  if (options.query_cap != 0 && queries.size() > options.query_cap) queries.resize(options.query_cap);
  std::sort(queries.begin(), queries.end());

  std::vector<LabeledPair> pairs;
  pairs.reserve(queries.size() * k);
  for (const RowIndex query : queries) {
    const auto& relevant = relevant_by_query.at(query);
    if (doc_pool_size - relevant.size() < k - 1) {
      throw Error(ErrorKind::Capacity, "query " + std::to_string(query) + " has only " +
                                           std::to_string(doc_pool_size - relevant.size()) +
                                           " irrelevant documents available, needs " + std::to_string(k - 1));
    }
    RowIndex chosen = relevant.front();
    if (relevant.size() > 1) {
      std::vector<RowIndex> order = relevant;
      rng.shuffle(std::span<RowIndex>(order));
      chosen = order.front();
    }
    pairs.push_back({query, chosen, 1});
    for (const RowIndex doc : draw_without_replacement(rng, doc_pool_size, relevant, k - 1)) {
      pairs.push_back({query, doc, 0});
    }
  }
  return RankingDataset(std::move(pairs), std::max(k, RankingDataset::kDefaultMaxCandidateSize));
}

void ModelPoolTruth::validate() const {
  if (entries.size() < 2) {
    throw Error(ErrorKind::Schema, "truth needs at least 2 models, got " + std::to_string(entries.size()));
  }
  std::set<std::string> ids;
  for (const auto& entry : entries) {
    if (!ids.insert(entry.model_id).second) throw Error(ErrorKind::Schema, "duplicate model id " + entry.model_id);
    if (!(entry.fine_tune_score >= 0.0 && entry.fine_tune_score <= 1.0)) {
      throw Error(ErrorKind::Schema, "score for " + entry.model_id + " must lie in [0,1]");
    }
  }
}

ModelPoolTruth parse_truth(const std::string& json_text) {
  ModelPoolTruth truth;
  try {
    const json doc = json::parse(json_text);
    for (const auto& model : doc.at("models")) {
      truth.entries.push_back({model.at("id").get<std::string>(), model.at("score").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("truth file: ") + e.what());
  }
  truth.validate();
  return truth;
}

ModelPoolTruth load_truth(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_truth(read_text_file(path));
}

std::string format_truth(const ModelPoolTruth& truth) {
  json models = json::array();
  for (const auto& entry : truth.entries) models.push_back({{"id", entry.model_id}, {"score", entry.fine_tune_score}});
  return json{{"models", models}}.dump(2) + "\n";
}

}  // namespace airtran
