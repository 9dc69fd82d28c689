// Copyright 2026 The isoprobe authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#ifndef ISOPROBE_EMBEDDING_STORE_HPP
#define ISOPROBE_EMBEDDING_STORE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "isoprobe/error.hpp"
#include "isoprobe/matrix.hpp"

namespace isoprobe {

// Per-token metadata for one row of a dump. Frequency is a corpus count,
// 0 meaning unknown. Invariants: a [CLS] row sits at position 0, and
// (sentence_id, layer, position) is unique within a dump.
struct TokenRecord {
  std::string token;
  std::uint32_t layer = 0;
  std::uint32_t sentence_id = 0;
  std::uint32_t position = 0;
  bool is_cls = false;
  bool is_poolable = true;
  std::uint64_t frequency = 0;
};

// A set of token vectors with metadata; row i of `vectors` belongs to
// records[i]. Vectors are 64-bit and finite. Immutable once loaded; safe to
// share across threads.
struct EmbeddingDump {
  int dim = 0;
  std::vector<TokenRecord> records;
  Matrix vectors;

  std::int64_t size() const { return static_cast<std::int64_t>(records.size()); }
};

// Sentence-pair similarity dataset with gold scores in [0, 5].
struct StsPair {
  std::uint32_t sent_a = 0;
  std::uint32_t sent_b = 0;
  double gold = 0.0;
};

struct StsDataset {
  std::vector<StsPair> pairs;
};

// Row filter for select(). Sampling is uniform without replacement and
// deterministic per seed; selected rows keep their original dump order.
struct SelectFilter {
  std::optional<std::uint32_t> layer;
  bool cls_only = false;
  bool poolable_only = false;
  std::optional<std::pair<std::int64_t, std::uint64_t>> sample;  // (n, seed)
};

// Text dump format:
//   #isoprobe-dump v1 dim=<d>
//   token<TAB>layer<TAB>sentence_id<TAB>position<TAB>is_cls<TAB>is_poolable<TAB>frequency<TAB>v1<TAB>...<TAB>vd
// Binary dump format, little-endian throughout:
//   magic "ISOPROBE", u8 version = 1, u32 N, u32 d, then N records of
//   u32 token_len + token bytes, u32 layer, u32 sentence_id, u32 position,
//   u8 flags (bit0 is_cls, bit1 is_poolable), u64 frequency, d x f64.
EmbeddingDump load_text_dump(const std::filesystem::path& path);
void write_text_dump(const EmbeddingDump& dump,
                     const std::filesystem::path& path);
EmbeddingDump load_binary_dump(const std::filesystem::path& path);
void write_binary_dump(const EmbeddingDump& dump,
                       const std::filesystem::path& path);

// Sniffs text vs. binary from the leading bytes.
EmbeddingDump load_dump(const std::filesystem::path& path);

// Checks the dump invariants (row/record agreement, finite vectors, CLS
// position, key uniqueness). Loaders call this; callers constructing dumps
// in memory may too.
void validate_dump(const EmbeddingDump& dump);

std::vector<Index> select_indices(const EmbeddingDump& dump,
                                  const SelectFilter& filter);
Matrix select(const EmbeddingDump& dump, const SelectFilter& filter);

// Quantile buckets of the known (> 0) frequencies: bucket 1 holds the least
// frequent tokens, bucket n_buckets the most frequent. Records sharing a
// frequency always share a bucket. Unknown frequencies are an error unless
// unknown_to_bucket0 places them in bucket 0.
std::vector<int> frequency_buckets(const EmbeddingDump& dump, int n_buckets,
                                   bool unknown_to_bucket0 = false,
                                   Warnings* warnings = nullptr);

// CSV with header `sent_a,sent_b,gold`; gold validated into [0, 5].
StsDataset load_sts_dataset(const std::filesystem::path& path);

}  // namespace isoprobe

#endif  // ISOPROBE_EMBEDDING_STORE_HPP
