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

#include "isoprobe/embedding_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <string>

#include "isoprobe/rng.hpp"
#include "isoprobe/text.hpp"

namespace isoprobe {

namespace {

constexpr char kTextMagic[] = "#isoprobe-dump";
constexpr char kBinaryMagic[8] = {'I', 'S', 'O', 'P', 'R', 'O', 'B', 'E'};
constexpr std::uint8_t kBinaryVersion = 1;
constexpr std::uint8_t kFlagCls = 0x01;
constexpr std::uint8_t kFlagPoolable = 0x02;

std::string loc(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

// Little-endian primitives, independent of host byte order.

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class BinaryReader {
 public:
  BinaryReader(std::istream& in, const std::filesystem::path& path)
      : in_(in), path_(path) {}

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw_contract("truncated binary dump: " + path_.string());
  }

  std::uint8_t u8() {
    char c;
    bytes(&c, 1);
    return static_cast<std::uint8_t>(c);
  }

  std::uint32_t u32() {
    std::array<char, 4> b;
    bytes(b.data(), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    std::array<char, 8> b;
    bytes(b.data(), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::istream& in_;
  const std::filesystem::path& path_;
};

}  // namespace

void validate_dump(const EmbeddingDump& dump) {
  if (dump.dim <= 0) throw_contract("dump dimension must be positive");
  if (dump.vectors.rows() != dump.size() ||
      dump.vectors.cols() != dump.dim)
    throw_contract("dump has " + std::to_string(dump.records.size()) +
                   " records but a " + std::to_string(dump.vectors.rows()) +
                   "x" + std::to_string(dump.vectors.cols()) +
                   " vector matrix");
  if (!all_finite(dump.vectors))
    throw_contract("dump contains a non-finite vector component");
  std::set<std::array<std::uint32_t, 3>> keys;
  for (std::size_t i = 0; i < dump.records.size(); ++i) {
    const TokenRecord& r = dump.records[i];
    if (r.is_cls && r.position != 0)
      throw_contract("record " + std::to_string(i) + " ('" + r.token +
                     "') is [CLS] but has position " +
                     std::to_string(r.position));
    if (!keys.insert({r.sentence_id, r.layer, r.position}).second)
      throw_contract("duplicate (sentence_id, layer, position) = (" +
                     std::to_string(r.sentence_id) + ", " +
                     std::to_string(r.layer) + ", " +
                     std::to_string(r.position) + ") at record " +
                     std::to_string(i));
  }
}

EmbeddingDump load_text_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw_contract("empty dump file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::string header_prefix = std::string(kTextMagic) + " v1 dim=";
  if (!line.starts_with(header_prefix))
    throw_contract("bad header at " + loc(path, 1) + ": expected '" +
                   header_prefix + "<d>'");
  auto dim = parse_uint<std::uint32_t>(
      std::string_view(line).substr(header_prefix.size()));
  if (!dim || *dim == 0)
    throw_contract("bad dimension in header at " + loc(path, 1));

  EmbeddingDump dump;
  dump.dim = static_cast<int>(*dim);
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;  // trailing newline
    auto fields = split(line, '\t');
    if (fields.size() != 7 + static_cast<std::size_t>(dump.dim))
      throw_contract("malformed line at " + loc(path, line_no) + ": expected " +
                     std::to_string(7 + dump.dim) + " fields, got " +
                     std::to_string(fields.size()));
    TokenRecord rec;
    rec.token = std::string(fields[0]);
    auto layer = parse_uint<std::uint32_t>(fields[1]);
    auto sentence = parse_uint<std::uint32_t>(fields[2]);
    auto position = parse_uint<std::uint32_t>(fields[3]);
    auto frequency = parse_uint<std::uint64_t>(fields[6]);
    if (!layer || !sentence || !position || !frequency)
      throw_contract("malformed integer field at " + loc(path, line_no));
    if (fields[4] != "0" && fields[4] != "1")
      throw_contract("is_cls must be 0 or 1 at " + loc(path, line_no));
    if (fields[5] != "0" && fields[5] != "1")
      throw_contract("is_poolable must be 0 or 1 at " + loc(path, line_no));
    rec.layer = *layer;
    rec.sentence_id = *sentence;
    rec.position = *position;
    rec.is_cls = fields[4] == "1";
    rec.is_poolable = fields[5] == "1";
    rec.frequency = *frequency;
    for (int j = 0; j < dump.dim; ++j) {
      auto v = parse_double(fields[7 + static_cast<std::size_t>(j)]);
      if (!v)
        throw_contract("malformed vector component at " + loc(path, line_no));
      if (!std::isfinite(*v))
        throw_contract("non-finite vector component at " + loc(path, line_no));
      values.push_back(*v);
    }
    dump.records.push_back(std::move(rec));
  }
  if (dump.records.empty())
    throw_contract("dump has no rows: " + path.string());

  dump.vectors.resize(dump.size(), dump.dim);
  for (Index i = 0; i < dump.size(); ++i)
    for (int j = 0; j < dump.dim; ++j)
      dump.vectors(i, j) = values[static_cast<std::size_t>(i) * dump.dim + j];
  validate_dump(dump);
  return dump;
}

void write_text_dump(const EmbeddingDump& dump,
                     const std::filesystem::path& path) {
  validate_dump(dump);
  for (const TokenRecord& r : dump.records)
    if (r.token.find_first_of("\t\n\r") != std::string::npos)
      throw_contract("token '" + r.token +
                     "' contains a tab or newline; not representable in the "
                     "text format (use the binary format)");
  std::ofstream out(path, std::ios::binary);  // binary: fixed '\n' endings
  if (!out) throw_io("cannot open " + path.string() + " for writing");
  out << kTextMagic << " v1 dim=" << dump.dim << "\n";
  std::string row;
  for (Index i = 0; i < dump.size(); ++i) {
    const TokenRecord& r = dump.records[static_cast<std::size_t>(i)];
    row.clear();
    row += r.token;
    row += '\t';
    row += std::to_string(r.layer);
    row += '\t';
    row += std::to_string(r.sentence_id);
    row += '\t';
    row += std::to_string(r.position);
    row += '\t';
    row += r.is_cls ? '1' : '0';
    row += '\t';
    row += r.is_poolable ? '1' : '0';
    row += '\t';
    row += std::to_string(r.frequency);
    for (int j = 0; j < dump.dim; ++j) {
      row += '\t';
      row += format_double(dump.vectors(i, j));
    }
    row += '\n';
    out << row;
  }
  if (!out) throw_io("write failed: " + path.string());
}

void write_binary_dump(const EmbeddingDump& dump,
                       const std::filesystem::path& path) {
  validate_dump(dump);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot open " + path.string() + " for writing");

  std::string buf;
  buf.append(kBinaryMagic, sizeof(kBinaryMagic));
  buf.push_back(static_cast<char>(kBinaryVersion));
  put_u32(buf, static_cast<std::uint32_t>(dump.size()));
  put_u32(buf, static_cast<std::uint32_t>(dump.dim));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  for (Index i = 0; i < dump.size(); ++i) {
    const TokenRecord& r = dump.records[static_cast<std::size_t>(i)];
    buf.clear();
    put_u32(buf, static_cast<std::uint32_t>(r.token.size()));
    buf += r.token;
    put_u32(buf, r.layer);
    put_u32(buf, r.sentence_id);
    put_u32(buf, r.position);
    std::uint8_t flags = 0;
    if (r.is_cls) flags |= kFlagCls;
    if (r.is_poolable) flags |= kFlagPoolable;
    buf.push_back(static_cast<char>(flags));
    put_u64(buf, r.frequency);
    if constexpr (std::endian::native == std::endian::little) {
      buf.append(reinterpret_cast<const char*>(dump.vectors.row(i).data()),
                 static_cast<std::size_t>(dump.dim) * sizeof(double));
    } else {
      for (int j = 0; j < dump.dim; ++j) put_f64(buf, dump.vectors(i, j));
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw_io("write failed: " + path.string());
}

EmbeddingDump load_binary_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path.string());
  BinaryReader r(in, path);

  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kBinaryMagic, 8) != 0)
    throw_contract("bad magic in " + path.string() +
                   ": not an isoprobe binary dump");
  std::uint8_t version = r.u8();
  if (version != kBinaryVersion)
    throw_contract("unsupported binary dump version " +
                   std::to_string(version) + " in " + path.string() +
                   " (expected " + std::to_string(kBinaryVersion) + ")");
  std::uint32_t n = r.u32();
  std::uint32_t dim = r.u32();
  if (n == 0 || dim == 0)
    throw_contract("empty dump: " + path.string());

  EmbeddingDump dump;
  dump.dim = static_cast<int>(dim);
  dump.records.resize(n);
  dump.vectors.resize(static_cast<Index>(n), static_cast<Index>(dim));
  for (std::uint32_t i = 0; i < n; ++i) {
    TokenRecord& rec = dump.records[i];
    std::uint32_t token_len = r.u32();
    rec.token.resize(token_len);
    if (token_len > 0) r.bytes(rec.token.data(), token_len);
    rec.layer = r.u32();
    rec.sentence_id = r.u32();
    rec.position = r.u32();
    std::uint8_t flags = r.u8();
    if ((flags & ~(kFlagCls | kFlagPoolable)) != 0)
      throw_contract("unknown flag bits in record " + std::to_string(i) +
                     " of " + path.string());
    rec.is_cls = (flags & kFlagCls) != 0;
    rec.is_poolable = (flags & kFlagPoolable) != 0;
    rec.frequency = r.u64();
    if constexpr (std::endian::native == std::endian::little) {
      r.bytes(reinterpret_cast<char*>(dump.vectors.row(static_cast<Index>(i))
                                          .data()),
              static_cast<std::size_t>(dim) * sizeof(double));
    } else {
      for (std::uint32_t j = 0; j < dim; ++j)
        dump.vectors(static_cast<Index>(i), static_cast<Index>(j)) = r.f64();
    }
  }
  validate_dump(dump);
  return dump;
}

EmbeddingDump load_dump(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw_io("cannot open " + path.string());
  char head[8] = {};
  probe.read(head, 8);
  probe.close();
  if (std::memcmp(head, kBinaryMagic, 8) == 0) return load_binary_dump(path);
  if (std::string_view(head, 8).starts_with("#isoprob"))
    return load_text_dump(path);
  throw_contract("unrecognized dump format: " + path.string());
}

std::vector<Index> select_indices(const EmbeddingDump& dump,
                                  const SelectFilter& filter) {
  std::vector<Index> idx;
  for (Index i = 0; i < dump.size(); ++i) {
    const TokenRecord& r = dump.records[static_cast<std::size_t>(i)];
    if (filter.layer && r.layer != *filter.layer) continue;
    if (filter.cls_only && !r.is_cls) continue;
    if (filter.poolable_only && !r.is_poolable) continue;
    idx.push_back(i);
  }
  if (idx.empty()) {
    std::string desc;
    if (filter.layer) desc += " layer=" + std::to_string(*filter.layer);
    if (filter.cls_only) desc += " cls_only";
    if (filter.poolable_only) desc += " poolable_only";
    throw_contract("selection matched no rows (filter:" +
                   (desc.empty() ? std::string(" none") : desc) + ")");
  }
  if (filter.sample) {
    auto [n, seed] = *filter.sample;
    if (n < 1 || static_cast<std::size_t>(n) > idx.size())
      throw_contract("sample size " + std::to_string(n) +
                     " out of range for " + std::to_string(idx.size()) +
                     " matching rows");
    // Partial Fisher-Yates, then restore dump order.
    Rng rng(seed);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
      std::size_t j = i + rng.index(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(n));
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

Matrix select(const EmbeddingDump& dump, const SelectFilter& filter) {
  return gather_rows(dump.vectors, select_indices(dump, filter));
}

std::vector<int> frequency_buckets(const EmbeddingDump& dump, int n_buckets,
                                   bool unknown_to_bucket0,
                                   Warnings* warnings) {
  if (n_buckets < 2) throw_contract("n_buckets must be >= 2");

  std::vector<std::size_t> known;
  for (std::size_t i = 0; i < dump.records.size(); ++i) {
    if (dump.records[i].frequency > 0) known.push_back(i);
    else if (!unknown_to_bucket0)
      throw_contract("record " + std::to_string(i) + " ('" +
                     dump.records[i].token +
                     "') has unknown frequency; pass unknown_to_bucket0 to "
                     "bucket it as 0");
  }
  std::vector<int> buckets(dump.records.size(), 0);
  if (known.empty()) {
    add_warning(warnings, "frequency_buckets: no known frequencies");
    return buckets;
  }

  // Sort the known records by frequency (ascending); the bucket of sorted
  // position p is floor(p * n / K). A run of equal frequencies takes the
  // bucket of its midpoint position so ties never straddle a boundary.
  std::sort(known.begin(), known.end(), [&](std::size_t a, std::size_t b) {
    auto fa = dump.records[a].frequency, fb = dump.records[b].frequency;
    return fa != fb ? fa < fb : a < b;
  });
  const std::size_t k_count = known.size();
  std::size_t distinct = 0;
  std::size_t run_start = 0;
  while (run_start < k_count) {
    std::size_t run_end = run_start + 1;
    while (run_end < k_count &&
           dump.records[known[run_end]].frequency ==
               dump.records[known[run_start]].frequency)
      ++run_end;
    ++distinct;
    std::size_t mid = (run_start + run_end - 1) / 2;
    int bucket = static_cast<int>(mid * static_cast<std::size_t>(n_buckets) /
                                  k_count) + 1;
    for (std::size_t p = run_start; p < run_end; ++p)
      buckets[known[p]] = bucket;
    run_start = run_end;
  }
  if (distinct < static_cast<std::size_t>(n_buckets))
    add_warning(warnings,
                "frequency_buckets: only " + std::to_string(distinct) +
                    " distinct frequencies for " + std::to_string(n_buckets) +
                    " buckets; buckets collapsed");
  return buckets;
}

StsDataset load_sts_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw_contract("empty STS file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sent_a,sent_b,gold")
    throw_contract("bad header at " + loc(path, 1) +
                   ": expected 'sent_a,sent_b,gold'");

  StsDataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;
    auto fields = split(line, ',');
    if (fields.size() != 3)
      throw_contract("malformed line at " + loc(path, line_no) +
                     ": expected 3 fields");
    auto a = parse_uint<std::uint32_t>(fields[0]);
    auto b = parse_uint<std::uint32_t>(fields[1]);
    auto gold = parse_double(fields[2]);
    if (!a || !b || !gold)
      throw_contract("malformed field at " + loc(path, line_no));
    if (!std::isfinite(*gold) || *gold < 0.0 || *gold > 5.0)
      throw_contract("gold score " + std::string(fields[2]) +
                     " outside [0, 5] at " + loc(path, line_no));
    ds.pairs.push_back({*a, *b, *gold});
  }
  if (ds.pairs.empty())
    throw_contract("STS file has no pairs: " + path.string());
  return ds;
}

}  // namespace isoprobe
