#include "core/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "core/errors.hpp"
#include "core/evaluator.hpp"
#include "core/parallel.hpp"

namespace avgemb {

namespace {

constexpr std::size_t header_bytes = 19;
constexpr char magic[4] = {'E', 'M', 'B', '1'};

void put_u16(unsigned char* p, std::uint16_t v) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
}
void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void check_finite(const embedding_matrix& m) {
  std::size_t d = m.dim();
  const float* data = m.values().data();
  std::size_t total = m.n_items() * d;
  for (std::size_t i = 0; i < total; ++i) {
    if (!std::isfinite(data[i]))
      throw io_error("non-finite value at row " + std::to_string(i / d) + ", column " +
                     std::to_string(i % d));
  }
}

embedding_matrix load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());

  unsigned char hdr[header_bytes];
  in.read(reinterpret_cast<char*>(hdr), header_bytes);
  if (in.gcount() != static_cast<std::streamsize>(header_bytes))
    throw io_error(path.string() + ": truncated header");
  if (std::memcmp(hdr, magic, 4) != 0)
    throw io_error(path.string() + ": bad magic, not an EMB1 file");
  std::uint16_t version = get_u16(hdr + 4);
  if (version != 1)
    throw io_error(path.string() + ": unsupported version " + std::to_string(version));
  std::uint64_t n = get_u64(hdr + 6);
  std::uint32_t d = get_u32(hdr + 14);
  std::uint8_t dtype = hdr[18];
  if (dtype != 0)
    throw io_error(path.string() + ": unsupported dtype " + std::to_string(dtype));
  if (n == 0 || d == 0) throw io_error(path.string() + ": empty matrix dimensions");
  if (d != 0 && n > std::numeric_limits<std::size_t>::max() / 4 / d)
    throw io_error(path.string() + ": declared dimensions overflow");

  std::uint64_t expected = n * static_cast<std::uint64_t>(d) * 4;
  std::uintmax_t actual = std::filesystem::file_size(path) - header_bytes;
  if (actual != expected)
    throw io_error(path.string() + ": payload size mismatch: expected " +
                   std::to_string(expected) + " data bytes, found " + std::to_string(actual));

  embedding_matrix m(n, d);
  static_assert(sizeof(float) == 4);
  in.read(reinterpret_cast<char*>(m.values().data()), static_cast<std::streamsize>(expected));
  if (in.gcount() != static_cast<std::streamsize>(expected))
    throw io_error(path.string() + ": short read");
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : m.values()) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      u = __builtin_bswap32(u);
      std::memcpy(&f, &u, 4);
    }
  }
  check_finite(m);
  m.set_origin(matrix_origin::loaded);
  m.set_label(path.filename().string());
  return m;
}

bool parse_float(const std::string& field, float& out) {
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

embedding_matrix load_csv(const std::filesystem::path& path, bool csv_header) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());

  std::vector<float> data;
  std::vector<std::string> ids;
  std::set<std::string> seen_ids;
  std::size_t dim = 0;
  std::size_t row = 0;
  bool has_ids = false;
  bool first_data_row = true;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (csv_header && line_no == 1) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }

    if (first_data_row) {
      float probe;
      has_ids = !parse_float(fields[0], probe);
      dim = fields.size() - (has_ids ? 1 : 0);
      if (dim == 0) throw io_error(path.string() + ": no numeric columns");
      first_data_row = false;
    }

    std::size_t offset = has_ids ? 1 : 0;
    if (fields.size() - offset != dim)
      throw io_error(path.string() + ": row " + std::to_string(row) + " has " +
                     std::to_string(fields.size() - offset) + " values, expected " +
                     std::to_string(dim));
    if (has_ids) {
      if (!seen_ids.insert(fields[0]).second)
        throw io_error(path.string() + ": duplicate item id '" + fields[0] + "'");
      ids.push_back(fields[0]);
    }
    for (std::size_t c = 0; c < dim; ++c) {
      float v;
      if (!parse_float(fields[c + offset], v))
        throw io_error(path.string() + ": cannot parse value at row " + std::to_string(row) +
                       ", column " + std::to_string(c));
      if (!std::isfinite(v))
        throw io_error(path.string() + ": non-finite value at row " + std::to_string(row) +
                       ", column " + std::to_string(c));
      data.push_back(v);
    }
    ++row;
  }
  if (row == 0) throw io_error(path.string() + ": no data rows");

  embedding_matrix m(row, dim);
  std::copy(data.begin(), data.end(), m.values().begin());
  m.item_ids() = std::move(ids);
  m.set_origin(matrix_origin::loaded);
  m.set_label(path.filename().string());
  return m;
}

}  // namespace

embedding_matrix load_embeddings(const std::filesystem::path& path, file_format format,
                                 bool csv_header) {
  return format == file_format::binary ? load_binary(path) : load_csv(path, csv_header);
}

void write_embeddings(const embedding_matrix& m, const std::filesystem::path& path,
                      file_format format) {
  if (m.n_items() == 0 || m.dim() == 0)
    throw std::invalid_argument("write_embeddings: empty matrix");
  std::ofstream out(path, format == file_format::binary
                              ? std::ios::binary | std::ios::trunc
                              : std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");

  if (format == file_format::binary) {
    unsigned char hdr[header_bytes];
    std::memcpy(hdr, magic, 4);
    put_u16(hdr + 4, 1);
    put_u64(hdr + 6, m.n_items());
    put_u32(hdr + 14, static_cast<std::uint32_t>(m.dim()));
    hdr[18] = 0;
    out.write(reinterpret_cast<const char*>(hdr), header_bytes);
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(m.values().data()),
                static_cast<std::streamsize>(m.values().size() * 4));
    } else {
      for (float f : m.values()) {
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        u = __builtin_bswap32(u);
        out.write(reinterpret_cast<const char*>(&u), 4);
      }
    }
  } else {
    char buf[40];
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      std::string line;
      if (m.has_ids()) {
        line += m.item_ids()[i];
        line += ',';
      }
      const float* row = m.row(i);
      for (std::size_t j = 0; j < m.dim(); ++j) {
        // 9 significant digits round-trip any float32 exactly
        std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(row[j]));
        if (j) line += ',';
        line += buf;
      }
      line += '\n';
      out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
  }
  if (!out) throw io_error("write failed for " + path.string());
}

embedding_matrix center(const embedding_matrix& m, int threads) {
  if (m.n_items() < 1) throw std::invalid_argument("center: empty matrix");
  std::size_t n = m.n_items(), d = m.dim();
  std::vector<double> mean(d, 0.0);
  // per-dimension accumulation in fixed row order: identical for any thread count
  parallel_for(d, threads, [&](std::size_t jb, std::size_t je) {
    for (std::size_t i = 0; i < n; ++i) {
      const float* row = m.row(i);
      for (std::size_t j = jb; j < je; ++j) mean[j] += row[j];
    }
    for (std::size_t j = jb; j < je; ++j) mean[j] /= static_cast<double>(n);
  });

  embedding_matrix out(n, d);
  parallel_for(n, threads, [&](std::size_t ib, std::size_t ie) {
    for (std::size_t i = ib; i < ie; ++i) {
      const float* src = m.row(i);
      float* dst = out.row(i);
      for (std::size_t j = 0; j < d; ++j)
        dst[j] = static_cast<float>(static_cast<double>(src[j]) - mean[j]);
    }
  });
  out.item_ids() = m.item_ids();
  out.set_origin(m.origin());
  out.set_label(m.label());
  return out;
}

namespace {

// a < b from the linear index of an upper-triangle pair
void decode_pair(std::uint64_t L, std::uint64_t d, std::uint64_t& a, std::uint64_t& b) {
  double dd = static_cast<double>(d);
  double est = std::floor((2.0 * dd - 1.0 - std::sqrt((2.0 * dd - 1.0) * (2.0 * dd - 1.0) -
                                                      8.0 * static_cast<double>(L))) /
                          2.0);
  std::uint64_t ai = est < 0.0 ? 0 : static_cast<std::uint64_t>(est);
  auto offset = [d](std::uint64_t x) { return x * (2 * d - x - 1) / 2; };
  while (ai > 0 && offset(ai) > L) --ai;
  while (ai + 1 < d && offset(ai + 1) <= L) ++ai;
  a = ai;
  b = ai + 1 + (L - offset(ai));
}

}  // namespace

diagnostics_report diagnostics(const embedding_matrix& m, std::size_t correlation_sample,
                               random_seed seed, int threads) {
  std::size_t n = m.n_items(), d = m.dim();
  if (n < 4) throw std::invalid_argument("diagnostics: need at least 4 items");

  std::vector<double> mean(d, 0.0);
  parallel_for(d, threads, [&](std::size_t jb, std::size_t je) {
    for (std::size_t i = 0; i < n; ++i) {
      const float* row = m.row(i);
      for (std::size_t j = jb; j < je; ++j) mean[j] += row[j];
    }
    for (std::size_t j = jb; j < je; ++j) mean[j] /= static_cast<double>(n);
  });

  double pooled_mean = 0.0;
  for (std::size_t j = 0; j < d; ++j) pooled_mean += mean[j];
  pooled_mean /= static_cast<double>(d);

  std::vector<double> m2(d, 0.0), m3(d, 0.0), m4(d, 0.0);
  std::vector<double> p2(d, 0.0), p3(d, 0.0), p4(d, 0.0);
  parallel_for(d, threads, [&](std::size_t jb, std::size_t je) {
    for (std::size_t i = 0; i < n; ++i) {
      const float* row = m.row(i);
      for (std::size_t j = jb; j < je; ++j) {
        double dev = row[j] - mean[j];
        double dev2 = dev * dev;
        m2[j] += dev2;
        m3[j] += dev2 * dev;
        m4[j] += dev2 * dev2;
        double pd = row[j] - pooled_mean;
        double pd2 = pd * pd;
        p2[j] += pd2;
        p3[j] += pd2 * pd;
        p4[j] += pd2 * pd2;
      }
    }
  });

  diagnostics_report rep;
  rep.per_dimension.reserve(d);
  double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) {
    double v2 = m2[j] / nn, v3 = m3[j] / nn, v4 = m4[j] / nn;
    if (v2 <= 0.0) {
      rep.per_dimension.push_back({moment_set(mean[j], 0.0, 0.0, 1.0), true});
    } else {
      rep.per_dimension.push_back(
          {moment_set(mean[j], v2, v3 / (v2 * std::sqrt(v2)), v4 / (v2 * v2)), false});
    }
  }

  double total = nn * static_cast<double>(d);
  double g2 = 0.0, g3 = 0.0, g4 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    g2 += p2[j];
    g3 += p3[j];
    g4 += p4[j];
  }
  g2 /= total;
  g3 /= total;
  g4 /= total;
  if (g2 <= 0.0) {
    rep.pooled = {moment_set(pooled_mean, 0.0, 0.0, 1.0), true};
  } else {
    rep.pooled = {moment_set(pooled_mean, g2, g3 / (g2 * std::sqrt(g2)), g4 / (g2 * g2)), false};
  }

  double norm2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) norm2 += mean[j] * mean[j];
  rep.mean_vector_norm = std::sqrt(norm2);

  double pooled_sd = std::sqrt(std::max(g2, 0.0));
  rep.centered = true;
  for (std::size_t j = 0; j < d; ++j) {
    if (std::fabs(mean[j]) > 1e-6 * pooled_sd) {
      rep.centered = false;
      break;
    }
  }

  if (d >= 2) {
    double max_corr = 0.0;
    if (d <= 256) {
      // full upper triangle; each (a,b) owned by one worker, rows in order
      std::vector<double> gram(d * d, 0.0);
      parallel_for(d, threads, [&](std::size_t ab, std::size_t ae) {
        for (std::size_t i = 0; i < n; ++i) {
          const float* row = m.row(i);
          for (std::size_t a = ab; a < ae; ++a) {
            double va = row[a] - mean[a];
            double* out = gram.data() + a * d;
            for (std::size_t b = a + 1; b < d; ++b) out[b] += va * (row[b] - mean[b]);
          }
        }
      });
      std::size_t used = 0;
      for (std::size_t a = 0; a < d; ++a) {
        if (rep.per_dimension[a].degenerate) continue;
        for (std::size_t b = a + 1; b < d; ++b) {
          if (rep.per_dimension[b].degenerate) continue;
          double corr = (gram[a * d + b] / nn) /
                        std::sqrt(rep.per_dimension[a].moments.variance *
                                  rep.per_dimension[b].moments.variance);
          max_corr = std::max(max_corr, std::min(std::fabs(corr), 1.0));
          ++used;
        }
      }
      rep.correlation_pairs_used = used;
    } else {
      std::uint64_t all_pairs = static_cast<std::uint64_t>(d) * (d - 1) / 2;
      std::uint64_t want = std::min<std::uint64_t>(correlation_sample, all_pairs);
      rng r(seed);
      std::vector<std::uint64_t> chosen =
          want > 0 ? sample_subset(r, all_pairs, want) : std::vector<std::uint64_t>{};
      std::vector<double> corrs(chosen.size(), 0.0);
      parallel_for(chosen.size(), threads, [&](std::size_t pb, std::size_t pe) {
        for (std::size_t p = pb; p < pe; ++p) {
          std::uint64_t a, b;
          decode_pair(chosen[p], d, a, b);
          if (rep.per_dimension[a].degenerate || rep.per_dimension[b].degenerate) continue;
          double acc = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const float* row = m.row(i);
            acc += (row[a] - mean[a]) * (row[b] - mean[b]);
          }
          double corr = (acc / nn) / std::sqrt(rep.per_dimension[a].moments.variance *
                                               rep.per_dimension[b].moments.variance);
          corrs[p] = std::min(std::fabs(corr), 1.0);
        }
      });
      for (double c : corrs) max_corr = std::max(max_corr, c);
      rep.correlation_pairs_used = chosen.size();
    }
    rep.max_abs_offdiag_correlation = max_corr;
  }

  return rep;
}

}  // namespace avgemb
