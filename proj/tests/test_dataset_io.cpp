#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/dataset_io.hpp"
#include "core/distribution.hpp"
#include "core/errors.hpp"
#include "core/matrix.hpp"
#include "core/synth.hpp"

using namespace avgemb;

namespace {

std::filesystem::path tmp_path(const std::string& name) {
  static const std::filesystem::path dir = [] {
    std::filesystem::path p = std::filesystem::temp_directory_path() / "avgemb_io_tests";
    std::filesystem::create_directories(p);
    return p;
  }();
  return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> craft_header(std::uint16_t version, std::uint64_t n, std::uint32_t d,
                                        unsigned char dtype) {
  std::vector<unsigned char> h = {'E', 'M', 'B', '1'};
  h.resize(19, 0);
  for (int i = 0; i < 2; ++i) h[4 + i] = static_cast<unsigned char>(version >> (8 * i));
  for (int i = 0; i < 8; ++i) h[6 + i] = static_cast<unsigned char>(n >> (8 * i));
  for (int i = 0; i < 4; ++i) h[14 + i] = static_cast<unsigned char>(d >> (8 * i));
  h[18] = dtype;
  return h;
}

void append_float(std::vector<unsigned char>& bytes, float f) {
  unsigned char b[4];
  std::memcpy(b, &f, 4);
  bytes.insert(bytes.end(), b, b + 4);
}

bool same_values(const embedding_matrix& a, const embedding_matrix& b) {
  return a.n_items() == b.n_items() && a.dim() == b.dim() &&
         std::memcmp(a.values().data(), b.values().data(), a.values().size() * 4) == 0;
}

embedding_matrix from_rows(const std::vector<std::vector<float>>& rows) {
  embedding_matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), m.row(i));
  return m;
}

template <typename F>
std::string io_message(F&& f) {
  try {
    f();
  } catch (const io_error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("binary round-trip is bit exact with the documented layout") {
  distribution_spec spec = distribution_spec::make_normal(0.0, 1.0);
  embedding_matrix m = synth(spec, 20, 5, {404, 0});
  std::filesystem::path p = tmp_path("roundtrip.emb");
  write_embeddings(m, p, file_format::binary);

  CHECK(std::filesystem::file_size(p) == 19 + 20 * 5 * 4);

  embedding_matrix back = load_embeddings(p, file_format::binary);
  CHECK(same_values(m, back));
  CHECK(back.origin() == matrix_origin::loaded);
  CHECK(back.label() == "roundtrip.emb");
  CHECK(!back.has_ids());
}

TEST_CASE("csv round-trip preserves ids and every float bit pattern") {
  embedding_matrix m = from_rows({{0.1f, 1.0f / 3.0f, -0.0f},
                                  {3.40282347e+38f, 1.17549435e-38f, 1e-42f},
                                  {-7.25f, 3.14159274f, -2.5e-17f}});
  m.item_ids() = {"alpha", "beta", "gamma"};
  std::filesystem::path p = tmp_path("roundtrip.csv");
  write_embeddings(m, p, file_format::csv);

  embedding_matrix back = load_embeddings(p, file_format::csv);
  CHECK(same_values(m, back));
  REQUIRE(back.has_ids());
  CHECK(back.item_ids() == m.item_ids());
}

TEST_CASE("csv parses ids, bare numbers, crlf and headers") {
  std::filesystem::path p = tmp_path("flavors.csv");

  write_text(p, "a,1.0,2.0\nb,3.0,4.0\n");
  embedding_matrix ids = load_embeddings(p, file_format::csv);
  REQUIRE(ids.n_items() == 2);
  REQUIRE(ids.dim() == 2);
  CHECK(ids.item_ids() == std::vector<std::string>{"a", "b"});
  CHECK(ids.row(1)[1] == 4.0f);

  write_text(p, "1.5,2.5\r\n3.5,4.5\r\n");
  embedding_matrix crlf = load_embeddings(p, file_format::csv);
  REQUIRE(crlf.n_items() == 2);
  CHECK(!crlf.has_ids());
  CHECK(crlf.row(0)[1] == 2.5f);

  write_text(p, "id,x0,x1\na,1,2\n");
  embedding_matrix headed = load_embeddings(p, file_format::csv, true);
  CHECK(headed.n_items() == 1);
  CHECK(headed.dim() == 2);

  write_text(p, "1,2\n\n3,4\n");
  CHECK(load_embeddings(p, file_format::csv).n_items() == 2);
}

TEST_CASE("csv loader reports broken inputs precisely") {
  std::filesystem::path p = tmp_path("broken.csv");

  write_text(p, "a,1,2\nb,3\n");
  std::string msg = io_message([&] { load_embeddings(p, file_format::csv); });
  CHECK(msg.find("row 1 has 1 values, expected 2") != std::string::npos);

  write_text(p, "1.0,abc\n");
  msg = io_message([&] { load_embeddings(p, file_format::csv); });
  CHECK(msg.find("cannot parse value at row 0, column 1") != std::string::npos);

  write_text(p, "1.0,inf\n");
  msg = io_message([&] { load_embeddings(p, file_format::csv); });
  CHECK(msg.find("non-finite value at row 0, column 1") != std::string::npos);

  write_text(p, "a,1\na,2\n");
  msg = io_message([&] { load_embeddings(p, file_format::csv); });
  CHECK(msg.find("duplicate item id 'a'") != std::string::npos);

  write_text(p, "");
  msg = io_message([&] { load_embeddings(p, file_format::csv); });
  CHECK(msg.find("no data rows") != std::string::npos);

  write_text(p, "id,name\n");  // header only, no numeric rows
  msg = io_message([&] { load_embeddings(p, file_format::csv, true); });
  CHECK(msg.find("no data rows") != std::string::npos);

  CHECK_THROWS_AS(load_embeddings(tmp_path("missing.csv"), file_format::csv), io_error);
}

TEST_CASE("binary loader rejects malformed files") {
  std::filesystem::path p = tmp_path("broken.emb");

  std::vector<unsigned char> bad_magic = craft_header(1, 1, 1, 0);
  bad_magic[0] = 'X';
  append_float(bad_magic, 1.0f);
  write_bytes(p, bad_magic);
  std::string msg = io_message([&] { load_embeddings(p, file_format::binary); });
  CHECK(msg.find("bad magic") != std::string::npos);

  std::vector<unsigned char> v2 = craft_header(2, 1, 1, 0);
  append_float(v2, 1.0f);
  write_bytes(p, v2);
  msg = io_message([&] { load_embeddings(p, file_format::binary); });
  CHECK(msg.find("unsupported version 2") != std::string::npos);

  std::vector<unsigned char> dtype = craft_header(1, 1, 1, 7);
  append_float(dtype, 1.0f);
  write_bytes(p, dtype);
  msg = io_message([&] { load_embeddings(p, file_format::binary); });
  CHECK(msg.find("unsupported dtype 7") != std::string::npos);

  std::vector<unsigned char> zero_dim = craft_header(1, 0, 4, 0);
  write_bytes(p, zero_dim);
  msg = io_message([&] { load_embeddings(p, file_format::binary); });
  CHECK(msg.find("empty matrix dimensions") != std::string::npos);

  std::vector<unsigned char> short_payload = craft_header(1, 2, 2, 0);
  append_float(short_payload, 1.0f);  // 4 bytes where 16 are declared
  write_bytes(p, short_payload);
  msg = io_message([&] { load_embeddings(p, file_format::binary); });
  CHECK(msg.find("payload size mismatch: expected") != std::string::npos);

  write_bytes(p, {'E', 'M', 'B', '1', 1, 0});  // cut off inside the header
  msg = io_message([&] { load_embeddings(p, file_format::binary); });
  CHECK(msg.find("truncated header") != std::string::npos);

  std::vector<unsigned char> nonfinite = craft_header(1, 1, 2, 0);
  append_float(nonfinite, 1.0f);
  append_float(nonfinite, std::numeric_limits<float>::infinity());
  write_bytes(p, nonfinite);
  msg = io_message([&] { load_embeddings(p, file_format::binary); });
  CHECK(msg.find("non-finite value at row 0, column 1") != std::string::npos);

  CHECK_THROWS_AS(load_embeddings(tmp_path("missing.emb"), file_format::binary), io_error);

  embedding_matrix empty;
  CHECK_THROWS_AS(write_embeddings(empty, p, file_format::binary), std::invalid_argument);
}

TEST_CASE("center subtracts per-dimension means") {
  embedding_matrix m = from_rows({{1.0f, 3.0f}, {3.0f, 5.0f}});
  embedding_matrix c = center(m);
  CHECK(c.row(0)[0] == -1.0f);
  CHECK(c.row(0)[1] == -1.0f);
  CHECK(c.row(1)[0] == 1.0f);
  CHECK(c.row(1)[1] == 1.0f);

  embedding_matrix constant = from_rows({{2.5f, 2.5f}, {2.5f, 2.5f}, {2.5f, 2.5f}});
  embedding_matrix cc = center(constant);
  for (float v : cc.values()) CHECK(v == 0.0f);

  embedding_matrix empty;
  CHECK_THROWS_AS(center(empty), std::invalid_argument);
}

TEST_CASE("center is idempotent, thread invariant and keeps metadata") {
  distribution_spec spec = distribution_spec::make_uniform(0.5, 1.5);
  embedding_matrix m = synth(spec, 400, 6, {88, 0});
  m.item_ids().resize(400, "x");
  embedding_matrix once = center(m, 1);
  CHECK(once.item_ids().size() == 400);
  CHECK(once.label() == m.label());
  CHECK(once.origin() == m.origin());

  // re-centering only moves float rounding residue
  embedding_matrix twice = center(once, 1);
  for (std::size_t j = 0; j < 6; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 400; ++i) mean += once.row(i)[j];
    CHECK(std::fabs(mean / 400.0) <= 1e-6);
    double diff = 0.0;
    for (std::size_t i = 0; i < 400; ++i)
      diff = std::max(diff, std::fabs(static_cast<double>(twice.row(i)[j]) - once.row(i)[j]));
    CHECK(diff <= 1e-6);
  }

  CHECK(same_values(center(m, 2), once));
  CHECK(same_values(center(m, 5), once));
}

TEST_CASE("center commutes with row permutation on exact data") {
  // integer-valued floats make all the mean sums exact in any order
  embedding_matrix m(50, 3);
  rng r({314, 0});
  for (float& v : m.values()) v = static_cast<float>(static_cast<int>(r.next_below(17)) - 8);

  embedding_matrix rev(50, 3);
  for (std::size_t i = 0; i < 50; ++i) std::copy(m.row(i), m.row(i) + 3, rev.row(49 - i));

  embedding_matrix cm = center(m);
  embedding_matrix crev = center(rev);
  bool match = true;
  for (std::size_t i = 0; i < 50; ++i)
    match = match && std::memcmp(cm.row(i), crev.row(49 - i), 3 * 4) == 0;
  CHECK(match);
}

TEST_CASE("diagnostics recovers marginals of synthetic normals") {
  distribution_spec spec = distribution_spec::make_normal(0.0, 1.0);
  embedding_matrix m = synth(spec, 2000, 8, {1001, 0});
  diagnostics_report rep = diagnostics(m, 10000, {5, 5});

  REQUIRE(rep.per_dimension.size() == 8);
  for (const moment_estimate& e : rep.per_dimension) {
    CHECK(!e.degenerate);
    CHECK(std::fabs(e.moments.mean) <= 0.112);           // 5 sigma at n=2000
    CHECK(std::fabs(e.moments.variance - 1.0) <= 0.16);  // 5 sqrt(2/n)
    CHECK(std::fabs(e.moments.skewness) <= 0.28);        // 5 sqrt(6/n)
    CHECK(std::fabs(e.moments.kurtosis - 3.0) <= 0.55);  // 5 sqrt(24/n)
  }
  CHECK(!rep.pooled.degenerate);
  CHECK(std::fabs(rep.pooled.moments.mean) <= 0.05);
  CHECK(std::fabs(rep.pooled.moments.variance - 1.0) <= 0.06);

  CHECK(rep.correlation_pairs_used == 28);  // full upper triangle at d=8
  CHECK(rep.max_abs_offdiag_correlation <= 0.112);
  CHECK(rep.max_abs_offdiag_correlation > 0.0);

  CHECK(!rep.centered);  // sample means are ~0.02, far above the 1e-6 sd gate
  CHECK(rep.mean_vector_norm > 0.0);
  CHECK(rep.mean_vector_norm <= 0.112 * std::sqrt(8.0));

  // centering flips the flag and collapses the mean vector
  diagnostics_report after = diagnostics(center(m), 10000, {5, 5});
  CHECK(after.centered);
  CHECK(after.mean_vector_norm <= 1e-5);
}

TEST_CASE("diagnostics flags degenerate dimensions and perfect correlation") {
  distribution_spec spec = distribution_spec::make_normal(0.0, 1.0);
  embedding_matrix base = synth(spec, 500, 1, {66, 0});
  embedding_matrix m(500, 3);
  for (std::size_t i = 0; i < 500; ++i) {
    m.row(i)[0] = base.row(i)[0];
    m.row(i)[1] = base.row(i)[0];  // exact copy
    m.row(i)[2] = 2.5f;            // constant
  }
  diagnostics_report rep = diagnostics(m, 100, {1, 1});
  CHECK(!rep.per_dimension[0].degenerate);
  CHECK(rep.per_dimension[2].degenerate);
  CHECK(rep.per_dimension[2].moments.variance == 0.0);
  CHECK(rep.per_dimension[2].moments.mean == doctest::Approx(2.5));
  CHECK(!rep.pooled.degenerate);
  CHECK(rep.correlation_pairs_used == 1);  // only the (0,1) pair is usable
  CHECK(rep.max_abs_offdiag_correlation >= 0.999999);
  CHECK(rep.max_abs_offdiag_correlation <= 1.0);
}

TEST_CASE("diagnostics samples correlation pairs beyond 256 dimensions") {
  distribution_spec spec = distribution_spec::make_normal(0.0, 1.0);
  embedding_matrix m = synth(spec, 50, 300, {7, 1});

  diagnostics_report a = diagnostics(m, 1000, {12, 0});
  CHECK(a.correlation_pairs_used == 1000);
  CHECK(a.max_abs_offdiag_correlation > 0.0);
  CHECK(a.max_abs_offdiag_correlation <= 1.0);

  diagnostics_report b = diagnostics(m, 1000, {12, 0}, 4);
  CHECK(b.max_abs_offdiag_correlation == a.max_abs_offdiag_correlation);

  diagnostics_report none = diagnostics(m, 0, {12, 0});
  CHECK(none.correlation_pairs_used == 0);
  CHECK(none.max_abs_offdiag_correlation == 0.0);

  embedding_matrix tiny = synth(spec, 3, 4, {1, 0});
  CHECK_THROWS_AS(diagnostics(tiny, 10, {1, 0}), std::invalid_argument);
}
