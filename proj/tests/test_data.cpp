#include <doctest.h>

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sepsaddle/data.hpp"

using namespace sepsaddle;

namespace {

double column_entry(const Dataset& ds, int sample, int coord) {
  std::vector<double> e(ds.dim(), 0.0);
  e[coord] = 1.0;
  return ds.A.column_dot(sample, e);
}

std::string gzip_compress(const std::string& plain) {
  z_stream zs{};
  REQUIRE(deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                       Z_DEFAULT_STRATEGY) == Z_OK);
  std::string out(plain.size() + 128, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(plain.data()));
  zs.avail_in = static_cast<uInt>(plain.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  REQUIRE(deflate(&zs, Z_FINISH) == Z_STREAM_END);
  out.resize(out.size() - zs.avail_out);
  deflateEnd(&zs);
  return out;
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name, const std::string& bytes)
      : path(std::filesystem::temp_directory_path() / name) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("synthetic generator moments") {
  SUBCASE("first coordinate has unit variance") {
    Dataset ds = make_synthetic(100000, 1, 42);
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < ds.num_samples(); ++i) {
      const double v = column_entry(ds, i, 0);
      sum += v;
      sq += v * v;
    }
    const double mean = sum / ds.num_samples();
    const double var = sq / ds.num_samples() - mean * mean;
    CHECK(var == doctest::Approx(1.0).epsilon(0.01));
  }
  SUBCASE("coordinate variances decay as 1/j^2") {
    const int n = 100000, d = 3;
    Dataset ds = make_synthetic(n, d, 7);
    for (int j = 0; j < d; ++j) {
      double sum = 0.0, sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double v = column_entry(ds, i, j);
        sum += v;
        sq += v * v;
      }
      const double mean = sum / n;
      const double var = sq / n - mean * mean;
      CHECK(var == doctest::Approx(1.0 / ((j + 1.0) * (j + 1.0))).epsilon(0.03));
    }
  }
  SUBCASE("labels are the coordinate sum plus unit noise") {
    const int n = 100000, d = 3;
    Dataset ds = make_synthetic(n, d, 11);
    std::vector<double> ones(d, 1.0);
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double resid = ds.labels[i] - ds.A.column_dot(i, ones);
      sum += resid;
      sq += resid * resid;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
  }
  SUBCASE("deterministic for a fixed seed, distinct across seeds") {
    Dataset a = make_synthetic(50, 4, 3);
    Dataset b = make_synthetic(50, 4, 3);
    Dataset c = make_synthetic(50, 4, 4);
    CHECK(a.labels == b.labels);
    CHECK(to_libsvm(a) == to_libsvm(b));
    CHECK(to_libsvm(a) != to_libsvm(c));
  }
  SUBCASE("bad sizes throw") {
    CHECK_THROWS_AS(make_synthetic(0, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_synthetic(3, 0, 1), std::invalid_argument);
  }
}

TEST_CASE("libsvm parsing") {
  SUBCASE("basic two-line file") {
    Dataset ds = parse_libsvm("+1 1:0.5 3:2.0\n-1 2:1.0\n");
    REQUIRE(ds.num_samples() == 2);
    REQUIRE(ds.dim() == 3);
    CHECK(ds.labels == std::vector<double>{1.0, -1.0});
    CHECK(column_entry(ds, 0, 0) == 0.5);
    CHECK(column_entry(ds, 0, 1) == 0.0);
    CHECK(column_entry(ds, 0, 2) == 2.0);
    CHECK(column_entry(ds, 1, 1) == 1.0);
  }
  SUBCASE("blank lines and trailing spaces are tolerated") {
    Dataset ds = parse_libsvm("1 1:1 \n\n2 2:3\n");
    CHECK(ds.num_samples() == 2);
    CHECK(ds.labels == std::vector<double>{1.0, 2.0});
  }
  SUBCASE("zero-one labels become plus-minus one") {
    Dataset ds = parse_libsvm("0 1:1\n1 1:2\n");
    CHECK(ds.labels == std::vector<double>{-1.0, 1.0});
  }
  SUBCASE("regression targets are untouched") {
    Dataset ds = parse_libsvm("1.5 1:1\n2.5 1:2\n1 1:3\n");
    CHECK(ds.labels == std::vector<double>{1.5, 2.5, 1.0});
  }
  SUBCASE("a sample with no features is a zero column") {
    Dataset ds = parse_libsvm("3.0\n1.0 2:4\n");
    CHECK(ds.num_samples() == 2);
    CHECK(ds.dim() == 2);
    CHECK(ds.A.spectral_norm(0) == 0.0);
  }
  SUBCASE("dimension override pins trailing zero features") {
    Dataset ds = parse_libsvm("1 1:1\n", 5);
    CHECK(ds.dim() == 5);
    CHECK_THROWS_AS(parse_libsvm("1 3:1\n", 2), std::runtime_error);
  }
  SUBCASE("malformed input names the line") {
    auto line_of = [](const std::string& text) -> std::string {
      try {
        parse_libsvm(text);
      } catch (const std::runtime_error& ex) {
        return ex.what();
      }
      return "";
    };
    CHECK(line_of("abc 1:1\n").find("line 1") != std::string::npos);
    CHECK(line_of("1 1:1\n1 x:1\n").find("line 2") != std::string::npos);
    CHECK(line_of("1 1:1 1:2\n").find("line 1") != std::string::npos);
    CHECK(line_of("1 2:1 1:2\n").find("line 1") != std::string::npos);
    CHECK(line_of("1 0:1\n").find("line 1") != std::string::npos);
    CHECK(line_of("1 1:\n").find("line 1") != std::string::npos);
    CHECK(line_of("1 1:1trailing\n").find("line 1") != std::string::npos);
    CHECK_THROWS_AS(parse_libsvm(""), std::runtime_error);
  }
}

TEST_CASE("libsvm round trip is exact") {
  Dataset ds = make_synthetic(40, 7, 19);
  Dataset back = parse_libsvm(to_libsvm(ds), ds.dim());
  REQUIRE(back.num_samples() == ds.num_samples());
  REQUIRE(back.dim() == ds.dim());
  CHECK(back.labels == ds.labels);
  for (int i = 0; i < ds.num_samples(); ++i)
    for (int j = 0; j < ds.dim(); ++j)
      CHECK(column_entry(back, i, j) == column_entry(ds, i, j));
}

TEST_CASE("file loading sniffs gzip by magic bytes") {
  const std::string text = "+1 1:0.5 3:2.0\n-1 2:1.0\n";

  SUBCASE("plain file") {
    TempFile f("sepsaddle_plain.txt", text);
    Dataset ds = load_libsvm_file(f.path.string());
    CHECK(ds.num_samples() == 2);
    CHECK(ds.dim() == 3);
  }
  SUBCASE("gzip file without a .gz name") {
    TempFile f("sepsaddle_packed.bin", gzip_compress(text));
    Dataset ds = load_libsvm_file(f.path.string());
    CHECK(ds.num_samples() == 2);
    CHECK(column_entry(ds, 0, 2) == 2.0);
  }
  SUBCASE("truncated gzip stream is an error") {
    const std::string packed = gzip_compress(text);
    TempFile f("sepsaddle_trunc.gz", packed.substr(0, packed.size() / 2));
    CHECK_THROWS_AS(load_libsvm_file(f.path.string()), std::runtime_error);
  }
  SUBCASE("missing file is an error") {
    CHECK_THROWS_AS(load_libsvm_file("/nonexistent/nope.txt"),
                    std::runtime_error);
  }
}

TEST_CASE("bias append") {
  SUBCASE("zero sample gains norm exactly 1") {
    Dataset ds = parse_libsvm("1.0\n2.0 1:1\n");
    Dataset with = add_bias(ds);
    CHECK(with.dim() == ds.dim() + 1);
    CHECK(with.A.spectral_norm(0) == 1.0);
  }
  SUBCASE("norms grow pythagorean: (3,4) becomes sqrt 26") {
    Dataset ds = parse_libsvm("1 1:3 2:4\n");
    CHECK(ds.A.spectral_norm(0) == doctest::Approx(5.0));
    Dataset with = add_bias(ds);
    CHECK(with.A.spectral_norm(0) ==
          doctest::Approx(std::sqrt(26.0)).epsilon(1e-14));
    CHECK(column_entry(with, 0, 2) == 1.0);
  }
  SUBCASE("not idempotent: applying twice appends two coordinates") {
    Dataset ds = parse_libsvm("1 1:3 2:4\n");
    Dataset twice = add_bias(add_bias(ds));
    CHECK(twice.dim() == 4);
    CHECK(twice.A.spectral_norm(0) == doctest::Approx(std::sqrt(27.0)));
  }
  SUBCASE("labels are preserved") {
    Dataset ds = make_synthetic(10, 3, 2);
    CHECK(add_bias(ds).labels == ds.labels);
  }
}

TEST_CASE("dataset specs") {
  SUBCASE("synthetic spec") {
    Dataset ds = load_dataset("synthetic:n=30,d=5", 12);
    CHECK(ds.num_samples() == 30);
    CHECK(ds.dim() == 5);
    Dataset same = load_dataset("synthetic:d=5,n=30", 12);
    CHECK(to_libsvm(ds) == to_libsvm(same));
  }
  SUBCASE("malformed synthetic specs throw") {
    CHECK_THROWS_AS(load_dataset("synthetic:n=30", 1), std::invalid_argument);
    CHECK_THROWS_AS(load_dataset("synthetic:n=30,d=0", 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_dataset("synthetic:n=x,d=5", 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_dataset("synthetic:n=30,d=5,k=2", 1),
                    std::invalid_argument);
  }
  SUBCASE("anything else is a path") {
    TempFile f("sepsaddle_spec.txt", "1 1:1\n");
    Dataset ds = load_dataset(f.path.string(), 0);
    CHECK(ds.num_samples() == 1);
  }
}
