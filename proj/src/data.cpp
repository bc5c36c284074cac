#include "sepsaddle/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string_view>

#include <fmt/format.h>
#include <zlib.h>

namespace sepsaddle {

Dataset make_synthetic(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1)
    throw std::invalid_argument("make_synthetic: n and d must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> standard(0.0, 1.0);

  std::vector<std::vector<double>> cols(n);
  std::vector<double> labels(n);
  for (int i = 0; i < n; ++i) {
    cols[i].resize(d);
    double signal = 0.0;
    for (int j = 0; j < d; ++j) {
      // coordinate variance j^-2 (1-based), so later features fade out
      cols[i][j] = standard(rng) / (j + 1);
      signal += cols[i][j];  // planted predictor is all-ones
    }
    labels[i] = signal + standard(rng);
  }
  return {BlockMatrix::from_columns(d, cols), std::move(labels)};
}

namespace {

double parse_double(std::string_view tok, int line_no, const char* what) {
  double value = 0.0;
  auto body = tok;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);  // "+1" labels
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (body.empty() || ec != std::errc() || ptr != body.data() + body.size())
    throw std::runtime_error(fmt::format("libsvm line {}: bad {} '{}'",
                                         line_no, what, tok));
  return value;
}

int parse_index(std::string_view tok, int line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || value < 1)
    throw std::runtime_error(
        fmt::format("libsvm line {}: bad feature index '{}'", line_no, tok));
  return value;
}

std::string_view next_token(std::string_view& rest) {
  const auto start = rest.find_first_not_of(" \t\r");
  if (start == std::string_view::npos) {
    rest = {};
    return {};
  }
  auto end = rest.find_first_of(" \t\r", start);
  if (end == std::string_view::npos) end = rest.size();
  auto tok = rest.substr(start, end - start);
  rest = rest.substr(end);
  return tok;
}

}  // namespace

Dataset parse_libsvm(const std::string& text, int dim_override) {
  std::vector<double> labels;
  std::vector<BlockMatrix::Entry> entries;  // col = sample index
  int max_index = 0;
  int line_no = 0;
  std::size_t pos = 0;

  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    std::string_view rest = line;
    auto tok = next_token(rest);
    if (tok.empty()) continue;  // blank line

    const int sample = static_cast<int>(labels.size());
    labels.push_back(parse_double(tok, line_no, "label"));

    int prev_index = 0;
    while (!(tok = next_token(rest)).empty()) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0 ||
          colon + 1 == tok.size())
        throw std::runtime_error(fmt::format(
            "libsvm line {}: expected index:value, got '{}'", line_no, tok));
      const int index = parse_index(tok.substr(0, colon), line_no);
      if (index <= prev_index)
        throw std::runtime_error(fmt::format(
            "libsvm line {}: index {} not increasing (previous {})", line_no,
            index, prev_index));
      prev_index = index;
      max_index = std::max(max_index, index);
      const double value =
          parse_double(tok.substr(colon + 1), line_no, "value");
      if (value != 0.0) entries.push_back({index - 1, sample, value});
    }
  }

  if (labels.empty()) throw std::runtime_error("libsvm: no samples");
  int d = std::max(max_index, 1);
  if (dim_override > 0) {
    if (dim_override < max_index)
      throw std::runtime_error(
          fmt::format("libsvm: dimension override {} below max index {}",
                      dim_override, max_index));
    d = dim_override;
  }

  // {0,1} labels follow the other classification convention; remap. Any
  // other label set is passed through untouched.
  const bool zero_one = std::all_of(labels.begin(), labels.end(),
                                    [](double b) {
                                      return b == 0.0 || b == 1.0;
                                    }) &&
                        std::any_of(labels.begin(), labels.end(),
                                    [](double b) { return b == 0.0; });
  if (zero_one)
    for (double& b : labels) b = b == 0.0 ? -1.0 : 1.0;

  const int n = static_cast<int>(labels.size());
  return {BlockMatrix(d, std::vector<int>(n, 1), std::move(entries)),
          std::move(labels)};
}

namespace {

std::string gunzip(const std::string& in) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK)  // auto-detect gzip/zlib headers
    throw std::runtime_error("gzip: inflateInit failed");
  std::string out(std::max<std::size_t>(in.size() * 4, 1 << 16), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  std::size_t written = 0;
  int ret = Z_OK;
  while (ret != Z_STREAM_END) {
    if (written == out.size()) out.resize(out.size() * 2);
    zs.next_out = reinterpret_cast<Bytef*>(out.data()) + written;
    zs.avail_out = static_cast<uInt>(out.size() - written);
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      std::string msg = zs.msg ? zs.msg : fmt::format("code {}", ret);
      inflateEnd(&zs);
      throw std::runtime_error(fmt::format("gzip: inflate failed ({})", msg));
    }
    written = out.size() - zs.avail_out;
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

}  // namespace

Dataset load_libsvm_file(const std::string& path, int dim_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error(fmt::format("cannot open '{}'", path));
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
      static_cast<unsigned char>(bytes[1]) == 0x8b)
    bytes = gunzip(bytes);
  return parse_libsvm(bytes, dim_override);
}

std::string to_libsvm(const Dataset& data) {
  std::string out;
  const int n = data.num_samples();
  std::vector<double> col(data.dim());
  const double one = 1.0;
  for (int i = 0; i < n; ++i) {
    out += fmt::format("{}", data.labels[i]);
    data.A.block_matvec(i, std::span<const double>(&one, 1), col);
    for (int j = 0; j < data.dim(); ++j)
      if (col[j] != 0.0) out += fmt::format(" {}:{}", j + 1, col[j]);
    out += '\n';
  }
  return out;
}

Dataset add_bias(const Dataset& data) {
  const int d = data.dim();
  const int n = data.num_samples();
  std::vector<BlockMatrix::Entry> entries;
  entries.reserve(static_cast<std::size_t>(data.A.nnz()) + n);
  std::vector<double> col(d);
  const double one = 1.0;
  for (int i = 0; i < n; ++i) {
    data.A.block_matvec(i, std::span<const double>(&one, 1), col);
    for (int j = 0; j < d; ++j)
      if (col[j] != 0.0) entries.push_back({j, i, col[j]});
    entries.push_back({d, i, 1.0});
  }
  return {BlockMatrix(d + 1, std::vector<int>(n, 1), std::move(entries)),
          data.labels};
}

Dataset load_dataset(const std::string& spec, std::uint64_t seed,
                     int dim_override) {
  constexpr std::string_view prefix = "synthetic:";
  if (spec.rfind(prefix, 0) == 0) {
    int n = 0, d = 0;
    std::string_view rest(spec);
    rest.remove_prefix(prefix.size());
    while (!rest.empty()) {
      auto comma = rest.find(',');
      auto kv = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{}
                                             : rest.substr(comma + 1);
      auto eq = kv.find('=');
      if (eq == std::string_view::npos)
        throw std::invalid_argument(
            fmt::format("synthetic spec: expected key=value, got '{}'", kv));
      auto key = kv.substr(0, eq);
      int value = 0;
      auto val = kv.substr(eq + 1);
      auto [ptr, ec] =
          std::from_chars(val.data(), val.data() + val.size(), value);
      if (ec != std::errc() || ptr != val.data() + val.size() || value < 1)
        throw std::invalid_argument(
            fmt::format("synthetic spec: bad value '{}'", kv));
      if (key == "n")
        n = value;
      else if (key == "d")
        d = value;
      else
        throw std::invalid_argument(
            fmt::format("synthetic spec: unknown key '{}'", key));
    }
    if (n < 1 || d < 1)
      throw std::invalid_argument("synthetic spec: need n=..,d=..");
    return make_synthetic(n, d, seed);
  }
  return load_libsvm_file(spec, dim_override);
}

}  // namespace sepsaddle
