#pragma once

/// \file matrix_market.hpp
/// \brief Matrix Market coordinate-format reader and writer.
///
/// Symmetric-storage files are expanded to full storage on load so that
/// graph traversal sees both edge directions; duplicate coordinates are
/// summed; pattern files get value 1.0 per entry. Indices are converted
/// between the file's 1-based and the internal 0-based convention at this
/// boundary.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "taskchol/csr_matrix.hpp"

namespace taskchol {

class MatrixMarketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string_view next_token(std::string_view& rest) {
  std::size_t b = 0;
  while (b < rest.size() && std::isspace(static_cast<unsigned char>(rest[b]))) ++b;
  std::size_t e = b;
  while (e < rest.size() && !std::isspace(static_cast<unsigned char>(rest[e]))) ++e;
  const std::string_view tok = rest.substr(b, e - b);
  rest = rest.substr(e);
  return tok;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace detail

/// Loads a coordinate-format Matrix Market file into full-storage CSR.
/// Accepts real, integer, or pattern fields with general or symmetric
/// symmetry; everything else is rejected with a descriptive error.
inline CsrMatrix load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MatrixMarketError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line))
    throw MatrixMarketError(path + ": empty file");

  {
    std::string_view rest(line);
    const std::string banner = detail::lower(detail::next_token(rest));
    const std::string object = detail::lower(detail::next_token(rest));
    const std::string format = detail::lower(detail::next_token(rest));
    const std::string field = detail::lower(detail::next_token(rest));
    const std::string symmetry = detail::lower(detail::next_token(rest));
    if (banner != "%%matrixmarket")
      throw MatrixMarketError(path + ": not a Matrix Market file");
    if (object != "matrix" || format != "coordinate")
      throw MatrixMarketError(path + ": only coordinate matrices are supported");
    if (field == "complex" || field == "hermitian")
      throw MatrixMarketError(path + ": complex field not supported");
    if (field != "real" && field != "integer" && field != "pattern")
      throw MatrixMarketError(path + ": unsupported field '" + field + "'");
    if (symmetry != "general" && symmetry != "symmetric")
      throw MatrixMarketError(path + ": unsupported symmetry '" + symmetry + "'");

    const bool pattern = field == "pattern";
    const bool symmetric = symmetry == "symmetric";

    // Size line (first non-comment, non-blank line).
    long long nrows = -1, ncols = -1, nnz = -1;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view sv(line);
      std::string_view probe = sv;
      const std::string_view tok = detail::next_token(probe);
      if (tok.empty() || tok.front() == '%') continue;
      std::string_view r(line);
      if (!detail::parse_number(detail::next_token(r), nrows) ||
          !detail::parse_number(detail::next_token(r), ncols) ||
          !detail::parse_number(detail::next_token(r), nnz))
        throw MatrixMarketError(path + ":" + std::to_string(lineno) +
                                ": malformed size line");
      break;
    }
    if (nnz < 0)
      throw MatrixMarketError(path + ": missing size line");
    if (nrows != ncols)
      throw MatrixMarketError(path + ": matrix is not square (" +
                              std::to_string(nrows) + "x" + std::to_string(ncols) + ")");

    std::vector<index_t> ti, tj;
    std::vector<double> tv;
    ti.reserve(symmetric ? 2 * nnz : nnz);
    tj.reserve(symmetric ? 2 * nnz : nnz);
    tv.reserve(symmetric ? 2 * nnz : nnz);

    long long seen = 0;
    while (seen < nnz && std::getline(in, line)) {
      ++lineno;
      std::string_view r(line);
      const std::string_view t1 = detail::next_token(r);
      if (t1.empty() || t1.front() == '%') continue;
      long long i = 0, j = 0;
      double v = 1.0;
      if (!detail::parse_number(t1, i) ||
          !detail::parse_number(detail::next_token(r), j))
        throw MatrixMarketError(path + ":" + std::to_string(lineno) +
                                ": malformed entry");
      if (!pattern) {
        if (!detail::parse_number(detail::next_token(r), v))
          throw MatrixMarketError(path + ":" + std::to_string(lineno) +
                                  ": malformed value");
      }
      if (i < 1 || i > nrows || j < 1 || j > ncols)
        throw MatrixMarketError(path + ":" + std::to_string(lineno) +
                                ": index out of range");
      ti.push_back(static_cast<index_t>(i - 1));
      tj.push_back(static_cast<index_t>(j - 1));
      tv.push_back(v);
      if (symmetric && i != j) {
        ti.push_back(static_cast<index_t>(j - 1));
        tj.push_back(static_cast<index_t>(i - 1));
        tv.push_back(v);
      }
      ++seen;
    }
    if (seen != nnz)
      throw MatrixMarketError(path + ": expected " + std::to_string(nnz) +
                              " entries, found " + std::to_string(seen));

    return csr_from_triplets(static_cast<index_t>(nrows),
                             static_cast<index_t>(ncols), std::move(ti),
                             std::move(tj), std::move(tv));
  }
}

/// Writes full (general) coordinate storage; values use the shortest
/// representation that round-trips through load exactly.
inline void write_matrix_market(const CsrMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MatrixMarketError("cannot open '" + path + "' for writing");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.nrows << ' ' << m.ncols << ' ' << m.nnz() << '\n';
  char buf[64];
  for (index_t i = 0; i < m.nrows; ++i) {
    for (offset_t q = m.row_begin(i); q < m.row_end(i); ++q) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), m.values[q]);
      out << (i + 1) << ' ' << (m.col_idx[q] + 1) << ' ';
      out.write(buf, ptr - buf);
      out << '\n';
    }
  }
  if (!out) throw MatrixMarketError("write failed for '" + path + "'");
}

}  // namespace taskchol
