#include "bleubound/text.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>

#include "bleubound/errors.hpp"
#include "detail/kernels.hpp"

namespace bleubound {

TokenId Vocab::add(std::string_view token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

bool Vocab::contains(std::string_view token) const { return index_.find(token) != index_.end(); }

TokenId Vocab::id(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw UnknownToken(std::string(token));
  return it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw IdOutOfRange("token id " + std::to_string(id) + " outside vocab of size " +
                       std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

Matrix OneHotSeq::dense() const {
  Matrix m(rows(), vocab_size_);
  for (std::size_t i = 0; i < rows(); ++i) m(i, ids_[i]) = 1.0;
  return m;
}

DistMatrix DistMatrix::from_probs(Matrix probs) {
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double sum = 0.0;
    for (double p : probs.row(r)) {
      if (!std::isfinite(p)) throw NonFiniteInput("probability matrix has a non-finite entry");
      if (p < 0.0) throw InvalidConfig("probability matrix has a negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InvalidConfig("probability row " + std::to_string(r) + " sums to " +
                          std::to_string(sum));
    }
  }
  DistMatrix d;
  d.logits_ = Matrix(probs.rows(), probs.cols());
  auto logits = d.logits_.flat();
  auto flat = probs.flat();
  std::transform(flat.begin(), flat.end(), logits.begin(), [](double p) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  });
  d.probs_ = std::move(probs);
  return d;
}

DistMatrix DistMatrix::degenerate(const TokenSeq& seq, std::size_t vocab_size) {
  return from_probs(to_onehot(seq, vocab_size).dense());
}

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocab build_vocab(const std::vector<std::string>& corpus_lines) {
  Vocab vocab;
  for (const auto& line : corpus_lines) {
    for (auto tok : split_tokens(line)) vocab.add(tok);
  }
  return vocab;
}

TokenSeq encode(std::string_view line, const Vocab& vocab) {
  TokenSeq seq;
  for (auto tok : split_tokens(line)) seq.ids.push_back(vocab.id(tok));
  return seq;
}

std::string decode(const TokenSeq& seq, const Vocab& vocab) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab.token(seq[i]);
  }
  return out;
}

OneHotSeq to_onehot(const TokenSeq& seq, std::size_t vocab_size) {
  for (auto id : seq.ids) {
    if (id >= vocab_size) {
      throw IdOutOfRange("token id " + std::to_string(id) + " >= vocab size " +
                         std::to_string(vocab_size));
    }
  }
  OneHotSeq out;
  out.ids_ = seq;
  out.vocab_size_ = vocab_size;
  return out;
}

namespace {

// Integer test on the exponent bits so the scan vectorizes.
BLEUBOUND_VECTOR_CLONES
bool all_finite(std::span<const double> xs) {
  constexpr std::uint64_t kExponent = 0x7ff0000000000000ULL;
  std::uint64_t bad = 0;
  for (double x : xs) bad |= static_cast<std::uint64_t>((std::bit_cast<std::uint64_t>(x) & kExponent) == kExponent);
  return bad == 0;
}

}  // namespace

void softmax_rows_into(const Matrix& logits, Matrix& probs) {
  if (probs.rows() != logits.rows() || probs.cols() != logits.cols()) {
    probs = Matrix(logits.rows(), logits.cols());
  }
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto out = probs.row(r);
    if (!all_finite(in)) throw NonFiniteInput("logits contain a non-finite entry");
    if (!in.empty()) detail::softmax_row(in.data(), out.data(), in.size());
  }
}

DistMatrix softmax_rows(const Matrix& logits) {
  DistMatrix d;
  softmax_rows_into(logits, d.probs_);
  d.logits_ = logits;
  return d;
}

TokenSeq argmax_rows(const Matrix& m) {
  TokenSeq out;
  out.ids.reserve(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    // max_element returns the first maximum, which gives the lowest-index tie-break.
    out.ids.push_back(static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

TokenSeq argmax_decode(const DistMatrix& p) { return argmax_rows(p.probs()); }

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return lines;
}

Vocab load_vocab(const std::filesystem::path& path) {
  Vocab vocab;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    if (vocab.contains(line)) throw InvalidConfig("duplicate token in vocab file: '" + line + "'");
    vocab.add(line);
  }
  return vocab;
}

void save_vocab(const Vocab& vocab, std::ostream& out) {
  for (const auto& tok : vocab.tokens()) out << tok << '\n';
}

void save_vocab(const Vocab& vocab, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  save_vocab(vocab, out);
}

}  // namespace bleubound
