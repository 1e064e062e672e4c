#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bleubound/matrix.hpp"

namespace bleubound {

using TokenId = std::uint32_t;

// Token <-> id mapping. Ids are dense, 0..size()-1, in first-occurrence order.
class Vocab {
 public:
  Vocab() = default;

  // Appends `token` if absent; returns its id either way.
  TokenId add(std::string_view token);

  bool contains(std::string_view token) const;
  // Throws UnknownToken.
  TokenId id(std::string_view token) const;
  // Throws IdOutOfRange.
  const std::string& token(TokenId id) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> index_;
};

// An id-encoded sentence.
struct TokenSeq {
  std::vector<TokenId> ids;

  TokenSeq() = default;
  TokenSeq(std::initializer_list<TokenId> init) : ids(init) {}
  explicit TokenSeq(std::vector<TokenId> v) : ids(std::move(v)) {}

  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }
  TokenId operator[](std::size_t i) const noexcept { return ids[i]; }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

// One-hot encoding of a sentence as a [len x v] matrix. Stored as ids; the
// dense form is materialised on request only.
class OneHotSeq {
 public:
  OneHotSeq() = default;

  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  const TokenSeq& ids() const noexcept { return ids_; }

  double at(std::size_t row, std::size_t col) const noexcept {
    return ids_[row] == col ? 1.0 : 0.0;
  }
  Matrix dense() const;

 private:
  friend OneHotSeq to_onehot(const TokenSeq& seq, std::size_t vocab_size);
  TokenSeq ids_;
  std::size_t vocab_size_ = 0;
};

// Row-stochastic [len x v] matrix of per-position word distributions together
// with the logits it was derived from.
class DistMatrix {
 public:
  DistMatrix() = default;

  // Wraps an explicit probability matrix (used for degenerate, one-hot
  // distributions that no finite logits produce). Rows must be non-negative
  // and sum to 1 within 1e-9; logits are set to log(probs), so zero entries
  // get -inf logits. Throws NonFiniteInput / InvalidConfig.
  static DistMatrix from_probs(Matrix probs);

  // Degenerate distribution putting all mass on `seq`.
  static DistMatrix degenerate(const TokenSeq& seq, std::size_t vocab_size);

  std::size_t rows() const noexcept { return probs_.rows(); }
  std::size_t vocab_size() const noexcept { return probs_.cols(); }
  const Matrix& logits() const noexcept { return logits_; }
  const Matrix& probs() const noexcept { return probs_; }
  double prob(std::size_t row, std::size_t col) const noexcept { return probs_(row, col); }

 private:
  friend DistMatrix softmax_rows(const Matrix& logits);
  Matrix logits_;
  Matrix probs_;
};

// Whitespace tokenization; runs of spaces/tabs are separators.
std::vector<std::string_view> split_tokens(std::string_view line);

Vocab build_vocab(const std::vector<std::string>& corpus_lines);

// Throws UnknownToken.
TokenSeq encode(std::string_view line, const Vocab& vocab);
std::string decode(const TokenSeq& seq, const Vocab& vocab);

// Throws IdOutOfRange.
OneHotSeq to_onehot(const TokenSeq& seq, std::size_t vocab_size);

// Row-wise softmax with per-row max subtraction. Throws NonFiniteInput.
DistMatrix softmax_rows(const Matrix& logits);

// In-place variant used on hot paths; `probs` is resized as needed.
void softmax_rows_into(const Matrix& logits, Matrix& probs);

// Per-row index of the largest probability, ties to the lowest index.
TokenSeq argmax_decode(const DistMatrix& p);
TokenSeq argmax_rows(const Matrix& m);

// Corpus files: UTF-8, one sentence per line. Trailing '\r' is stripped.
// Throws IoError when the file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Vocab files: one token per line, line number = id.
Vocab load_vocab(const std::filesystem::path& path);
void save_vocab(const Vocab& vocab, std::ostream& out);
void save_vocab(const Vocab& vocab, const std::filesystem::path& path);

}  // namespace bleubound
