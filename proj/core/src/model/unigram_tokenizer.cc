#include <algorithm>
#include <cstdio>
#include <limits>
#include <string>
#include <unordered_map>

#include "model/tokenizer_parts.h"
#include "promptrank/errors.h"
#include "promptrank/utf8.h"

namespace promptrank::model {
namespace {

constexpr double kUnknownPenalty = 10.0;

class Unigram : public PieceModel {
 public:
  explicit Unigram(const nlohmann::json& spec) {
    const auto& vocab = spec.at("vocab");
    pieces_.reserve(vocab.size());
    double min_score = std::numeric_limits<double>::infinity();
    for (const auto& entry : vocab) {
      const auto id = static_cast<TokenId>(pieces_.size());
      auto piece = entry.at(0).get<std::string>();
      const double score = entry.at(1).get<double>();
      min_score = std::min(min_score, score);
      max_piece_bytes_ = std::max(max_piece_bytes_, piece.size());
      index_.emplace(piece, Entry{id, score});
      pieces_.push_back(std::move(piece));
    }
    if (pieces_.empty()) throw BackendError("Unigram tokenizer has an empty vocabulary");
    if (!spec.contains("unk_id") || spec["unk_id"].is_null()) throw BackendError("Unigram tokenizer lacks unk_id");
    unk_id_ = spec["unk_id"].get<TokenId>();
    unk_score_ = min_score - kUnknownPenalty;
    byte_fallback_ = spec.value("byte_fallback", false);
  }

  void EncodePiece(std::string_view piece, std::vector<TokenId>& out) const override {
    const std::size_t n = piece.size();
    struct Node {
      std::size_t begin;
      TokenId id;
      double score;
    };
    // best[e]: highest total score of a segmentation of piece[0, e) and the
    // last node used. Candidate edges are visited in order of their start so
    // that ties keep the earliest-inserted path.
    std::vector<double> best(n + 1, -std::numeric_limits<double>::infinity());
    std::vector<Node> back(n + 1);
    std::vector<bool> reachable(n + 1, false);
    best[0] = 0.0;
    reachable[0] = true;

    for (std::size_t begin = 0; begin < n;) {
      std::size_t next = begin;
      utf8::Decode(piece, next);
      const std::size_t char_len = next - begin;
      if (reachable[begin]) {
        bool has_single = false;
        const std::size_t limit = std::min(max_piece_bytes_, n - begin);
        for (std::size_t len = 1; len <= limit; ++len) {
          auto it = index_.find(std::string(piece.substr(begin, len)));
          if (it == index_.end()) continue;
          if (len == char_len) has_single = true;
          Relax(best, back, reachable, begin, begin + len, it->second.id, it->second.score);
        }
        if (!has_single) Relax(best, back, reachable, begin, next, unk_id_, unk_score_);
      }
      begin = next;
    }

    std::vector<std::pair<std::size_t, TokenId>> path;  // (begin, id), reversed
    for (std::size_t e = n; e > 0;) {
      const Node& node = back[e];
      path.emplace_back(node.begin, node.id);
      e = node.begin;
    }
    std::reverse(path.begin(), path.end());

    bool previous_unknown = false;
    for (std::size_t i = 0; i < path.size(); ++i) {
      const auto [begin, id] = path[i];
      const bool unknown = id == unk_id_;
      if (unknown && byte_fallback_) {
        const std::size_t end = i + 1 < path.size() ? path[i + 1].first : n;
        if (EmitBytes(piece.substr(begin, end - begin), out)) continue;
      }
      if (unknown && previous_unknown) continue;  // consecutive unknowns fuse
      out.push_back(id);
      previous_unknown = unknown;
    }
  }

  std::size_t vocab_size() const override { return pieces_.size(); }

  std::optional<TokenId> TokenToId(std::string_view token) const override {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second.id;
  }

 private:
  struct Entry {
    TokenId id;
    double score;
  };

  template <typename NodeVec>
  static void Relax(std::vector<double>& best, NodeVec& back, std::vector<bool>& reachable, std::size_t begin,
                    std::size_t end, TokenId id, double score) {
    const double total = best[begin] + score;
    if (!reachable[end] || total > best[end]) {
      best[end] = total;
      back[end] = {begin, id, score};
      reachable[end] = true;
    }
  }

  bool EmitBytes(std::string_view bytes, std::vector<TokenId>& out) const {
    std::vector<TokenId> ids;
    for (unsigned char b : bytes) {
      char name[8];
      std::snprintf(name, sizeof(name), "<0x%02X>", b);
      auto it = index_.find(name);
      if (it == index_.end()) return false;
      ids.push_back(it->second.id);
    }
    out.insert(out.end(), ids.begin(), ids.end());
    return true;
  }

  std::vector<std::string> pieces_;
  std::unordered_map<std::string, Entry> index_;
  std::size_t max_piece_bytes_ = 0;
  TokenId unk_id_ = 0;
  double unk_score_ = 0.0;
  bool byte_fallback_ = false;
};

}  // namespace

std::unique_ptr<PieceModel> MakeUnigram(const nlohmann::json& spec) { return std::make_unique<Unigram>(spec); }

}  // namespace promptrank::model
