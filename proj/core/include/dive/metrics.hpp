#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dive/embeddings.hpp"
#include "dive/graph.hpp"
#include "dive/parse_tree.hpp"

namespace dive {

struct GeneratedInference {
  std::string image_id;
  Relation relation = Relation::kBefore;
  std::string text;        // raw generated sentence
  std::string normalized;  // normalize_text(text)
  std::vector<std::string> tokens;  // whitespace split of normalized
  std::optional<ParseTree> parse;   // leaves must equal tokens when present
};

using GeneratedCorpus = std::vector<GeneratedInference>;

GeneratedInference make_inference(std::string image_id, Relation relation,
                                  std::string text,
                                  std::optional<ParseTree> parse = {});

// {"image_id", "relation", "text", "parse"?} per line.
GeneratedCorpus load_corpus_jsonl(const std::filesystem::path& path);

struct Reference {
  std::string text;
  std::vector<std::string> tokens;  // normalized tokens
};

// References keyed by (image_id, relation); one JSONL line per key:
// {"image_id", "relation", "references": [str, ...]}.
class ReferenceTable {
 public:
  void add(const std::string& image_id, Relation relation,
           std::span<const std::string> texts);
  const std::vector<Reference>& for_inference(const GeneratedInference& inf)
      const;  // throws DataError when missing
  std::size_t size() const { return table_.size(); }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [key, refs] : table_) fn(refs);
  }

  static ReferenceTable load_jsonl(const std::filesystem::path& path);

 private:
  std::map<std::pair<std::string, int>, std::vector<Reference>> table_;
};

/// Unigram counts over a training corpus; feeds the entropy metrics with
/// add-one smoothing: p(w) = (count(w) + 1) / (N + V + 1).
class UnigramModel {
 public:
  static UnigramModel from_token_sequences(
      std::span<const std::vector<std::string>> sequences);
  // Counts each edge's description once per edge (inference multiplicity).
  static UnigramModel from_graph(const VisualCommonsenseGraph& g);

  std::int64_t count(const std::string& token) const;
  std::int64_t total() const { return total_; }
  std::size_t vocab_size() const { return counts_.size(); }

 private:
  std::unordered_map<std::string, std::int64_t> counts_;
  std::int64_t total_ = 0;
};

double mean_length(const GeneratedCorpus& corpus);

// Distinct token n-grams pooled over the corpus; sentences shorter than n
// contribute none.
std::size_t dist_n(const GeneratedCorpus& corpus, std::size_t n);

// Mean over tokens of -log2 p(w) under the smoothed unigram model, in bits.
double word_entropy(const GeneratedInference& inf, const UnigramModel& m);

// Percentage of inferences whose normalized text occurs exactly once in the
// corpus (multiset reading).
double unique_pct(const GeneratedCorpus& corpus);

double novel_pct(const GeneratedCorpus& corpus,
                 const std::unordered_set<std::string>& train_descriptions);

// Fraction (x100) of texts whose true image ranks in the top k by cosine;
// ties broken by image row index ascending. `truth[i]` is the image row of
// text row i.
double recall_at_k(const EmbeddingMatrix& text_embs,
                   const EmbeddingMatrix& image_embs,
                   std::span<const std::size_t> truth, std::size_t k);

// Corpus-level BLEU with uniform weights over 1..max_order modified
// precisions, brevity penalty, closest-reference-length rule (ties favour
// the shorter reference). Any zero precision yields 0.
double bleu_n(const GeneratedCorpus& corpus, const ReferenceTable& refs,
              std::size_t max_order = 2);

// Plain CIDEr: tf-idf vectors over 1..4-grams with idf from the reference
// corpus (idf = ln((N+1) / max(df, 1)), strictly positive), cosine per
// order, averaged over orders and references, x10, mean over the corpus.
double cider(const GeneratedCorpus& corpus, const ReferenceTable& refs);

struct EntropyHistogram {
  double bin_width = 2.0;
  // (bin center, ratio); centers are multiples of bin_width covering
  // [center - width/2, center + width/2). Ratios sum to 1.
  std::vector<std::pair<double, double>> bins;
};

EntropyHistogram entropy_histogram(const GeneratedCorpus& corpus,
                                   const UnigramModel& m,
                                   double bin_width = 2.0);

enum class YngveSource { kParsed, kFallback, kMixed };
std::string_view to_string(YngveSource s);

struct MetricsReport {
  double length_mean = 0.0;
  double yngve_mean = 0.0;
  YngveSource yngve_source = YngveSource::kFallback;
  std::size_t dist2 = 0;
  std::size_t dist3 = 0;
  double entropy_mean = 0.0;
  double unique_pct = 0.0;
  double novel_pct = 0.0;
  double bleu2 = 0.0;
  double cider = 0.0;
};

MetricsReport evaluate_corpus(
    const GeneratedCorpus& corpus, const ReferenceTable& refs,
    const UnigramModel& unigram,
    const std::unordered_set<std::string>& train_descriptions);

struct RetrievalReport {
  std::vector<std::pair<std::size_t, double>> recall_at;  // ascending k
};

RetrievalReport retrieval_eval(const EmbeddingMatrix& text_embs,
                               const EmbeddingMatrix& image_embs,
                               std::span<const std::size_t> truth,
                               std::span<const std::size_t> ks);

std::string to_json_string(const MetricsReport& report);
std::string to_json_string(const EntropyHistogram& hist);
std::string to_json_string(const RetrievalReport& report);

}  // namespace dive
