#pragma once

#include <memory>

#include "recovr/gallery.hpp"
#include "recovr/types.hpp"

namespace recovr {

struct ChannelConfig {
  int cutoff = 100;
  double negative_penalty = 0.5;
  // Drop items carrying any negative constraint instead of penalizing them.
  bool hard_negatives = false;

  void validate() const;
};

/// Weight of the cosine tie-refiner added to the overlap score.
inline constexpr double kCosineRefiner = 1e-3;

/// Overlap score of one item against a query:
///   |pos ∩ attrs| / max(1, |pos|) - penalty * |neg ∩ attrs| + 1e-3 * cos.
/// `query_feature` may be empty (no positives), in which case the cosine term is 0.
double overlap_score(const Item& item, const Query& query, std::span<const double> query_feature,
                     double negative_penalty);

/// Text-to-item channel. Throws InputError for a query with neither
/// positives nor free text.
RankedList t2v_retrieve(const Query& query, const Gallery& gallery, const ChannelConfig& config,
                        int turn = 0);

/// Anchor attributes with the edit's deltas applied and removals cleared.
AttributeMap implied_target(const Item& anchor, const EditInstruction& edit);

/// Composed channel: ranks against the implied target as all-positive
/// constraints. Throws InputError for an empty edit or an anchor outside the
/// gallery.
RankedList covr_retrieve(const Item& anchor, const EditInstruction& edit, const Gallery& gallery,
                         const ChannelConfig& config, int turn = 0);

/// Retrieval backend seam. The attribute backend below is the synthetic
/// default; an embedding-index adapter would implement the same two calls.
class RetrievalBackend {
 public:
  virtual ~RetrievalBackend() = default;
  virtual RankedList text_to_item(const Query& query, int turn) const = 0;
  virtual RankedList composed(const Item& anchor, const EditInstruction& edit, int turn) const = 0;
};

class AttributeBackend final : public RetrievalBackend {
 public:
  AttributeBackend(std::shared_ptr<const Gallery> gallery, ChannelConfig config);

  RankedList text_to_item(const Query& query, int turn) const override;
  RankedList composed(const Item& anchor, const EditInstruction& edit, int turn) const override;

 private:
  std::shared_ptr<const Gallery> gallery_;
  ChannelConfig config_;
};

}  // namespace recovr
