#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "readmit/datagen.hpp"
#include "readmit/embedder.hpp"
#include "readmit/ingest.hpp"
#include "readmit/matrix.hpp"

namespace readmit::featurize {

enum class BlockKind : int { Admissions = 0, Diagnoses, Procedures, Labevents, Notes };

inline constexpr std::array<BlockKind, 5> kAllBlocks{BlockKind::Admissions, BlockKind::Diagnoses,
                                                     BlockKind::Procedures, BlockKind::Labevents,
                                                     BlockKind::Notes};
inline constexpr std::size_t kMaxDiagnoses = 10;
inline constexpr std::size_t kMaxProcedures = 5;
inline constexpr std::size_t kNoteStride = 256;

std::string_view block_name(BlockKind kind);
BlockKind block_from_name(std::string_view name);
// Admissions and lab events are min-max scaled; the rest are embeddings.
bool is_minmax_block(BlockKind kind);

struct FeatureBlock {
  BlockKind kind = BlockKind::Admissions;
  Matrix values;
  // 1 where the admission had no data for this modality (row is all zero).
  std::vector<std::uint8_t> missing;
};

// A subset of blocks; admissions must always be present.
class BlockSelection {
 public:
  BlockSelection() = default;
  BlockSelection(std::initializer_list<BlockKind> kinds);

  static BlockSelection all();
  // Parses "admissions+labevents+notes" or "all".
  static BlockSelection parse(std::string_view text);

  bool contains(BlockKind k) const { return bits_ & (1u << static_cast<int>(k)); }
  void add(BlockKind k) { bits_ |= 1u << static_cast<int>(k); }
  bool operator==(const BlockSelection&) const = default;

  // Blocks in canonical order: admissions|diagnoses|procedures|labevents|notes.
  std::vector<BlockKind> kinds() const;
  std::string label() const;

 private:
  unsigned bits_ = 0;
};

// The five combinations of the ablation study followed by the full set.
std::vector<BlockSelection> ablation_selections();

struct BlockSpan {
  BlockKind kind;
  std::size_t offset;
  std::size_t width;
};

struct NodeFeatureMatrix {
  Matrix values;
  std::vector<BlockSpan> layout;
  std::vector<std::int64_t> admission_ids;
  // Hash of the scaler set applied, 0 while unscaled.
  std::uint64_t scaled_with = 0;
};

struct ColumnRange {
  double min = 0.0;
  double max = 0.0;
};

struct ScalerSet {
  // Keyed by absolute column of the assembled matrix; only min-max blocks.
  std::vector<std::size_t> columns;
  std::vector<ColumnRange> ranges;

  std::uint64_t fingerprint() const;
};

class CodeTextMap {
 public:
  CodeTextMap() = default;
  explicit CodeTextMap(const std::vector<datagen::CodeTitleRow>& rows);

  const std::string* find(std::string_view code, int version) const;

 private:
  std::unordered_map<std::string, std::string> titles_;
};

struct LabReport {
  std::size_t events_used = 0;
  std::size_t events_dropped = 0;  // item outside the vocabulary
};

// Numeric columns (age, month, LOS hours, days since previous) followed by
// the one-hot groups of schema::admission_categoricals(). Unknown category
// values are encoding errors naming the column and value.
FeatureBlock encode_admissions(const ingest::Cohort& cohort);

// Item vocabulary 50000 .. 50000+n-1, matching the generator's item ids.
std::vector<std::int64_t> default_item_vocab(std::size_t n_items);

// Fraction of abnormal events per item and admission; unmeasured items and
// admissions without labs are 0.
FeatureBlock encode_labevents(const datagen::RawTables& tables, const ingest::Cohort& cohort,
                              const std::vector<std::int64_t>& item_vocab, LabReport* report = nullptr);

// Sorted by seq_num (ties by icd_code), truncated to `limit`.
std::vector<datagen::CodeRow> select_codes(std::vector<datagen::CodeRow> codes, std::size_t limit);

// Mean embedding of the codes' titles; zero vector when `codes` is empty.
std::vector<double> embed_code_set(const std::vector<datagen::CodeRow>& codes, const CodeTextMap& titles,
                                   const Embedder& embedder);

// Window start offsets for a token sequence: multiples of the stride,
// stopping at the first window that reaches the end.
std::vector<std::size_t> note_window_offsets(std::size_t n_tokens, std::size_t window, std::size_t stride);

// Mean of window embeddings; empty text embeds to zeros.
std::vector<double> embed_note(std::string_view text, const Embedder& embedder);

FeatureBlock encode_codes(BlockKind kind, const std::vector<datagen::CodeRow>& rows,
                          const ingest::Cohort& cohort, const CodeTextMap& titles, const Embedder& embedder);
FeatureBlock encode_notes(const std::vector<datagen::NoteRow>& rows, const ingest::Cohort& cohort,
                          const Embedder& embedder);

struct FeatureOptions {
  std::size_t embed_dim = 768;
  std::uint64_t embed_seed = 0x5eed;
  std::size_t n_lab_items = 856;
};

// All five blocks, aligned with cohort.records.
std::vector<FeatureBlock> encode_all(const datagen::RawTables& tables, const ingest::Cohort& cohort,
                                     const FeatureOptions& options, LabReport* lab_report = nullptr);

NodeFeatureMatrix assemble(const std::vector<FeatureBlock>& blocks, const BlockSelection& selection,
                           const std::vector<std::int64_t>& admission_ids);

ScalerSet fit_scalers(const NodeFeatureMatrix& matrix, const std::vector<std::size_t>& train_rows);

// Min-max columns mapped into [0,1] (clamped; constant columns become 0),
// embedding blocks row-normalized to unit L2 norm. Applying the same scaler
// set to an already-scaled matrix is a no-op.
NodeFeatureMatrix apply_scalers(NodeFeatureMatrix matrix, const ScalerSet& scalers);

}  // namespace readmit::featurize
