#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "edgehml/core.hpp"
#include "edgehml/rng.hpp"

namespace edgehml {

// ---------------------------------------------------------------------------
// Admission

struct Admitted {
  PseudoLabeledSample sample;
};
struct RejectedLowConfidence {};
struct RejectedOutOfTask {};
struct RejectedByCoin {};

using AdmissionDecision = std::variant<Admitted, RejectedLowConfidence, RejectedOutOfTask, RejectedByCoin>;

inline bool is_admitted(const AdmissionDecision& d) { return std::holds_alternative<Admitted>(d); }

// Confidence-gated candidate selection for the disk tier. `probs` must have
// one entry per class in the stream; argmax ties go to the lowest index.
// The coin is only flipped for confident in-task candidates.
AdmissionDecision consider(const Sample& u, const Eigen::Ref<const Eigen::VectorXd>& probs,
                           std::span<const ClassId> task_classes, double tau, double p_admit, Rng& rng);

// ---------------------------------------------------------------------------
// Pool file
//
//   header (32 bytes, little-endian):
//     "EHMLPOOL" | version u16 = 1 | dim u16 | capacity u32 | count u32 |
//     write_cursor u32 | 8 reserved bytes (zero)
//   record (16 + 4*dim bytes) at 32 + slot * record_size:
//     id u64 | pseudo_label u32 | confidence f32 | dim x f32

inline constexpr std::size_t kPoolHeaderSize = 32;
inline constexpr std::uint16_t kPoolVersion = 1;

struct PoolHeader {
  std::uint16_t version = kPoolVersion;
  std::uint16_t dim = 0;
  std::uint32_t capacity = 0;
  std::uint32_t count = 0;
  std::uint32_t write_cursor = 0;
};

inline constexpr std::size_t pool_record_size(std::size_t dim) { return 8 + 4 + 4 + 4 * dim; }

PoolHeader read_pool_header(const std::filesystem::path& path);

struct IndexEntry {
  std::uint64_t offset = 0;
  ClassId pseudo_label = 0;
  bool operator==(const IndexEntry&) const = default;
};

// Append-only ring of pseudo-labeled records on disk. Only the slot index and
// per-class counts live in RAM; features are read back on demand. The header
// (count, cursor) is persisted by flush(), which the offline phase calls.
class DiskPool {
 public:
  // Truncates/creates the file at `path`.
  static DiskPool create(const std::filesystem::path& path, std::size_t feature_dim, std::size_t capacity,
                         std::size_t num_classes);
  // Rebuilds index and class counts by scanning an existing file.
  static DiskPool rebuild_index(const std::filesystem::path& path, std::size_t capacity, std::size_t num_classes);

  DiskPool(DiskPool&&) noexcept = default;
  DiskPool& operator=(DiskPool&&) noexcept = default;
  ~DiskPool();

  std::size_t append(const PseudoLabeledSample& ps);
  std::vector<PseudoLabeledSample> sample_by_class_prob(std::span<const double> class_prob, std::size_t k,
                                                        Rng& rng);
  PseudoLabeledSample read(std::size_t slot);
  void flush();

  const std::filesystem::path& path() const { return path_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t count() const { return index_.size(); }
  std::size_t write_cursor() const { return cursor_; }
  std::size_t feature_dim() const { return dim_; }
  std::size_t num_classes() const { return class_num_.size(); }
  const std::vector<IndexEntry>& index() const { return index_; }
  const std::vector<std::size_t>& class_num() const { return class_num_; }
  // Number of disk reads performed since construction.
  std::size_t reads() const { return reads_; }

  bool invariants_hold() const;

 private:
  DiskPool(std::filesystem::path path, std::size_t dim, std::size_t capacity, std::size_t num_classes);
  void open_stream();

  std::filesystem::path path_;
  std::size_t dim_;
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<IndexEntry> index_;  // slot -> entry, size == count
  std::vector<std::size_t> class_num_;
  std::fstream file_;
  std::size_t reads_ = 0;
  bool dirty_ = false;
};

}  // namespace edgehml
