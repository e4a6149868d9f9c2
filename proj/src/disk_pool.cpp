#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "edgehml/detail/binary_io.hpp"
#include "edgehml/disk_pool.hpp"

namespace edgehml {

namespace {

constexpr std::array<std::uint8_t, 8> kPoolMagic = {'E', 'H', 'M', 'L', 'P', 'O', 'O', 'L'};

std::size_t argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  return best;
}

detail::ByteWriter encode_header(const PoolHeader& h) {
  detail::ByteWriter w(kPoolHeaderSize);
  w.put_bytes(kPoolMagic);
  w.put_uint<std::uint16_t>(h.version);
  w.put_uint<std::uint16_t>(h.dim);
  w.put_uint<std::uint32_t>(h.capacity);
  w.put_uint<std::uint32_t>(h.count);
  w.put_uint<std::uint32_t>(h.write_cursor);
  w.put_zeros(8);
  return w;
}

PoolHeader decode_header(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  auto magic = r.get_bytes(kPoolMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kPoolMagic.begin())) throw FormatError("pool file: bad magic");
  PoolHeader h;
  h.version = r.get_uint<std::uint16_t>();
  if (h.version != kPoolVersion) throw FormatError("pool file: unsupported version " + std::to_string(h.version));
  h.dim = r.get_uint<std::uint16_t>();
  h.capacity = r.get_uint<std::uint32_t>();
  h.count = r.get_uint<std::uint32_t>();
  h.write_cursor = r.get_uint<std::uint32_t>();
  if (h.count > h.capacity) throw FormatError("pool file: count exceeds capacity");
  if (h.capacity > 0 && h.write_cursor >= h.capacity) throw FormatError("pool file: write cursor out of range");
  if (h.count < h.capacity && h.write_cursor != h.count)
    throw FormatError("pool file: cursor inconsistent with count");
  return h;
}

PseudoLabeledSample decode_record(std::span<const std::uint8_t> bytes, std::size_t dim) {
  detail::ByteReader r(bytes);
  PseudoLabeledSample ps;
  ps.sample.id = r.get_uint<std::uint64_t>();
  ps.pseudo_label = r.get_uint<std::uint32_t>();
  ps.confidence = r.get_f32();
  ps.sample.features.resize(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) ps.sample.features[static_cast<Eigen::Index>(i)] = r.get_f32();
  return ps;
}

std::uint64_t record_offset(std::size_t slot, std::size_t dim) {
  return kPoolHeaderSize + static_cast<std::uint64_t>(slot) * pool_record_size(dim);
}

}  // namespace

AdmissionDecision consider(const Sample& u, const Eigen::Ref<const Eigen::VectorXd>& probs,
                           std::span<const ClassId> task_classes, double tau, double p_admit, Rng& rng) {
  if (probs.size() == 0) throw ShapeError("consider: empty probability vector");
  for (ClassId c : task_classes)
    if (c >= static_cast<std::size_t>(probs.size())) throw ShapeError("consider: task class outside probability vector");
  if (std::abs(probs.sum() - 1.0) > 1e-6 || probs.minCoeff() < 0.0)
    throw ShapeError("consider: probs is not a distribution");
  const std::size_t top = argmax_lowest(probs);
  const double conf = probs[static_cast<Eigen::Index>(top)];
  if (conf < tau) return RejectedLowConfidence{};
  if (std::find(task_classes.begin(), task_classes.end(), static_cast<ClassId>(top)) == task_classes.end())
    return RejectedOutOfTask{};
  if (!bernoulli(rng, p_admit)) return RejectedByCoin{};
  return Admitted{PseudoLabeledSample{u, static_cast<ClassId>(top), static_cast<float>(conf)}};
}

PoolHeader read_pool_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open pool file " + path.string());
  std::array<std::uint8_t, kPoolHeaderSize> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw FormatError("pool file: truncated header");
  return decode_header(buf);
}

DiskPool::DiskPool(std::filesystem::path path, std::size_t dim, std::size_t capacity, std::size_t num_classes)
    : path_(std::move(path)), dim_(dim), capacity_(capacity), class_num_(num_classes, 0) {
  if (capacity_ == 0 || capacity_ > 0xffffffffULL) throw CapacityError("disk pool capacity must be in [1, 2^32)");
  if (dim_ == 0 || dim_ > 0xffff) throw ShapeError("disk pool feature dim must be in [1, 65535]");
  if (num_classes == 0) throw ShapeError("disk pool needs at least one class");
}

void DiskPool::open_stream() {
  file_.open(path_, std::ios::binary | std::ios::in | std::ios::out);
  if (!file_) throw IoError("cannot open pool file " + path_.string());
}

DiskPool DiskPool::create(const std::filesystem::path& path, std::size_t feature_dim, std::size_t capacity,
                          std::size_t num_classes) {
  DiskPool pool(path, feature_dim, capacity, num_classes);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create pool file " + path.string());
  }
  pool.open_stream();
  pool.dirty_ = true;
  pool.flush();
  return pool;
}

DiskPool DiskPool::rebuild_index(const std::filesystem::path& path, std::size_t capacity, std::size_t num_classes) {
  const PoolHeader h = read_pool_header(path);
  if (h.capacity != capacity)
    throw FormatError("pool file: capacity " + std::to_string(h.capacity) + " does not match expected " +
                      std::to_string(capacity));
  DiskPool pool(path, h.dim, capacity, num_classes);
  pool.open_stream();
  const std::size_t rs = pool_record_size(h.dim);
  std::vector<std::uint8_t> buf(rs);
  pool.index_.reserve(h.count);
  pool.file_.seekg(static_cast<std::streamoff>(kPoolHeaderSize));
  for (std::size_t slot = 0; slot < h.count; ++slot) {
    pool.file_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(rs));
    if (pool.file_.gcount() != static_cast<std::streamsize>(rs))
      throw FormatError("pool file: truncated record at slot " + std::to_string(slot));
    const PseudoLabeledSample ps = decode_record(buf, h.dim);
    if (ps.pseudo_label >= num_classes)
      throw FormatError("pool file: record " + std::to_string(slot) + " has label " +
                        std::to_string(ps.pseudo_label) + " >= " + std::to_string(num_classes));
    pool.index_.push_back({record_offset(slot, h.dim), ps.pseudo_label});
    ++pool.class_num_[ps.pseudo_label];
  }
  pool.cursor_ = h.write_cursor;
  return pool;
}

DiskPool::~DiskPool() {
  if (file_.is_open() && dirty_) {
    try {
      flush();
    } catch (...) {
    }
  }
}

std::size_t DiskPool::append(const PseudoLabeledSample& ps) {
  if (ps.pseudo_label >= class_num_.size()) throw ShapeError("append: pseudo label out of range");
  if (static_cast<std::size_t>(ps.sample.features.size()) != dim_) throw ShapeError("append: feature dim mismatch");
  detail::ByteWriter w(pool_record_size(dim_));
  w.put_uint<std::uint64_t>(ps.sample.id);
  w.put_uint<std::uint32_t>(ps.pseudo_label);
  w.put_f32(ps.confidence);
  for (Eigen::Index i = 0; i < ps.sample.features.size(); ++i) w.put_f32(ps.sample.features[i]);

  const std::size_t slot = cursor_;
  const std::uint64_t offset = record_offset(slot, dim_);
  file_.seekp(static_cast<std::streamoff>(offset));
  file_.write(w.data(), static_cast<std::streamsize>(w.size()));
  if (!file_) {
    file_.clear();
    throw IoError("pool file: write failed at slot " + std::to_string(slot));
  }

  if (slot < index_.size()) {
    --class_num_[index_[slot].pseudo_label];
    index_[slot] = {offset, ps.pseudo_label};
  } else {
    index_.push_back({offset, ps.pseudo_label});
  }
  ++class_num_[ps.pseudo_label];
  cursor_ = (cursor_ + 1) % capacity_;
  dirty_ = true;
  return slot;
}

PseudoLabeledSample DiskPool::read(std::size_t slot) {
  if (slot >= index_.size()) throw IoError("pool read: slot " + std::to_string(slot) + " not populated");
  const std::size_t rs = pool_record_size(dim_);
  std::vector<std::uint8_t> buf(rs);
  file_.seekg(static_cast<std::streamoff>(index_[slot].offset));
  file_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(rs));
  if (file_.gcount() != static_cast<std::streamsize>(rs)) {
    file_.clear();
    throw IoError("pool read failed at slot " + std::to_string(slot));
  }
  ++reads_;
  return decode_record(buf, dim_);
}

std::vector<PseudoLabeledSample> DiskPool::sample_by_class_prob(std::span<const double> class_prob, std::size_t k,
                                                                Rng& rng) {
  if (class_prob.size() != class_num_.size())
    throw ShapeError("class_prob has " + std::to_string(class_prob.size()) + " entries, pool has " +
                     std::to_string(class_num_.size()) + " classes");
  std::vector<PseudoLabeledSample> out;
  if (k == 0 || index_.empty()) return out;

  std::vector<std::vector<std::size_t>> buckets(class_num_.size());
  for (std::size_t slot = 0; slot < index_.size(); ++slot) buckets[index_[slot].pseudo_label].push_back(slot);

  out.reserve(std::min(k, index_.size()));
  while (out.size() < k) {
    double total = 0.0;
    for (std::size_t c = 0; c < buckets.size(); ++c)
      if (!buckets[c].empty()) total += class_prob[c];
    if (!(total > 0.0)) break;

    const double r = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t chosen = buckets.size();
    for (std::size_t c = 0; c < buckets.size(); ++c) {
      if (buckets[c].empty() || class_prob[c] <= 0.0) continue;
      chosen = c;
      acc += class_prob[c];
      if (r < acc) break;
    }
    auto& bucket = buckets[chosen];
    const std::size_t pick = uniform_index(rng, bucket.size());
    const std::size_t slot = bucket[pick];
    bucket[pick] = bucket.back();
    bucket.pop_back();
    out.push_back(read(slot));
  }
  return out;
}

void DiskPool::flush() {
  PoolHeader h;
  h.dim = static_cast<std::uint16_t>(dim_);
  h.capacity = static_cast<std::uint32_t>(capacity_);
  h.count = static_cast<std::uint32_t>(index_.size());
  h.write_cursor = static_cast<std::uint32_t>(cursor_);
  const auto w = encode_header(h);
  file_.seekp(0);
  file_.write(w.data(), static_cast<std::streamsize>(w.size()));
  file_.flush();
  if (!file_) {
    file_.clear();
    throw IoError("pool file: header flush failed");
  }
  dirty_ = false;
}

bool DiskPool::invariants_hold() const {
  std::size_t sum = 0;
  for (auto n : class_num_) sum += n;
  if (sum != index_.size() || index_.size() > capacity_) return false;
  for (std::size_t slot = 0; slot < index_.size(); ++slot)
    if (index_[slot].offset != record_offset(slot, dim_)) return false;
  return index_.size() == capacity_ || cursor_ == index_.size();
}

}  // namespace edgehml
