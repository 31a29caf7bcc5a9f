#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beatrisk/model_weights.hpp"
#include "beatrisk/record.hpp"

namespace beatrisk {

// ---------------------------------------------------------------------------
// .ecgb record bundles
//
//   ECGB 1
//   record_id=<text>
//   fs=<int>
//   n_samples=<int>
//   n_rpeaks=<int>
//   payload=inline|binary
//   payload_file=<name>            (binary only; defaults to <stem>.f32)
//   patient_label=0|1
//   segment_count=<int>            (optional, default 1)
//   rpeaks=<i>,<i>,...
//   beat_types=N,A,V,O,...
//   af_episodes=<start>:<end>,...  (half-open sample intervals)
//   segment_boundaries=<start>:<end>,...   (optional)
//   samples=<float>,...            (inline only)
//
// The binary sidecar is n_samples little-endian float32 values.
// ---------------------------------------------------------------------------

enum class PayloadMode { inline_text, binary };

EcgRecordBundle load_record_bundle(const std::filesystem::path& path);
void save_record_bundle(const std::filesystem::path& path, const EcgRecordBundle& record,
                        PayloadMode mode = PayloadMode::binary);

// ---------------------------------------------------------------------------
// .beats archives: text header, one `beat=` line per beat, then a `payload`
// line followed by count*length little-endian float32 values.
// ---------------------------------------------------------------------------

BeatArchive load_beat_archive(const std::filesystem::path& path);
void save_beat_archive(const std::filesystem::path& path, const BeatArchive& archive);

// ---------------------------------------------------------------------------
// .probs series
// ---------------------------------------------------------------------------

struct ProbabilityRow {
  std::size_t beat_index = 0;
  std::int64_t rpeak_sample = 0;
  double probability = 0.0;

  bool operator==(const ProbabilityRow&) const = default;
};

struct ProbabilitySeries {
  std::string record_id;
  std::uint32_t model_checksum = 0;
  std::optional<int> patient_label;
  std::vector<ProbabilityRow> rows;

  bool operator==(const ProbabilitySeries&) const = default;
};

ProbabilitySeries load_probability_series(const std::filesystem::path& path);
void save_probability_series(const std::filesystem::path& path, const ProbabilitySeries& series);

// ---------------------------------------------------------------------------
// .n1dw weights
//
//   "N1DW" | u32 version | u32 manifest_bytes | manifest (UTF-8 text)
//   | float32 payloads in manifest order | u32 CRC-32 of all preceding bytes
//
// All integers and floats little-endian.
// ---------------------------------------------------------------------------

std::string encode_weights(const ModelWeights& weights);
ModelWeights decode_weights(std::string_view bytes);
void save_weights(const std::filesystem::path& path, const ModelWeights& weights);
ModelWeights load_weights(const std::filesystem::path& path);

/// CRC-32 (IEEE) of the encoded weights; used as the model checksum in
/// probability series headers.
std::uint32_t weights_checksum(const ModelWeights& weights);

std::uint32_t crc32(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace beatrisk
