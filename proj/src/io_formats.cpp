#include "beatrisk/io_formats.hpp"

#include <zlib.h>

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "beatrisk/error.hpp"

namespace beatrisk {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = pos + 1;
  }
  return out;
}

template <class Int>
Int parse_int(std::string_view s, std::string_view field) {
  Int v{};
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != end) {
    throw Error("schema violation in field '" + std::string(field) + "': bad integer '" + std::string(s) + "'");
  }
  return v;
}

template <class Real>
Real parse_real(std::string_view s, std::string_view field) {
  Real v{};
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != end) {
    throw Error("schema violation in field '" + std::string(field) + "': bad number '" + std::string(s) + "'");
  }
  return v;
}

template <class Real>
void append_real(std::string& out, Real v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

template <class Int>
void append_int(std::string& out, Int v) {
  out += std::to_string(v);
}

std::vector<Interval> parse_intervals(std::string_view s, std::string_view field) {
  std::vector<Interval> out;
  for (auto item : split(s, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw Error("schema violation in field '" + std::string(field) + "': expected start:end");
    }
    out.push_back(Interval{parse_int<std::int64_t>(item.substr(0, colon), field),
                           parse_int<std::int64_t>(item.substr(colon + 1), field)});
  }
  return out;
}

std::string format_intervals(const std::vector<Interval>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i].start) + ":" + std::to_string(v[i].end);
  }
  return out;
}

void check_text_value(std::string_view v, std::string_view field) {
  if (v.empty() || v.find('\n') != std::string_view::npos || v.find('\r') != std::string_view::npos) {
    throw Error("field '" + std::string(field) + "' must be a non-empty single line");
  }
}

/// key=value header with unknown and duplicate keys rejected.
class Header {
 public:
  Header(const std::vector<std::string_view>& lines, std::size_t first, std::size_t last,
         const std::set<std::string, std::less<>>& allowed) {
    for (std::size_t i = first; i < last; ++i) {
      const auto line = lines[i];
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw Error("schema violation: header line without '=': " + std::string(line));
      std::string key(line.substr(0, eq));
      if (!allowed.count(key)) throw Error("schema violation: unknown field '" + key + "'");
      if (!fields_.emplace(key, line.substr(eq + 1)).second) {
        throw Error("schema violation: duplicate field '" + key + "'");
      }
    }
  }

  bool has(const std::string& key) const { return fields_.count(key) != 0; }

  std::string_view get(const std::string& key) const {
    auto it = fields_.find(key);
    if (it == fields_.end()) throw Error("schema violation: missing field '" + key + "'");
    return it->second;
  }

 private:
  std::map<std::string, std::string_view, std::less<>> fields_;
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

float get_f32(std::string_view bytes, std::size_t offset) {
  const std::uint32_t bits = get_u32(bytes, offset);
  float f = 0.0f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

std::string encode_f32_array(const std::vector<float>& v) {
  std::string out;
  out.reserve(v.size() * 4);
  for (float f : v) put_f32(out, f);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

std::uint32_t crc32(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

// ---------------------------------------------------------------------------
// Record bundles
// ---------------------------------------------------------------------------

EcgRecordBundle load_record_bundle(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing file " + path.string());
  const std::string text = read_file(path);
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != "ECGB 1") throw Error("schema violation: not an ECGB version 1 bundle");
  static const std::set<std::string, std::less<>> allowed{
      "record_id", "fs", "n_samples", "n_rpeaks", "payload", "payload_file", "patient_label",
      "segment_count", "rpeaks", "beat_types", "af_episodes", "segment_boundaries", "samples"};
  const Header h(lines, 1, lines.size(), allowed);

  EcgRecordBundle r;
  r.record_id = std::string(h.get("record_id"));
  check_text_value(r.record_id, "record_id");
  r.fs = parse_int<int>(h.get("fs"), "fs");
  const auto n_samples = parse_int<std::size_t>(h.get("n_samples"), "n_samples");
  const auto n_rpeaks = parse_int<std::size_t>(h.get("n_rpeaks"), "n_rpeaks");
  r.patient_label = parse_int<int>(h.get("patient_label"), "patient_label");
  if (h.has("segment_count")) r.segment_count = parse_int<int>(h.get("segment_count"), "segment_count");

  for (auto item : split(h.get("rpeaks"), ',')) r.rpeaks.push_back(parse_int<std::int64_t>(item, "rpeaks"));
  for (auto item : split(h.get("beat_types"), ',')) {
    try {
      r.beat_types.push_back(parse_beat_code(item));
    } catch (const Error& e) {
      throw Error(std::string("schema violation in field 'beat_types': ") + e.what());
    }
  }
  if (r.rpeaks.size() != n_rpeaks) throw Error("schema violation in field 'rpeaks': count differs from n_rpeaks");
  if (r.beat_types.size() != n_rpeaks) {
    throw Error("schema violation in field 'beat_types': count differs from n_rpeaks");
  }
  r.af_episodes = parse_intervals(h.get("af_episodes"), "af_episodes");
  if (h.has("segment_boundaries")) r.segment_boundaries = parse_intervals(h.get("segment_boundaries"), "segment_boundaries");

  const auto payload = h.get("payload");
  if (payload == "inline") {
    if (h.has("payload_file")) throw Error("schema violation in field 'payload_file': not allowed for inline payload");
    for (auto item : split(h.get("samples"), ',')) r.samples.push_back(parse_real<float>(item, "samples"));
  } else if (payload == "binary") {
    if (h.has("samples")) throw Error("schema violation in field 'samples': not allowed for binary payload");
    fs::path sidecar = path;
    sidecar.replace_extension(".f32");
    if (h.has("payload_file")) {
      const auto name = h.get("payload_file");
      check_text_value(name, "payload_file");
      sidecar = path.parent_path() / std::string(name);
    }
    if (!fs::exists(sidecar)) throw Error("missing file " + sidecar.string());
    const std::string bytes = read_file(sidecar);
    if (bytes.size() != n_samples * 4) {
      throw Error("schema violation in field 'n_samples': sidecar holds " + std::to_string(bytes.size() / 4) + " samples");
    }
    r.samples.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) r.samples[i] = get_f32(bytes, 4 * i);
  } else {
    throw Error("schema violation in field 'payload': expected inline or binary");
  }
  if (r.samples.size() != n_samples) throw Error("schema violation in field 'samples': count differs from n_samples");
  validate(r);
  return r;
}

void save_record_bundle(const fs::path& path, const EcgRecordBundle& r, PayloadMode mode) {
  validate(r);
  check_text_value(r.record_id, "record_id");
  std::string out = "ECGB 1\n";
  out += "record_id=" + r.record_id + "\n";
  out += "fs=" + std::to_string(r.fs) + "\n";
  out += "n_samples=" + std::to_string(r.samples.size()) + "\n";
  out += "n_rpeaks=" + std::to_string(r.rpeaks.size()) + "\n";
  fs::path sidecar = path;
  sidecar.replace_extension(".f32");
  if (mode == PayloadMode::binary) {
    out += "payload=binary\n";
    out += "payload_file=" + sidecar.filename().string() + "\n";
  } else {
    out += "payload=inline\n";
  }
  out += "patient_label=" + std::to_string(r.patient_label) + "\n";
  out += "segment_count=" + std::to_string(r.segment_count) + "\n";
  out += "rpeaks=";
  for (std::size_t i = 0; i < r.rpeaks.size(); ++i) {
    if (i) out += ',';
    append_int(out, r.rpeaks[i]);
  }
  out += "\nbeat_types=";
  for (std::size_t i = 0; i < r.beat_types.size(); ++i) {
    if (i) out += ',';
    out += beat_code(r.beat_types[i]);
  }
  out += "\naf_episodes=" + format_intervals(r.af_episodes) + "\n";
  if (!r.segment_boundaries.empty()) out += "segment_boundaries=" + format_intervals(r.segment_boundaries) + "\n";
  if (mode == PayloadMode::inline_text) {
    out += "samples=";
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      if (i) out += ',';
      append_real(out, r.samples[i]);
    }
    out += "\n";
  } else {
    write_file(sidecar, encode_f32_array(r.samples));
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Beat archives
// ---------------------------------------------------------------------------

BeatArchive load_beat_archive(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing file " + path.string());
  const std::string text = read_file(path);
  const std::string_view view(text);
  const std::string marker = "\npayload\n";
  const auto mpos = view.find(marker);
  if (mpos == std::string_view::npos) throw Error("schema violation: beat archive has no payload marker");
  const auto lines = lines_of(view.substr(0, mpos + 1));
  if (lines.empty() || lines[0] != "BEATS 1") throw Error("schema violation: not a BEATS version 1 archive");

  std::vector<std::string_view> header_lines;
  std::vector<std::string_view> beat_lines;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].rfind("beat=", 0) == 0) {
      beat_lines.push_back(lines[i].substr(5));
    } else {
      header_lines.push_back(lines[i]);
    }
  }
  const Header h(header_lines, 0, header_lines.size(), {"record_id", "length", "count"});
  BeatArchive a;
  a.record_id = std::string(h.get("record_id"));
  check_text_value(a.record_id, "record_id");
  a.length = parse_int<std::size_t>(h.get("length"), "length");
  const auto count = parse_int<std::size_t>(h.get("count"), "count");
  if (beat_lines.size() != count) throw Error("schema violation in field 'count': beat lines differ from count");

  const std::string_view payload = view.substr(mpos + marker.size());
  if (payload.size() != count * a.length * 4) throw Error("schema violation: payload size does not match count*length");
  for (std::size_t i = 0; i < count; ++i) {
    const auto parts = split(beat_lines[i], ',');
    if (parts.size() != 5) throw Error("schema violation in field 'beat': expected 5 values");
    Beat b;
    b.ordinal = parse_int<std::size_t>(parts[0], "beat.ordinal");
    b.rpeak_index = parse_int<std::int64_t>(parts[1], "beat.rpeak");
    try {
      b.type = parse_beat_code(parts[2]);
    } catch (const Error& e) {
      throw Error(std::string("schema violation in field 'beat.type': ") + e.what());
    }
    b.left = parse_int<std::int64_t>(parts[3], "beat.left");
    b.right = b.left + static_cast<std::int64_t>(a.length);
    a.labels.push_back(parse_int<int>(parts[4], "beat.label"));
    b.samples.resize(a.length);
    for (std::size_t j = 0; j < a.length; ++j) b.samples[j] = get_f32(payload, 4 * (i * a.length + j));
    a.beats.push_back(std::move(b));
  }
  validate(a);
  return a;
}

void save_beat_archive(const fs::path& path, const BeatArchive& a) {
  validate(a);
  check_text_value(a.record_id, "record_id");
  std::string out = "BEATS 1\n";
  out += "record_id=" + a.record_id + "\n";
  out += "length=" + std::to_string(a.length) + "\n";
  out += "count=" + std::to_string(a.beats.size()) + "\n";
  for (std::size_t i = 0; i < a.beats.size(); ++i) {
    const Beat& b = a.beats[i];
    out += "beat=" + std::to_string(b.ordinal) + "," + std::to_string(b.rpeak_index) + "," + beat_code(b.type) + "," +
           std::to_string(b.left) + "," + std::to_string(a.labels[i]) + "\n";
  }
  out += "payload\n";
  for (const auto& b : a.beats) out += encode_f32_array(b.samples);
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Probability series
// ---------------------------------------------------------------------------

ProbabilitySeries load_probability_series(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing file " + path.string());
  const std::string text = read_file(path);
  const auto lines = lines_of(text);
  std::vector<std::string_view> header;
  std::size_t i = 0;
  for (; i < lines.size() && lines[i].rfind("# ", 0) == 0; ++i) header.push_back(lines[i].substr(2));
  const Header h(header, 0, header.size(), {"record_id", "model_checksum", "patient_label"});
  ProbabilitySeries s;
  s.record_id = std::string(h.get("record_id"));
  check_text_value(s.record_id, "record_id");
  const auto crc_text = h.get("model_checksum");
  {
    std::uint32_t v = 0;
    const auto* end = crc_text.data() + crc_text.size();
    const auto res = std::from_chars(crc_text.data(), end, v, 16);
    if (crc_text.size() != 8 || res.ec != std::errc{} || res.ptr != end) {
      throw Error("schema violation in field 'model_checksum': expected 8 hex digits");
    }
    s.model_checksum = v;
  }
  if (h.has("patient_label")) {
    const int label = parse_int<int>(h.get("patient_label"), "patient_label");
    if (label != 0 && label != 1) throw Error("schema violation in field 'patient_label': expected 0 or 1");
    s.patient_label = label;
  }
  if (i >= lines.size() || lines[i] != "beat_index,rpeak_sample,probability") {
    throw Error("schema violation: missing column header beat_index,rpeak_sample,probability");
  }
  for (++i; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto parts = split(lines[i], ',');
    if (parts.size() != 3) throw Error("schema violation: probability row needs 3 columns");
    ProbabilityRow row;
    row.beat_index = parse_int<std::size_t>(parts[0], "beat_index");
    row.rpeak_sample = parse_int<std::int64_t>(parts[1], "rpeak_sample");
    row.probability = parse_real<double>(parts[2], "probability");
    if (!(row.probability >= 0.0 && row.probability <= 1.0)) {
      throw Error("schema violation in field 'probability': outside [0, 1]");
    }
    s.rows.push_back(row);
  }
  return s;
}

void save_probability_series(const fs::path& path, const ProbabilitySeries& s) {
  check_text_value(s.record_id, "record_id");
  std::string out = "# record_id=" + s.record_id + "\n";
  char crc[16];
  std::snprintf(crc, sizeof crc, "%08x", s.model_checksum);
  out += std::string("# model_checksum=") + crc + "\n";
  if (s.patient_label) out += "# patient_label=" + std::to_string(*s.patient_label) + "\n";
  out += "beat_index,rpeak_sample,probability\n";
  for (const auto& row : s.rows) {
    out += std::to_string(row.beat_index) + "," + std::to_string(row.rpeak_sample) + ",";
    append_real(out, row.probability);
    out += "\n";
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> parse_int_list(std::string_view s, std::string_view field) {
  std::vector<int> out;
  for (auto item : split(s, ',')) out.push_back(parse_int<int>(item, field));
  return out;
}

std::string encode_manifest(const ModelWeights& w) {
  const Net1dConfig& c = w.config;
  std::string out;
  out += "in_channels " + std::to_string(c.in_channels) + "\n";
  out += "base_filters " + std::to_string(c.base_filters) + "\n";
  out += "ratio ";
  append_real(out, c.ratio);
  out += "\nfilter_list " + join_ints(c.filter_list) + "\n";
  out += "block_list " + join_ints(c.block_list) + "\n";
  out += "kernel_size " + std::to_string(c.kernel_size) + "\n";
  out += "stride " + std::to_string(c.stride) + "\n";
  out += "groups_width " + std::to_string(c.groups_width) + "\n";
  out += "n_classes " + std::to_string(c.n_classes) + "\n";
  out += "dropout_rate ";
  append_real(out, c.dropout_rate);
  out += "\nse_reduction " + std::to_string(c.se_reduction) + "\n";
  out += "tensor_count " + std::to_string(w.tensors.size()) + "\n";
  for (const auto& t : w.tensors) {
    if (t.name.empty() || t.name.find_first_of(" \n\r") != std::string::npos) {
      throw Error("tensor name must be non-empty without whitespace: '" + t.name + "'");
    }
    out += "tensor " + t.name + " ";
    if (t.shape.empty()) out += "-";
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
      if (i) out += 'x';
      out += std::to_string(t.shape[i]);
    }
    out += " " + std::to_string(t.values.size()) + "\n";
  }
  return out;
}

}  // namespace

std::string encode_weights(const ModelWeights& w) {
  validate(w);
  const std::string manifest = encode_manifest(w);
  std::string out = "N1DW";
  put_u32(out, w.format_version);
  put_u32(out, static_cast<std::uint32_t>(manifest.size()));
  out += manifest;
  for (const auto& t : w.tensors) out += encode_f32_array(t.values);
  put_u32(out, crc32(out));
  return out;
}

ModelWeights decode_weights(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "N1DW") throw Error("not an N1DW weights file (bad magic)");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kWeightsFormatVersion) {
    throw Error("version mismatch: file has version " + std::to_string(version) + ", reader supports " +
                std::to_string(kWeightsFormatVersion));
  }
  const std::uint32_t manifest_size = get_u32(bytes, 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(manifest_size)) throw Error("truncated payload: manifest cut short");
  const auto lines = lines_of(bytes.substr(12, manifest_size));

  ModelWeights w;
  w.format_version = version;
  std::map<std::string, std::string_view, std::less<>> config_fields;
  std::size_t declared_tensors = 0;
  bool have_count = false;
  std::vector<std::size_t> counts;
  static const std::set<std::string, std::less<>> config_keys{
      "in_channels", "base_filters", "ratio",     "filter_list", "block_list",   "kernel_size",
      "stride",      "groups_width", "n_classes", "dropout_rate", "se_reduction"};
  for (auto line : lines) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos) throw Error("manifest line malformed: " + std::string(line));
    const std::string key(line.substr(0, sp));
    const auto value = line.substr(sp + 1);
    if (key == "tensor") {
      const auto parts = split(value, ' ');
      if (parts.size() != 3) throw Error("manifest tensor line malformed: " + std::string(line));
      NamedTensor t;
      t.name = std::string(parts[0]);
      if (parts[1] != "-") {
        for (auto d : split(parts[1], 'x')) t.shape.push_back(parse_int<std::size_t>(d, "tensor shape"));
      }
      const auto count = parse_int<std::size_t>(parts[2], "tensor value count");
      if (count != t.element_count()) {
        throw Error("value-count mismatch for tensor " + t.name + ": shape holds " + std::to_string(t.element_count()) +
                    " values, manifest declares " + std::to_string(count));
      }
      counts.push_back(count);
      w.tensors.push_back(std::move(t));
    } else if (key == "tensor_count") {
      declared_tensors = parse_int<std::size_t>(value, "tensor_count");
      have_count = true;
    } else if (config_keys.count(key)) {
      if (!config_fields.emplace(key, value).second) throw Error("manifest duplicates field " + key);
    } else {
      throw Error("manifest has unknown field " + key);
    }
  }
  if (!have_count || declared_tensors != w.tensors.size()) throw Error("manifest tensor_count does not match tensor lines");
  for (const auto& k : config_keys) {
    if (!config_fields.count(k)) throw Error("manifest missing config field " + k);
  }
  Net1dConfig& c = w.config;
  c.in_channels = parse_int<int>(config_fields["in_channels"], "in_channels");
  c.base_filters = parse_int<int>(config_fields["base_filters"], "base_filters");
  c.ratio = parse_real<double>(config_fields["ratio"], "ratio");
  c.filter_list = parse_int_list(config_fields["filter_list"], "filter_list");
  c.block_list = parse_int_list(config_fields["block_list"], "block_list");
  c.kernel_size = parse_int<int>(config_fields["kernel_size"], "kernel_size");
  c.stride = parse_int<int>(config_fields["stride"], "stride");
  c.groups_width = parse_int<int>(config_fields["groups_width"], "groups_width");
  c.n_classes = parse_int<int>(config_fields["n_classes"], "n_classes");
  c.dropout_rate = parse_real<double>(config_fields["dropout_rate"], "dropout_rate");
  c.se_reduction = parse_int<int>(config_fields["se_reduction"], "se_reduction");

  std::size_t total = 0;
  for (auto n : counts) total += n;
  const std::size_t payload_start = 12 + manifest_size;
  const std::size_t expected = payload_start + total * 4 + 4;
  if (bytes.size() < expected) throw Error("truncated payload: expected " + std::to_string(expected) + " bytes, found " +
                                           std::to_string(bytes.size()));
  if (bytes.size() > expected) throw Error("trailing bytes after weights payload");
  const std::uint32_t stored_crc = get_u32(bytes, expected - 4);
  if (stored_crc != crc32(bytes.substr(0, expected - 4))) throw Error("checksum mismatch in weights file");

  std::size_t offset = payload_start;
  for (std::size_t i = 0; i < w.tensors.size(); ++i) {
    auto& t = w.tensors[i];
    t.values.resize(counts[i]);
    for (std::size_t j = 0; j < counts[i]; ++j, offset += 4) t.values[j] = get_f32(bytes, offset);
  }
  validate(w);
  return w;
}

void save_weights(const fs::path& path, const ModelWeights& weights) { write_file(path, encode_weights(weights)); }

ModelWeights load_weights(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing file " + path.string());
  return decode_weights(read_file(path));
}

std::uint32_t weights_checksum(const ModelWeights& weights) {
  const std::string bytes = encode_weights(weights);
  return get_u32(bytes, bytes.size() - 4);
}

}  // namespace beatrisk
