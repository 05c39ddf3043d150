// SPDX-License-Identifier: Apache-2.0
#include "asrz/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "asrz/ctc.hpp"
#include "asrz/error.hpp"
#include "asrz/parallel.hpp"
#include "asrz/utf8.hpp"

namespace asrz {

namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename T>
T read_le(std::string_view bytes, size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void append_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  size_t i = 0;
  size_t record_no = 1;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
    ++record_no;
  };
  if (text.starts_with("\xEF\xBB\xBF")) i = 3;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '"' && !field_started) {
      field_started = true;
      ++i;
      while (true) {
        if (i >= text.size()) {
          throw Error(ErrorCode::MalformedCsv,
                      "unterminated quoted field in record " + std::to_string(record_no));
        }
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field.push_back(text[i++]);
      }
      if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
        throw Error(ErrorCode::MalformedCsv,
                    "characters after closing quote in record " + std::to_string(record_no));
      }
      continue;
    }
    if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' || c == '\n') {
      end_record();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      ++i;
    } else if (c == '"') {
      throw Error(ErrorCode::MalformedCsv,
                  "quote inside unquoted field in record " + std::to_string(record_no));
    } else {
      field_started = true;
      field.push_back(c);
      ++i;
    }
  }
  if (field_started || !record.empty()) end_record();
  return records;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Manifest parse_manifest(const std::filesystem::path& path, const Alphabet& alphabet) {
  const auto records = parse_csv(read_file(path));
  if (records.empty() || records[0] != std::vector<std::string>{"path", "transcript"}) {
    throw Error(ErrorCode::MalformedCsv, path.string() + ": missing header 'path,transcript'");
  }
  Manifest m;
  m.source = path;
  const auto base = path.parent_path();
  for (size_t r = 1; r < records.size(); ++r) {
    const size_t row_no = r + 1;
    const auto& rec = records[r];
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    if (rec.size() != 2) {
      throw Error(ErrorCode::MalformedCsv, path.string() + ": row " + std::to_string(row_no) +
                                               " has " + std::to_string(rec.size()) + " fields");
    }
    ManifestRow row;
    row.row = row_no;
    row.audio = std::filesystem::path(rec[0]);
    if (row.audio.is_relative()) row.audio = base / row.audio;
    row.transcript = rec[1];
    std::u32string text;
    try {
      text = utf8_decode(row.transcript);
    } catch (const Error&) {
      throw Error(ErrorCode::InvalidTranscriptChar,
                  path.string() + ": row " + std::to_string(row_no) + " is not valid UTF-8");
    }
    for (char32_t ch : text) {
      if (!alphabet.contains(ch)) {
        throw Error(ErrorCode::InvalidTranscriptChar,
                    path.string() + ": row " + std::to_string(row_no) + ": character " +
                        describe_char(ch) + " is not in the alphabet");
      }
    }
    row.labels = alphabet.encode(text);
    if (!std::filesystem::exists(row.audio)) {
      throw Error(ErrorCode::MissingAudioFile, path.string() + ": row " +
                                                   std::to_string(row_no) + ": " +
                                                   row.audio.string());
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "path,transcript\n";
  for (const auto& [audio, transcript] : rows) {
    out << csv_field(audio) << ',' << csv_field(transcript) << '\n';
  }
}

AudioClip decode_wav(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    throw Error(ErrorCode::MalformedRiff, "missing RIFF/WAVE header");
  }
  size_t pos = 12;
  bool have_fmt = false;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const auto size = read_le<uint32_t>(bytes, pos + 4);
    pos += 8;
    if (size > bytes.size() - pos) {
      throw Error(ErrorCode::MalformedRiff, "chunk '" + std::string(id) + "' overruns the file");
    }
    if (id == "fmt ") {
      if (size < 16) throw Error(ErrorCode::MalformedRiff, "fmt chunk too short");
      const auto format = read_le<uint16_t>(bytes, pos);
      const auto channels = read_le<uint16_t>(bytes, pos + 2);
      const auto rate = read_le<uint32_t>(bytes, pos + 4);
      const auto bits = read_le<uint16_t>(bytes, pos + 14);
      if (format != 1) {
        throw Error(ErrorCode::UnsupportedFormat,
                    "encoding: format tag " + std::to_string(format) + ", need PCM (1)");
      }
      if (channels != 1) {
        throw Error(ErrorCode::UnsupportedFormat,
                    "channels: " + std::to_string(channels) + ", need mono");
      }
      if (rate != static_cast<uint32_t>(kSampleRate)) {
        throw Error(ErrorCode::UnsupportedFormat,
                    "rate: " + std::to_string(rate) + " Hz, need 16000 Hz");
      }
      if (bits != 16) {
        throw Error(ErrorCode::UnsupportedFormat,
                    "bit depth: " + std::to_string(bits) + ", need 16");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw Error(ErrorCode::MalformedRiff, "data chunk before fmt chunk");
      if (size % 2 != 0) throw Error(ErrorCode::MalformedRiff, "odd data chunk size");
      AudioClip clip;
      clip.sample_rate = kSampleRate;
      clip.samples.resize(size / 2);
      for (size_t i = 0; i < clip.samples.size(); ++i) {
        clip.samples[i] = static_cast<double>(read_le<int16_t>(bytes, pos + 2 * i)) / 32768.0;
      }
      return clip;
    }
    pos += size + (size & 1);
  }
  throw Error(ErrorCode::MalformedRiff, have_fmt ? "no data chunk" : "no fmt chunk");
}

AudioClip load_wav(const std::filesystem::path& path) { return decode_wav(read_file(path)); }

std::string encode_wav(const AudioClip& clip, int channels, int bits) {
  const uint32_t bytes_per_sample = static_cast<uint32_t>(bits / 8);
  const uint32_t data_size =
      static_cast<uint32_t>(clip.samples.size()) * bytes_per_sample * static_cast<uint32_t>(channels);
  std::string out = "RIFF";
  append_le<uint32_t>(out, 36 + data_size);
  out += "WAVEfmt ";
  append_le<uint32_t>(out, 16);
  append_le<uint16_t>(out, 1);
  append_le<uint16_t>(out, static_cast<uint16_t>(channels));
  append_le<uint32_t>(out, static_cast<uint32_t>(clip.sample_rate));
  append_le<uint32_t>(out, static_cast<uint32_t>(clip.sample_rate) * bytes_per_sample *
                               static_cast<uint32_t>(channels));
  append_le<uint16_t>(out, static_cast<uint16_t>(bytes_per_sample * channels));
  append_le<uint16_t>(out, static_cast<uint16_t>(bits));
  out += "data";
  append_le<uint32_t>(out, data_size);
  for (double s : clip.samples) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    for (int ch = 0; ch < channels; ++ch) {
      if (bits == 16) {
        append_le<int16_t>(out, static_cast<int16_t>(scaled));
      } else {
        for (uint32_t b = 0; b < bytes_per_sample; ++b) out.push_back(0);
      }
    }
  }
  return out;
}

void save_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const std::string bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Dataset load_dataset(const Manifest& manifest, const FeatureConfig& cfg) {
  cfg.validate();
  Dataset data;
  data.features = cfg;
  data.utterances.resize(manifest.rows.size());
  parallel_for(manifest.rows.size(), [&](size_t i) {
    const auto& row = manifest.rows[i];
    const AudioClip clip = load_wav(row.audio);
    Utterance& u = data.utterances[i];
    u.id = i;
    u.transcript = row.transcript;
    u.labels = row.labels;
    u.n_samples = clip.samples.size();
    u.features = featurize(clip, cfg);
    if (!is_feasible(u.labels, u.features.rows())) {
      throw Error(ErrorCode::TargetInfeasible,
                  manifest.source.string() + ": row " + std::to_string(row.row) +
                      ": transcript needs " + std::to_string(min_frames(u.labels)) +
                      " frames, clip has " + std::to_string(u.features.rows()));
    }
  });
  return data;
}

std::vector<std::vector<size_t>> plan_batches(std::span<const size_t> durations,
                                              size_t batch_size, uint64_t seed, size_t epoch) {
  if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
  std::vector<size_t> order(durations.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return durations[a] < durations[b]; });
  std::vector<std::vector<size_t>> buckets;
  for (size_t start = 0; start < order.size(); start += batch_size) {
    const size_t end = std::min(order.size(), start + batch_size);
    buckets.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  // Fisher-Yates with our own generator; std::shuffle is not portable.
  Rng rng(mix_seed(seed, 0xBA7C4000ULL + epoch));
  for (size_t i = buckets.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.below(i));
    std::swap(buckets[i - 1], buckets[j]);
  }
  return buckets;
}

std::vector<Batch> make_batches(const Dataset& data, size_t batch_size, uint64_t seed,
                                size_t epoch) {
  std::vector<size_t> durations;
  durations.reserve(data.utterances.size());
  for (const auto& u : data.utterances) durations.push_back(u.n_samples);
  std::vector<Batch> batches;
  for (const auto& bucket : plan_batches(durations, batch_size, seed, epoch)) {
    Batch b;
    for (size_t id : bucket) b.max_frames = std::max(b.max_frames, data.utterances[id].features.rows());
    for (size_t id : bucket) {
      const Utterance& u = data.utterances[id];
      Matrix padded(b.max_frames, u.features.cols());
      std::copy(u.features.values().begin(), u.features.values().end(),
                padded.values().begin());
      b.ids.push_back(id);
      b.features.push_back(std::move(padded));
      b.lengths.push_back(u.features.rows());
      b.targets.push_back(u.labels);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace asrz
