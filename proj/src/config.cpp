// SPDX-License-Identifier: Apache-2.0
#include "asrz/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "asrz/error.hpp"

namespace asrz {

namespace {

std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

double as_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw Error(ErrorCode::MalformedConfig, key + ": expected a number, got '" + v + "'");
  }
  return d;
}

uint64_t as_uint(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || end != v.c_str() + v.size()) {
    throw Error(ErrorCode::MalformedConfig, key + ": expected a non-negative integer, got '" + v + "'");
  }
  return u;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> kv;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::MalformedConfig, "line " + std::to_string(line_no) + ": missing '='");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::MalformedConfig, "line " + std::to_string(line_no) + ": empty key");
    }
    if (!kv.emplace(key, trim(std::string_view(line).substr(eq + 1))).second) {
      throw Error(ErrorCode::MalformedConfig, "duplicate key '" + key + "'");
    }
  }
  return kv;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw Error(ErrorCode::MalformedConfig, "batch_size must be positive");
  if (epochs == 0) throw Error(ErrorCode::MalformedConfig, "epochs must be positive");
  if (!(lr > 0.0)) throw Error(ErrorCode::MalformedConfig, "lr must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::MalformedConfig, "dropout must lie in [0, 1)");
  }
  if (hidden == 0) throw Error(ErrorCode::MalformedConfig, "hidden must be positive");
  if (!(relu_cap > 0.0)) throw Error(ErrorCode::MalformedConfig, "relu_cap must be positive");
  try {
    features.validate();
    decode.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedConfig, e.what());
  }
}

TrainConfig parse_train_config(std::string_view text, const std::filesystem::path& base_dir) {
  TrainConfig cfg;
  auto path = [&base_dir](const std::string& v) {
    std::filesystem::path p(v);
    if (v.empty()) return p;
    return p.is_relative() ? base_dir / p : p;
  };
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
      setters = {
          {"batch_size", [&](auto& k, auto& v) { cfg.batch_size = as_uint(k, v); }},
          {"lr", [&](auto& k, auto& v) { cfg.lr = as_double(k, v); }},
          {"dropout", [&](auto& k, auto& v) { cfg.dropout = as_double(k, v); }},
          {"epochs", [&](auto& k, auto& v) { cfg.epochs = as_uint(k, v); }},
          {"seed", [&](auto& k, auto& v) { cfg.seed = as_uint(k, v); }},
          {"hidden", [&](auto& k, auto& v) { cfg.hidden = as_uint(k, v); }},
          {"relu_cap", [&](auto& k, auto& v) { cfg.relu_cap = as_double(k, v); }},
          {"window_ms", [&](auto& k, auto& v) { cfg.features.window_ms = as_double(k, v); }},
          {"hop_ms", [&](auto& k, auto& v) { cfg.features.hop_ms = as_double(k, v); }},
          {"n_mel_filters",
           [&](auto& k, auto& v) { cfg.features.n_mel_filters = static_cast<int>(as_uint(k, v)); }},
          {"n_cepstra",
           [&](auto& k, auto& v) { cfg.features.n_cepstra = static_cast<int>(as_uint(k, v)); }},
          {"preemphasis", [&](auto& k, auto& v) { cfg.features.preemphasis = as_double(k, v); }},
          {"context_radius",
           [&](auto& k, auto& v) { cfg.features.context_radius = static_cast<int>(as_uint(k, v)); }},
          {"alphabet", [&](auto&, auto& v) { cfg.alphabet = path(v); }},
          {"train_manifest", [&](auto&, auto& v) { cfg.train_manifest = path(v); }},
          {"val_manifest", [&](auto&, auto& v) { cfg.val_manifest = path(v); }},
          {"test_manifest", [&](auto&, auto& v) { cfg.test_manifest = path(v); }},
          {"out_dir", [&](auto&, auto& v) { cfg.out_dir = path(v); }},
          {"lm", [&](auto&, auto& v) { cfg.lm = path(v); }},
          {"beam_width", [&](auto& k, auto& v) { cfg.decode.beam_width = as_uint(k, v); }},
          {"lm_alpha", [&](auto& k, auto& v) { cfg.decode.alpha = as_double(k, v); }},
          {"lm_beta", [&](auto& k, auto& v) { cfg.decode.beta = as_double(k, v); }},
          {"keep_checkpoints", [&](auto& k, auto& v) { cfg.keep_checkpoints = as_uint(k, v); }},
      };
  for (const auto& [key, value] : parse_key_values(text)) {
    auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::MalformedConfig, "unknown key '" + key + "'");
    it->second(key, value);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_train_config(buf.str(), path.parent_path());
}

std::string to_config_text(const TrainConfig& cfg) {
  auto abs = [](const std::filesystem::path& p) {
    return p.empty() ? std::string() : std::filesystem::absolute(p).lexically_normal().string();
  };
  std::string s;
  s += "batch_size=" + std::to_string(cfg.batch_size) + "\n";
  s += "lr=" + fmt(cfg.lr) + "\n";
  s += "dropout=" + fmt(cfg.dropout) + "\n";
  s += "epochs=" + std::to_string(cfg.epochs) + "\n";
  s += "seed=" + std::to_string(cfg.seed) + "\n";
  s += "hidden=" + std::to_string(cfg.hidden) + "\n";
  s += "relu_cap=" + fmt(cfg.relu_cap) + "\n";
  s += "window_ms=" + fmt(cfg.features.window_ms) + "\n";
  s += "hop_ms=" + fmt(cfg.features.hop_ms) + "\n";
  s += "n_mel_filters=" + std::to_string(cfg.features.n_mel_filters) + "\n";
  s += "n_cepstra=" + std::to_string(cfg.features.n_cepstra) + "\n";
  s += "preemphasis=" + fmt(cfg.features.preemphasis) + "\n";
  s += "context_radius=" + std::to_string(cfg.features.context_radius) + "\n";
  s += "alphabet=" + abs(cfg.alphabet) + "\n";
  s += "train_manifest=" + abs(cfg.train_manifest) + "\n";
  s += "val_manifest=" + abs(cfg.val_manifest) + "\n";
  s += "test_manifest=" + abs(cfg.test_manifest) + "\n";
  s += "out_dir=" + abs(cfg.out_dir) + "\n";
  s += "lm=" + abs(cfg.lm) + "\n";
  s += "beam_width=" + std::to_string(cfg.decode.beam_width) + "\n";
  s += "lm_alpha=" + fmt(cfg.decode.alpha) + "\n";
  s += "lm_beta=" + fmt(cfg.decode.beta) + "\n";
  s += "keep_checkpoints=" + std::to_string(cfg.keep_checkpoints) + "\n";
  return s;
}

}  // namespace asrz
