// SPDX-License-Identifier: Apache-2.0
#include "asrz/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "asrz/error.hpp"
#include "asrz/utf8.hpp"

namespace asrz {

namespace {

constexpr double kStartLog10Prob = -99.0;

std::string token_text(char32_t token) {
  if (token == kSentenceStart) return "<s>";
  if (token == kSentenceEnd) return "</s>";
  if (token == U' ') return "<space>";
  return utf8_encode(token);
}

char32_t parse_token(std::string_view text) {
  if (text == "<s>") return kSentenceStart;
  if (text == "</s>") return kSentenceEnd;
  if (text == "<space>") return U' ';
  std::u32string decoded;
  try {
    decoded = utf8_decode(text);
  } catch (const Error&) {
    throw Error(ErrorCode::MalformedArpa, "token is not valid UTF-8");
  }
  if (decoded.size() != 1) {
    throw Error(ErrorCode::MalformedArpa, "token '" + std::string(text) + "' is not one character");
  }
  return decoded.front();
}

std::string gram_text(const std::u32string& gram) {
  std::string out;
  for (size_t i = 0; i < gram.size(); ++i) {
    if (i) out.push_back(' ');
    out += token_text(gram[i]);
  }
  return out;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_number(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || std::isnan(v)) {
    throw Error(ErrorCode::MalformedArpa, "bad number '" + s + "'");
  }
  return v;
}

}  // namespace

NGramLM::NGramLM(int order, std::vector<Table> tables)
    : order_(order), tables_(std::move(tables)) {
  if (order_ < 1 || tables_.size() != static_cast<size_t>(order_)) {
    throw Error(ErrorCode::InvalidArgument, "n-gram tables disagree with order");
  }
  for (const auto& [gram, entry] : tables_[0]) {
    if (gram.front() != kSentenceStart) vocab_.push_back(gram.front());
  }
  std::sort(vocab_.begin(), vocab_.end());
}

bool NGramLM::can_predict(char32_t token) const {
  return token != kSentenceStart && tables_[0].contains(std::u32string(1, token));
}

double NGramLM::score(std::u32string_view context, char32_t token) const {
  if (!can_predict(token)) {
    throw Error(ErrorCode::UnknownChar, "character " + describe_char(token) +
                                            " is not in the language model vocabulary");
  }
  size_t k = std::min(context.size(), static_cast<size_t>(order_ - 1));
  double backoff = 0.0;
  std::u32string gram;
  while (true) {
    gram.assign(context.substr(context.size() - k));
    gram.push_back(token);
    const auto& grams = tables_[k];
    if (auto it = grams.find(gram); it != grams.end()) {
      return backoff + it->second.log10_prob;
    }
    // can_predict guarantees the unigram exists, so k > 0 here.
    gram.pop_back();
    const auto& contexts = tables_[k - 1];
    if (auto it = contexts.find(gram); it != contexts.end() && it->second.has_backoff) {
      backoff += it->second.log10_backoff;
    }
    --k;
  }
}

double NGramLM::sentence_log10(std::u32string_view text) const {
  std::u32string history(1, kSentenceStart);
  double total = 0.0;
  for (char32_t ch : text) {
    total += score(history, ch);
    history.push_back(ch);
  }
  return total + score(history, kSentenceEnd);
}

std::vector<std::u32string> NGramLM::contexts() const {
  std::vector<std::u32string> out;
  for (const auto& table : tables_) {
    for (const auto& [gram, entry] : table) {
      if (entry.has_backoff) out.push_back(gram);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

NGramLM train_ngram(const std::vector<std::string>& corpus, int order, double discount,
                    const Alphabet* alphabet) {
  if (order < 1 || order > 6) {
    throw Error(ErrorCode::InvalidArgument, "order must lie in 1..6");
  }
  if (!(discount > 0.0 && discount < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "discount must lie in (0, 1)");
  }
  std::vector<std::u32string> sentences;
  std::u32string observed;
  size_t n_chars = 0;
  for (size_t line_no = 0; line_no < corpus.size(); ++line_no) {
    std::u32string text = utf8_decode(corpus[line_no]);
    for (char32_t ch : text) {
      if (alphabet != nullptr && !alphabet->contains(ch)) {
        throw Error(ErrorCode::CharOutsideAlphabet,
                    "corpus line " + std::to_string(line_no + 1) + ": " + describe_char(ch));
      }
      if (ch == U'\n' || ch == U'\r') {
        throw Error(ErrorCode::InvalidArgument, "corpus lines must not contain line breaks");
      }
      observed.push_back(ch);
    }
    n_chars += text.size();
    sentences.push_back(kSentenceStart + text + kSentenceEnd);
  }
  if (sentences.empty() || n_chars == 0) {
    throw Error(ErrorCode::EmptyCorpus, "corpus has no characters");
  }

  std::u32string vocab = alphabet != nullptr ? alphabet->chars() : observed;
  vocab.push_back(kSentenceEnd);
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());

  // Ordered maps keep the floating-point accumulation order fixed.
  const auto n = static_cast<size_t>(order);
  std::vector<std::map<std::u32string, double>> raw(n + 1);
  for (const auto& s : sentences) {
    for (size_t k = 1; k <= n; ++k) {
      for (size_t i = 0; i + k <= s.size(); ++i) {
        std::u32string g = s.substr(i, k);
        if (g.back() == kSentenceStart) continue;
        raw[k][g] += 1.0;
      }
    }
  }

  std::vector<std::map<std::u32string, double>> adjusted(n + 1);
  adjusted[n] = raw[n];
  for (size_t k = n - 1; k >= 1; --k) {
    std::map<std::u32string, double> continuation;
    for (const auto& [g, c] : raw[k + 1]) continuation[g.substr(1)] += 1.0;
    for (const auto& [g, c] : raw[k]) {
      adjusted[k][g] = g.front() == kSentenceStart ? c : continuation[g];
    }
  }

  std::vector<NGramLM::Table> tables(n);
  std::vector<std::map<std::u32string, double>> prob(n + 1);

  {
    double total = 0.0;
    for (const auto& [g, a] : adjusted[1]) total += a;
    const double gamma = discount * static_cast<double>(adjusted[1].size()) / total;
    const double uniform = 1.0 / static_cast<double>(vocab.size());
    for (char32_t ch : vocab) {
      const std::u32string g(1, ch);
      auto it = adjusted[1].find(g);
      const double a = it == adjusted[1].end() ? 0.0 : it->second;
      prob[1][g] = std::max(a - discount, 0.0) / total + gamma * uniform;
      tables[0][g] = NGramEntry{std::log10(prob[1][g]), 0.0, false};
    }
    tables[0][std::u32string(1, kSentenceStart)] = NGramEntry{kStartLog10Prob, 0.0, false};
  }

  for (size_t k = 2; k <= n; ++k) {
    std::map<std::u32string, std::pair<double, double>> context_stats;  // total, types
    for (const auto& [g, a] : adjusted[k]) {
      auto& st = context_stats[g.substr(0, k - 1)];
      st.first += a;
      st.second += 1.0;
    }
    for (const auto& [h, st] : context_stats) {
      const double gamma = discount * st.second / st.first;
      auto& ctx_entry = tables[k - 2].at(h);
      ctx_entry.log10_backoff = std::log10(gamma);
      ctx_entry.has_backoff = true;
    }
    for (const auto& [g, a] : adjusted[k]) {
      const std::u32string h = g.substr(0, k - 1);
      const auto& st = context_stats.at(h);
      const double gamma = discount * st.second / st.first;
      const double lower = prob[k - 1].at(g.substr(1));
      prob[k][g] = (a - discount) / st.first + gamma * lower;
      tables[k - 1][g] = NGramEntry{std::log10(prob[k][g]), 0.0, false};
    }
  }
  return NGramLM(order, std::move(tables));
}

std::string to_arpa(const NGramLM& lm) {
  std::string out = "\\data\\\n";
  for (int k = 1; k <= lm.order(); ++k) {
    out += "ngram " + std::to_string(k) + "=" + std::to_string(lm.table(k).size()) + "\n";
  }
  char buf[64];
  for (int k = 1; k <= lm.order(); ++k) {
    out += "\n\\" + std::to_string(k) + "-grams:\n";
    std::vector<std::pair<std::u32string, NGramEntry>> rows(lm.table(k).begin(),
                                                            lm.table(k).end());
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [gram, e] : rows) {
      std::snprintf(buf, sizeof buf, "%.7f", e.log10_prob);
      out += buf;
      out += '\t';
      out += gram_text(gram);
      if (e.has_backoff) {
        std::snprintf(buf, sizeof buf, "%.7f", e.log10_backoff);
        out += '\t';
        out += buf;
      }
      out += '\n';
    }
  }
  out += "\n\\end\\\n";
  return out;
}

NGramLM parse_arpa(std::string_view text) {
  std::vector<std::string> lines;
  {
    size_t pos = 0;
    while (pos <= text.size()) {
      size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(pos, end - pos));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      pos = end + 1;
    }
  }
  size_t i = 0;
  while (i < lines.size() && lines[i] != "\\data\\") ++i;
  if (i == lines.size()) throw Error(ErrorCode::MalformedArpa, "missing \\data\\ section");
  ++i;
  std::vector<size_t> declared;
  for (; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    if (!line.starts_with("ngram ")) break;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::MalformedArpa, "bad count line: " + line);
    const size_t k = static_cast<size_t>(parse_number(line.substr(6, eq - 6)));
    if (k != declared.size() + 1) {
      throw Error(ErrorCode::MalformedArpa, "ngram counts out of order");
    }
    declared.push_back(static_cast<size_t>(parse_number(line.substr(eq + 1))));
  }
  if (declared.empty()) throw Error(ErrorCode::MalformedArpa, "no ngram counts declared");

  const int order = static_cast<int>(declared.size());
  std::vector<NGramLM::Table> tables(declared.size());
  size_t section = 0;
  bool ended = false;
  for (; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    if (line == "\\end\\") {
      ended = true;
      break;
    }
    if (line.front() == '\\') {
      const std::string expected = "\\" + std::to_string(section + 1) + "-grams:";
      if (line != expected) throw Error(ErrorCode::MalformedArpa, "unexpected section " + line);
      ++section;
      if (section > declared.size()) {
        throw Error(ErrorCode::MalformedArpa, "section beyond declared order");
      }
      continue;
    }
    if (section == 0) throw Error(ErrorCode::MalformedArpa, "entry outside a section");
    const auto fields = split_ws(line);
    if (fields.size() != section + 1 && fields.size() != section + 2) {
      throw Error(ErrorCode::MalformedArpa, "entry has wrong field count: " + line);
    }
    NGramEntry e;
    e.log10_prob = parse_number(fields[0]);
    std::u32string gram;
    for (size_t k = 0; k < section; ++k) gram.push_back(parse_token(fields[1 + k]));
    if (fields.size() == section + 2) {
      e.log10_backoff = parse_number(fields.back());
      e.has_backoff = true;
    }
    if (!tables[section - 1].emplace(gram, e).second) {
      throw Error(ErrorCode::MalformedArpa, "duplicate entry: " + line);
    }
  }
  if (!ended) throw Error(ErrorCode::MalformedArpa, "missing \\end\\ marker");
  for (size_t k = 0; k < declared.size(); ++k) {
    if (tables[k].size() != declared[k]) {
      throw Error(ErrorCode::MalformedArpa,
                  "header declares " + std::to_string(declared[k]) + " " +
                      std::to_string(k + 1) + "-grams, body has " +
                      std::to_string(tables[k].size()));
    }
  }
  return NGramLM(order, std::move(tables));
}

void write_arpa(const NGramLM& lm, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_arpa(lm);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

NGramLM read_arpa(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_arpa(buf.str());
}

std::vector<std::string> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace asrz
