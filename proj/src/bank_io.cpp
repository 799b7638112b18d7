#include <zlib.h>

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stnlm/tensor_bank.hpp"

namespace stnlm {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint32_t crc_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size())));
}

}  // namespace

std::string serialize_bank(const MergeTensorBank& bank) {
  std::string out;
  out += "STNLM 1 " + std::to_string(bank.level) + " " +
         std::to_string(bank.num_categories()) + " " +
         std::to_string(bank.grammar.vocab_size()) + " " + fmt17(bank.lambda) +
         " " + std::to_string(bank.deterministic ? 1 : 0) + "\n";
  for (int i = 0; i < bank.num_categories(); ++i)
    out += "CAT " + std::to_string(i) + " " + bank.grammar.categories[i] + "\n";
  for (int i = 0; i < bank.grammar.vocab_size(); ++i)
    out += "WORD " + std::to_string(i) + " " + bank.grammar.words[i] + "\n";
  for (int w = 0; w < bank.lexical.vocab; ++w)
    for (int cat = 0; cat < bank.lexical.ncat; ++cat) {
      const double p = bank.lexical.prob(w, cat);
      const std::uint64_t c = bank.lexical.count(w, cat);
      if (p == 0.0 && c == 0) continue;
      out += "LEX " + std::to_string(w) + " " + std::to_string(cat) + " " +
             std::to_string(c) + " " + fmt17(p) + "\n";
    }
  for (const auto& [key, tensor] : bank.tensors)
    for (int a = 0; a < tensor.n; ++a)
      for (int b = 0; b < tensor.n; ++b)
        for (int g = 0; g < tensor.n; ++g) {
          const double p = tensor.prob(a, b, g);
          const std::uint64_t c = tensor.count(a, b, g);
          if (p == 0.0 && c == 0) continue;
          out += "MERGE " + key + " " + std::to_string(a) + " " +
                 std::to_string(b) + " " + std::to_string(g) + " " +
                 std::to_string(c) + " " + fmt17(p) + "\n";
        }
  char crc[16];
  std::snprintf(crc, sizeof(crc), "%08x", crc_of(out));
  out += std::string("CHECKSUM ") + crc + "\n";
  return out;
}

MergeTensorBank deserialize_bank(std::string_view text) {
  // The checksum line covers every byte before it.
  const std::string_view magic = "STNLM";
  if (text.substr(0, magic.size()) != magic)
    throw FormatVersionMismatch("not a model file (bad magic)");

  auto tail = text.rfind("CHECKSUM ");
  if (tail == std::string_view::npos ||
      (tail != 0 && text[tail - 1] != '\n'))
    throw ChecksumMismatch("missing checksum line (truncated file?)");
  std::string_view body = text.substr(0, tail);
  std::string_view crc_line = text.substr(tail);
  std::uint32_t stored = 0;
  if (std::sscanf(std::string(crc_line).c_str(), "CHECKSUM %x", &stored) != 1)
    throw ChecksumMismatch("unreadable checksum line");
  if (crc_of(body) != stored)
    throw ChecksumMismatch("checksum mismatch (corrupted file?)");

  std::istringstream in{std::string(body)};
  std::string line;
  if (!std::getline(in, line))
    throw FormatVersionMismatch("empty model file");

  MergeTensorBank bank;
  int ncat = 0, vocab = 0, det = 0, version = 0;
  char lambda_buf[64] = {0};
  if (std::sscanf(line.c_str(), "STNLM %d %d %d %d %63s %d", &version,
                  &bank.level, &ncat, &vocab, lambda_buf, &det) != 6)
    throw FormatVersionMismatch("unreadable header: " + line);
  if (version != 1)
    throw FormatVersionMismatch("unsupported format version " +
                                std::to_string(version));
  bank.lambda = std::strtod(lambda_buf, nullptr);
  bank.deterministic = det != 0;

  std::vector<std::string> categories(ncat), words(vocab);
  bank.lexical = LexicalMatrix(vocab, ncat);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "CAT") {
      int i;
      std::string label;
      ls >> i >> label;
      if (!ls || i < 0 || i >= ncat)
        throw FormatVersionMismatch("bad CAT line: " + line);
      categories[i] = label;
    } else if (tag == "WORD") {
      int i;
      std::string w;
      ls >> i >> w;
      if (!ls || i < 0 || i >= vocab)
        throw FormatVersionMismatch("bad WORD line: " + line);
      words[i] = w;
    } else if (tag == "LEX") {
      int w, cat;
      std::uint64_t c;
      std::string prob;
      ls >> w >> cat >> c >> prob;
      if (!ls || w < 0 || w >= vocab || cat < 0 || cat >= ncat)
        throw FormatVersionMismatch("bad LEX line: " + line);
      bank.lexical.count(w, cat) = c;
      bank.lexical.prob(w, cat) = std::strtod(prob.c_str(), nullptr);
    } else if (tag == "MERGE") {
      std::string key;
      int a, b, g;
      std::uint64_t c;
      std::string prob;
      ls >> key >> a >> b >> g >> c >> prob;
      if (!ls || a < 0 || a >= ncat || b < 0 || b >= ncat || g < 0 ||
          g >= ncat)
        throw FormatVersionMismatch("bad MERGE line: " + line);
      auto [it, inserted] = bank.tensors.try_emplace(key, ncat);
      it->second.count(a, b, g) = c;
      it->second.prob(a, b, g) = std::strtod(prob.c_str(), nullptr);
    } else {
      throw FormatVersionMismatch("unknown record: " + line);
    }
  }

  bank.grammar.unk_token = "<unk>";
  for (const std::string& c : categories) bank.grammar.add_category(c);
  for (const std::string& w : words) bank.grammar.add_word(w);
  return bank;
}

void save_bank(const MergeTensorBank& bank, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::string text = serialize_bank(bank);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path);
}

MergeTensorBank load_bank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_bank(ss.str());
}

}  // namespace stnlm
