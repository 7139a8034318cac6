#include <optional>
#include <string>
#include <vector>

#include "mtlsa/errors.hpp"
#include "mtlsa/nncore.hpp"
#include "mtlsa/textio.hpp"

namespace mtlsa {

namespace {

constexpr int kSchemaVersion = 1;
constexpr std::string_view kMagic = "mtlsa-checkpoint";

std::string sizes_line(std::string_view key, const std::vector<std::size_t>& sizes) {
  std::string line(key);
  for (auto s : sizes) line += " " + std::to_string(s);
  return line + "\n";
}

void write_layers(std::string& out, std::string_view group, const std::vector<DenseLayer>& layers) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const std::string prefix = std::string(group) + "." + std::to_string(l);
    out += "param " + prefix + ".weight " + std::to_string(layer.weight.rows()) + " " +
           std::to_string(layer.weight.cols()) + "\n";
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
      const auto row = layer.weight.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ' ';
        out += textio::format_double(row[c]);
      }
      out += '\n';
    }
    out += "param " + prefix + ".bias " + std::to_string(layer.bias.size()) + " 1\n";
    for (double b : layer.bias) out += textio::format_double(b) + "\n";
  }
}

class LineReader {
 public:
  LineReader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  // Next non-empty, non-comment line split on spaces.
  std::vector<std::string> next() {
    while (pos_ <= text_.size()) {
      auto end = text_.find('\n', pos_);
      if (end == std::string_view::npos) end = text_.size();
      auto line = textio::trim(text_.substr(pos_, end - pos_));
      pos_ = end + 1;
      ++line_;
      if (line.empty() || line.front() == '#') continue;
      std::vector<std::string> tokens;
      for (auto& t : textio::split(line, ' ')) {
        if (!t.empty()) tokens.push_back(std::move(t));
      }
      return tokens;
    }
    fail("unexpected end of checkpoint");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

  std::vector<std::string> expect(std::string_view key) {
    auto tokens = next();
    if (tokens.front() != key) fail("expected '" + std::string(key) + "'");
    tokens.erase(tokens.begin());
    return tokens;
  }

  std::size_t to_size(const std::string& token) const {
    try {
      return static_cast<std::size_t>(textio::parse_uint(token));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  double to_double(const std::string& token) const {
    try {
      return textio::parse_double(token);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

 private:
  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

void read_layers(LineReader& in, std::string_view group, std::vector<DenseLayer>& layers) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    const std::string prefix = std::string(group) + "." + std::to_string(l);
    auto header = in.expect("param");
    if (header.size() != 3 || header[0] != prefix + ".weight" ||
        in.to_size(header[1]) != layer.weight.rows() ||
        in.to_size(header[2]) != layer.weight.cols()) {
      in.fail("expected param " + prefix + ".weight " + std::to_string(layer.weight.rows()) +
              " " + std::to_string(layer.weight.cols()));
    }
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
      const auto row = in.next();
      if (row.size() != layer.weight.cols()) in.fail("weight row has wrong length");
      for (std::size_t c = 0; c < row.size(); ++c) layer.weight(r, c) = in.to_double(row[c]);
    }
    header = in.expect("param");
    if (header.size() != 3 || header[0] != prefix + ".bias" ||
        in.to_size(header[1]) != layer.bias.size() || header[2] != "1") {
      in.fail("expected param " + prefix + ".bias " + std::to_string(layer.bias.size()) + " 1");
    }
    for (double& b : layer.bias) {
      const auto row = in.next();
      if (row.size() != 1) in.fail("bias line must hold one value");
      b = in.to_double(row[0]);
    }
  }
}

}  // namespace

std::string save_checkpoint(const MultiTaskNet& net) {
  const auto& shape = net.shape();
  std::string out;
  out += std::string(kMagic) + " " + std::to_string(kSchemaVersion) + "\n";
  out += "activation " + std::string(activation_name(shape.activation)) + "\n";
  out += sizes_line("layer_sizes", shape.layer_sizes);
  out += sizes_line("head_hidden", shape.head_hidden);
  out += "classes_a " + std::to_string(shape.classes_a) + "\n";
  out += "classes_b " + std::to_string(shape.classes_b) + "\n";
  write_layers(out, "trunk", net.trunk());
  write_layers(out, "head_a", net.head(Task::A));
  write_layers(out, "head_b", net.head(Task::B));
  out += "end\n";
  return out;
}

MultiTaskNet load_checkpoint(std::string_view text, const std::string& source) {
  LineReader in(text, source);
  auto magic = in.expect(kMagic);
  if (magic.size() != 1 || in.to_size(magic[0]) != kSchemaVersion) {
    in.fail("unsupported checkpoint schema version");
  }
  NetShape shape;
  auto act = in.expect("activation");
  if (act.size() != 1) in.fail("activation takes one value");
  try {
    shape.activation = parse_activation(act[0]);
  } catch (const ConfigError& e) {
    in.fail(e.what());
  }
  for (auto& t : in.expect("layer_sizes")) shape.layer_sizes.push_back(in.to_size(t));
  for (auto& t : in.expect("head_hidden")) shape.head_hidden.push_back(in.to_size(t));
  auto ca = in.expect("classes_a");
  auto cb = in.expect("classes_b");
  if (ca.size() != 1 || cb.size() != 1) in.fail("class counts take one value");
  shape.classes_a = in.to_size(ca[0]);
  shape.classes_b = in.to_size(cb[0]);

  std::optional<MultiTaskNet> net;
  try {
    net.emplace(shape);
  } catch (const ConfigError& e) {
    in.fail(e.what());
  }
  read_layers(in, "trunk", net->trunk());
  read_layers(in, "head_a", net->head(Task::A));
  read_layers(in, "head_b", net->head(Task::B));
  if (!in.expect("end").empty()) in.fail("trailing tokens after 'end'");
  return *std::move(net);
}

}  // namespace mtlsa
