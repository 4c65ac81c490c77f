#include "pagan/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pagan::nn {

namespace {

constexpr const char* kMagic = "pagan-checkpoint";
constexpr int kVersion = 1;

void put_le(std::ostream& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(bytes, 8);
}

double get_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string next_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("checkpoint manifest truncated");
  return line;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << kMagic << ' ' << kVersion << '\n';
  out << "tensors " << tensors.size() << '\n';
  for (const auto& [name, t] : tensors) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      throw std::invalid_argument("checkpoint tensor names must be non-empty without whitespace");
    }
    out << name << ' ' << t.rank();
    for (auto d : t.shape()) out << ' ' << d;
    out << '\n';
  }
  out << "data\n";
  for (const auto& [name, t] : tensors)
    for (double v : t.values()) put_le(out, v);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  {
    std::istringstream header(next_line(in));
    std::string magic;
    int version = 0;
    header >> magic >> version;
    if (magic != kMagic || version != kVersion) throw std::runtime_error("not a pagan checkpoint");
  }
  std::size_t count = 0;
  {
    std::istringstream line(next_line(in));
    std::string key;
    line >> key >> count;
    if (key != "tensors" || !line) throw std::runtime_error("bad checkpoint tensor count");
  }
  NamedTensors tensors;
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream line(next_line(in));
    std::string name;
    std::size_t rank = 0;
    line >> name >> rank;
    Shape shape(rank);
    for (auto& d : shape) line >> d;
    if (!line) throw std::runtime_error("bad checkpoint manifest line for tensor " + std::to_string(i));
    tensors.emplace_back(std::move(name), Tensor(std::move(shape)));
  }
  if (next_line(in) != "data") throw std::runtime_error("checkpoint missing data marker");
  for (auto& [name, t] : tensors)
    for (double& v : t.values()) v = get_le(in);
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("checkpoint has trailing bytes");
  return tensors;
}

}  // namespace pagan::nn
