#include "rankopt/checkpoint.hpp"

#include "rankopt/errors.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace rankopt {

void write_checkpoint(std::ostream& out, const Model& model) {
  out << kCheckpointMagic << '\n';
  const auto& dims = model.layer_dims();
  for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? " " : "") << dims[i];
  out << '\n';
  std::array<char, 8> bytes{};
  for (Index i = 0; i < model.weights().size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(model.weights()(i));
    for (int b = 0; b < 8; ++b) bytes[static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    out.write(bytes.data(), bytes.size());
  }
}

Model read_checkpoint(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic) || magic != kCheckpointMagic)
    throw DataError("checkpoint: missing RANKOPT1 header");
  std::string dims_line;
  if (!std::getline(in, dims_line)) throw DataError("checkpoint: missing layer widths");
  std::istringstream ds(dims_line);
  std::vector<Index> dims;
  Index w = 0;
  while (ds >> w) dims.push_back(w);
  if (!ds.eof() || dims.size() < 2) throw DataError("checkpoint: malformed layer widths");
  for (auto d : dims)
    if (d < 1) throw DataError("checkpoint: layer widths must be >= 1");

  Eigen::VectorXd weights(Model::parameter_count(dims));
  std::array<unsigned char, 8> bytes{};
  for (Index i = 0; i < weights.size(); ++i) {
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
      throw DataError("checkpoint: truncated weights");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(b)]) << (8 * b);
    weights(i) = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("checkpoint: trailing bytes");
  return Model(std::move(dims), std::move(weights));
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, model);
  if (!out) throw DataError("error writing checkpoint " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace rankopt
