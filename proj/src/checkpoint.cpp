#include "acorrect/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "acorrect/errors.hpp"

namespace acorrect {

namespace {
constexpr const char* kFormat = "acpt/1";

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  return v;
}
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto& params = checkpoint.net.parameters();
  nlohmann::json header{{"format", kFormat},
                        {"architecture", checkpoint.net.architecture()},
                        {"parameter_count", params.size()},
                        {"training_config", checkpoint.training_config},
                        {"seed", checkpoint.seed}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << header.dump() << '\n';
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(params[i]));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty checkpoint " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint header: " + std::string(e.what()));
  }
  if (header.value("format", "") != kFormat) throw DataError("unsupported checkpoint format");
  NetArchitecture arch;
  try {
    arch = header.at("architecture").get<NetArchitecture>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint architecture unreadable: " + std::string(e.what()));
  }
  Checkpoint cp{AlignmentNet(arch), header.value("training_config", nlohmann::json::object()),
                header.value("seed", std::uint64_t{0})};
  const auto count = header.value("parameter_count", std::size_t{0});
  auto& params = cp.net.parameters();
  if (count != static_cast<std::size_t>(params.size()))
    throw DataError("checkpoint parameter count does not match its architecture");
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    std::uint32_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw DataError("truncated checkpoint " + path.string());
    params[i] = std::bit_cast<float>(to_little_endian(bits));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in checkpoint " + path.string());
  return cp;
}

}  // namespace acorrect
