#include "qpfk/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "qpfk/model.hpp"

namespace qpfk {

namespace {

constexpr char kMagic[4] = {'Q', 'P', 'H', 'S'};
constexpr double kDriftTol = 1e-10;

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <class T>
T get_le(const std::uint8_t* p) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const TorusState& state) {
  const GridDims d = state.h.dims();
  nlohmann::json header = {
      {"grid", {d.n1, d.n2}},
      {"omega", state.fr.omega()},
      {"alpha", {state.fr.alpha()[0], state.fr.alpha()[1]}},
      {"model", state.model},
      {"eps", {state.eps1, state.eps2}},
      {"lambda", state.lambda},
      {"residual_sup", state.residual_sup},
  };
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(12 + text.size() + 16 * d.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  put_le<std::uint32_t>(out, kSnapshotVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const cplx& c : state.h.coeffs()) {
    put_le<double>(out, c.real());
    put_le<double>(out, c.imag());
  }
  return out;
}

LoadedSnapshot decode_snapshot(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw SnapshotError("truncated snapshot: missing preamble");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw SnapshotError("bad magic");
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kSnapshotVersion) throw SnapshotError("bad version " + std::to_string(version));
  const auto hlen = get_le<std::uint32_t>(bytes.data() + 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(hlen)) throw SnapshotError("truncated snapshot: header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + hlen);
  } catch (const nlohmann::json::exception& err) {
    throw SnapshotError(std::string("malformed header: ") + err.what());
  }

  LoadedSnapshot out;
  TorusState& st = out.state;
  GridDims d;
  try {
    d = {header.at("grid").at(0).get<int>(), header.at("grid").at(1).get<int>()};
    st.fr = Frequency(header.at("omega").get<double>(),
                      {header.at("alpha").at(0).get<double>(), header.at("alpha").at(1).get<double>()});
    st.model = header.at("model").get<std::string>();
    st.eps1 = header.at("eps").at(0).get<double>();
    st.eps2 = header.at("eps").at(1).get<double>();
    st.lambda = header.at("lambda").get<double>();
    out.header_residual_sup = header.at("residual_sup").get<double>();
  } catch (const nlohmann::json::exception& err) {
    throw SnapshotError(std::string("malformed header: ") + err.what());
  }
  try {
    validate_dims(d);
  } catch (const FieldError& err) {
    throw SnapshotError(std::string("malformed header: ") + err.what());
  }

  const std::size_t payload = 16 * d.size();
  const std::size_t offset = 12 + static_cast<std::size_t>(hlen);
  if (bytes.size() < offset + payload) throw SnapshotError("truncated payload");
  if (bytes.size() > offset + payload) throw SnapshotError("trailing bytes after payload");

  ComplexBuffer coeffs(d.size());
  const std::uint8_t* p = bytes.data() + offset;
  for (std::size_t i = 0; i < d.size(); ++i, p += 16) {
    coeffs[i] = {get_le<double>(p), get_le<double>(p + 8)};
  }
  st.h = SpectralField(d, std::move(coeffs));
  st.residual_sup = out.header_residual_sup;

  try {
    const TrigPotential v = model_family(parse_model(st.model))(st.eps1, st.eps2);
    refresh_residual(st, v);
    const double drift = std::abs(st.residual_sup - out.header_residual_sup);
    if (!(drift <= kDriftTol)) {
      std::ostringstream msg;
      msg << "recomputed residual " << st.residual_sup << " differs from stored " << out.header_residual_sup;
      out.warnings.push_back(msg.str());
    }
  } catch (const FieldError& err) {
    out.warnings.push_back(std::string("residual not recomputed: ") + err.what());
  }
  return out;
}

void save_snapshot(const TorusState& state, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_snapshot(state);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SnapshotError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SnapshotError("write failed: " + path.string());
}

LoadedSnapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace qpfk
