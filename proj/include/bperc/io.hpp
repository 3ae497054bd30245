#pragma once
// Configurations as raw bit blobs with a JSON header, for replay and
// regression fixtures.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bperc/configuration.hpp"
#include "bperc/errors.hpp"

namespace bperc {

inline constexpr const char* kBlobEncoding = "slot bits, LSB first in little-endian 64-bit words; slot = vertex*d + axis";

template <int D>
nlohmann::json configuration_header(const Configuration<D>& c, const std::string& manifest_hash = "") {
  const auto& w = c.window();
  nlohmann::json h;
  h["window"] = {{"d", D}, {"N", w.box_scale()}, {"R", w.box_radius()}};
  h["p"] = c.p();
  h["seed"] = c.seed();
  h["sample_index"] = c.sample_index();
  h["slots"] = w.slot_count();
  h["open_edges"] = c.open_count();
  h["encoding"] = kBlobEncoding;
  if (!manifest_hash.empty()) h["manifest_hash"] = manifest_hash;
  return h;
}

template <int D>
std::vector<std::uint8_t> configuration_blob(const Configuration<D>& c) {
  std::vector<std::uint8_t> out;
  out.reserve(c.words().size() * 8);
  for (std::uint64_t word : c.words())
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(word >> (8 * b)));
  return out;
}

/// Rebuilds a configuration from header and blob, bit for bit.
template <int D>
Configuration<D> configuration_from_blob(const nlohmann::json& h, const std::vector<std::uint8_t>& blob,
                                         const LatticeWindow<D>& w) {
  if (h.at("window").at("d").get<int>() != D || h.at("window").at("N").get<int>() != w.box_scale() ||
      h.at("window").at("R").get<int>() != w.box_radius())
    throw InvalidArgument("configuration header does not match the window");
  if (blob.size() != (w.slot_count() + 63) / 64 * 8) throw InvalidArgument("configuration blob has the wrong size");
  Configuration<D> c(w, h.at("p").get<double>(), h.at("seed").get<std::uint64_t>(),
                     h.at("sample_index").get<std::uint64_t>());
  for (std::size_t slot = 0; slot < w.slot_count(); ++slot)
    if ((blob[slot / 8] >> (slot % 8)) & 1u) c.set(slot, true);
  return c;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace bperc
