#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "socs/errors.hpp"
#include "socs/io.hpp"
#include "socs/model.hpp"

namespace socs {

// Checkpoint layout: an 8-byte little-endian header length, a JSON manifest
// (model config plus per-tensor name / shape / byte offset), then row-major
// float32 payload written little-endian byte by byte, so files are portable
// across hosts.

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(char((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64_le(std::istream& is) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    const int b = is.get();
    if (b < 0) throw DataError("checkpoint truncated in header");
    v |= std::uint64_t(b) << (8 * i);
  }
  return v;
}

inline void put_f32_le(std::ostream& os, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) os.put(char((u >> (8 * i)) & 0xff));
}

inline float get_f32_le(std::istream& is) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) {
    const int b = is.get();
    if (b < 0) throw DataError("checkpoint truncated in payload");
    u |= std::uint32_t(b) << (8 * i);
  }
  return std::bit_cast<float>(u);
}

}  // namespace detail

template <typename S>
void save_checkpoint(const std::string& path, Parameters<S>& params,
                     const ModelConfig& cfg) {
  Json tensors = Json::array();
  std::uint64_t offset = 0;
  params.for_each_tensor([&](const std::string& name, ad::MatX<S>& m) {
    tensors.push_back({{"name", name},
                       {"shape", {m.rows(), m.cols()}},
                       {"offset", offset}});
    offset += std::uint64_t(m.size()) * 4;
  });
  const Json manifest = {{"config", model_config_to_json(cfg)},
                         {"tensors", tensors}};
  const std::string header = manifest.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  detail::put_u64_le(os, header.size());
  os.write(header.data(), std::streamsize(header.size()));
  params.for_each_tensor([&](const std::string&, ad::MatX<S>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        detail::put_f32_le(os, float(m(i, j)));
  });
  if (!os) throw DataError("short write for checkpoint: " + path);
}

template <typename S>
std::pair<ModelConfig, Parameters<S>> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  const std::uint64_t header_len = detail::get_u64_le(is);
  std::string header(header_len, '\0');
  is.read(header.data(), std::streamsize(header_len));
  if (std::uint64_t(is.gcount()) != header_len)
    throw DataError("checkpoint truncated in manifest");

  Json manifest;
  try {
    manifest = Json::parse(header);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("bad checkpoint manifest: ") + e.what());
  }
  const ModelConfig cfg = model_config_from_json(manifest.at("config"));
  Parameters<S> params = Parameters<S>::init(cfg);

  // Record the declared layout, then fill tensors in manifest order so the
  // file's offsets are honored even if the visitation order ever changes.
  struct Entry {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    std::uint64_t offset = 0;
  };
  std::vector<Entry> entries;
  for (const auto& t : manifest.at("tensors"))
    entries.push_back({t.at("name").get<std::string>(),
                       Eigen::Index(t.at("shape").at(0).get<std::int64_t>()),
                       Eigen::Index(t.at("shape").at(1).get<std::int64_t>()),
                       t.at("offset").get<std::uint64_t>()});

  std::size_t matched = 0;
  const std::streampos payload_start = is.tellg();
  params.for_each_tensor([&](const std::string& name, ad::MatX<S>& m) {
    const Entry* found = nullptr;
    for (const auto& e : entries)
      if (e.name == name) {
        found = &e;
        break;
      }
    if (found == nullptr)
      throw DataError("checkpoint missing tensor: " + name);
    if (found->rows != m.rows() || found->cols != m.cols())
      throw DataError("checkpoint shape mismatch for tensor: " + name);
    is.seekg(payload_start + std::streampos(found->offset));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = S(detail::get_f32_le(is));
    ++matched;
  });
  if (matched != entries.size())
    throw DataError("checkpoint holds unknown extra tensors");
  return {cfg, std::move(params)};
}

}  // namespace socs
