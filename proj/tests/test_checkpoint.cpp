#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "socs/checkpoint.hpp"
#include "socs/rng.hpp"

using namespace socs;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.h = 8;
  c.k = 4;
  c.num_bins = 16;
  c.block_sizes = {16, 12, 6};
  c.init_seed = 99;
  return c;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

}  // namespace

TEST_CASE("checkpoints roundtrip parameters and config") {
  const ModelConfig cfg = tiny_config();
  Parameters<double> params = Parameters<double>::init(cfg);
  const std::string path = "/tmp/socs_test_ckpt.bin";
  save_checkpoint(path, params, cfg);

  auto [cfg2, params2] = load_checkpoint<double>(path);
  CHECK(model_config_to_json(cfg2) == model_config_to_json(cfg));

  // Payload is float32, so doubles come back with single precision.
  double worst = 0.0;
  std::size_t tensors = 0;
  params.for_each_tensor([&](const std::string& name,
                             const ad::MatX<double>& t) {
    bool found = false;
    params2.for_each_tensor(
        [&](const std::string& name2, const ad::MatX<double>& t2) {
          if (name2 != name) return;
          found = true;
          REQUIRE(t2.rows() == t.rows());
          REQUIRE(t2.cols() == t.cols());
          const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
          worst = std::max(worst,
                           (t2 - t).cwiseAbs().maxCoeff() / scale);
        });
    CHECK(found);
    ++tensors;
  });
  CHECK(tensors == 13 * 2 + 12);
  CHECK(worst < 1e-6);
  fs::remove(path);
}

TEST_CASE("saving is deterministic byte for byte") {
  const ModelConfig cfg = tiny_config();
  Parameters<double> params = Parameters<double>::init(cfg);
  save_checkpoint("/tmp/socs_ck_a.bin", params, cfg);
  save_checkpoint("/tmp/socs_ck_b.bin", params, cfg);
  CHECK(file_bytes("/tmp/socs_ck_a.bin") == file_bytes("/tmp/socs_ck_b.bin"));
  fs::remove("/tmp/socs_ck_a.bin");
  fs::remove("/tmp/socs_ck_b.bin");
}

TEST_CASE("float parameters roundtrip exactly") {
  const ModelConfig cfg = tiny_config();
  Parameters<float> params = Parameters<float>::init(cfg);
  const std::string path = "/tmp/socs_test_ckpt_f32.bin";
  save_checkpoint(path, params, cfg);
  auto [cfg2, params2] = load_checkpoint<float>(path);
  params.for_each_tensor([&](const std::string& name,
                             const ad::MatX<float>& t) {
    params2.for_each_tensor(
        [&](const std::string& name2, const ad::MatX<float>& t2) {
          if (name2 == name) CHECK(t2 == t);
        });
  });
  fs::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected loudly") {
  const ModelConfig cfg = tiny_config();
  Parameters<double> params = Parameters<double>::init(cfg);
  const std::string path = "/tmp/socs_test_ckpt_bad.bin";
  save_checkpoint(path, params, cfg);
  const std::string good = file_bytes(path);

  // Truncated payload.
  write_bytes(path, good.substr(0, good.size() - 64));
  CHECK_THROWS_AS(load_checkpoint<double>(path), DataError);

  // Truncated header.
  write_bytes(path, good.substr(0, 4));
  CHECK_THROWS_AS(load_checkpoint<double>(path), DataError);

  // Valid length prefix, garbage manifest.
  std::string garbage = good;
  for (std::size_t i = 8; i < 40; ++i) garbage[i] = 'x';
  write_bytes(path, garbage);
  CHECK_THROWS_AS(load_checkpoint<double>(path), DataError);

  CHECK_THROWS_AS(load_checkpoint<double>("/tmp/no_such_checkpoint.bin"),
                  DataError);
  fs::remove(path);
}
