#include <cmath>
#include <filesystem>

#include <zlib.h>

#include "doctest.h"
#include "helpers.hpp"
#include "sgen/container.hpp"
#include "sgen/error.hpp"
#include "sgen/model.hpp"
#include "sgen/synth.hpp"

using namespace sgen;

namespace {
ErrorCode load_code(const std::filesystem::path& p) {
  try {
    load_model(p);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ConfigError;
}

std::string with_crc(std::string body) {
  const auto crc = static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
  for (int b = 0; b < 4; ++b) body.push_back(static_cast<char>((crc >> (8 * b)) & 0xffu));
  return body;
}
}  // namespace

TEST_CASE("base64 round trip") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  std::string all;
  for (int i = 0; i < 256; ++i) all.push_back(static_cast<char>(i));
  for (std::size_t len : {0u, 1u, 2u, 3u, 100u, 256u}) CHECK(base64_decode(base64_encode(all.substr(0, len))) == all.substr(0, len));
}

TEST_CASE("model save and load") {
  const auto dir = testutil::temp_dir("model");
  for (const char* preset : {"ax-small", "alt-small"}) {
    SGModel model = preset_model(preset);
    model.meta.loglik = -1234.5678901234;
    model.meta.n_obs = 77;
    save_model(model, dir / "m.sgm");
    const auto back = load_model(dir / "m.sgm");
    CHECK(back == model);
  }

  auto bytes = detail::read_file(dir / "m.sgm");
  detail::write_file(dir / "trunc.sgm", bytes.substr(0, bytes.size() - 100));
  CHECK(load_code(dir / "trunc.sgm") == ErrorCode::ChecksumFailure);

  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  detail::write_file(dir / "flip.sgm", flipped);
  CHECK(load_code(dir / "flip.sgm") == ErrorCode::ChecksumFailure);

  std::string body = bytes.substr(0, bytes.size() - 4);
  const auto pos = body.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  body.replace(pos, 11, "\"version\":2");
  detail::write_file(dir / "v2.sgm", with_crc(body));
  CHECK(load_code(dir / "v2.sgm") == ErrorCode::VersionMismatch);
}

TEST_CASE("compressed mean reproduces a smooth mean") {
  const auto grid = make_grid(3, 8, 40, 0.0, 10.0);
  const auto mean = synthetic_mean(grid);
  const auto cm = compress_mean(mean);
  CHECK(cm.rank() >= 2);
  CHECK(cm.rank() < 40);
  double worst = 0;
  for (std::size_t k = 0; k < 40; ++k)
    for (std::size_t m = 0; m < 3; ++m)
      for (std::size_t n = 0; n < 8; ++n) worst = std::max(worst, std::abs(cm.at(k, m, n) - mean.at(k, m, n)));
  CHECK(worst < 0.02);

  const auto B = smoother_basis(40, 0.01, 0.02);
  CHECK((B.transpose() * B - Eigen::MatrixXd::Identity(B.cols(), B.cols())).norm() < 1e-10);
}

TEST_CASE("model at the large grid shape is compact") {
  const auto model = preset_model("full-grid");
  const double model_bytes = double(serialize_model(model).size());
  const double ensemble_bytes = 5.0 * 95 * 134 * 288 * 8;
  CHECK(ensemble_bytes / model_bytes >= 20.0);
}
