#include "sgen/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <Eigen/Eigenvalues>
#include <zlib.h>

#include "json.hpp"
#include "sgen/container.hpp"
#include "sgen/error.hpp"

namespace sgen {

using nlohmann::json;

Eigen::MatrixXd smoother_basis(std::size_t K, double lambda, double min_gain) {
  if (K < 3) throw Error(ErrorCode::DegenerateSeries, "smoothing needs at least 3 time steps");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error(ErrorCode::ConfigError, "lambda must lie in (0, 1]");
  const auto Ki = static_cast<Eigen::Index>(K);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(Ki - 2, Ki);
  for (Eigen::Index k = 0; k + 2 < Ki; ++k) {
    D(k, k) = 1.0;
    D(k, k + 1) = -2.0;
    D(k, k + 2) = 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D.transpose() * D);
  const Eigen::VectorXd& mu = es.eigenvalues();
  Eigen::Index q = 2;
  while (q < Ki && lambda / (lambda + (1.0 - lambda) * std::max(0.0, mu(q))) >= min_gain) ++q;
  Eigen::MatrixXd U = es.eigenvectors().leftCols(q);
  // Fix the sign of each vector so the basis does not depend on solver internals.
  for (Eigen::Index j = 0; j < q; ++j) {
    Eigen::Index imax;
    U.col(j).cwiseAbs().maxCoeff(&imax);
    if (U(imax, j) < 0) U.col(j) *= -1.0;
  }
  return U;
}

double CompressedMean::at(std::size_t k, std::size_t m, std::size_t n) const {
  const std::size_t q = rank();
  const float* c = coef.data() + (m * N + n) * q;
  double v = 0.0;
  for (std::size_t j = 0; j < q; ++j) v += basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * c[j];
  return v;
}

std::vector<double> CompressedMean::expand() const {
  std::vector<double> out(K * M * N);
  const std::size_t q = rank();
  for (std::size_t l = 0; l < M * N; ++l) {
    const float* c = coef.data() + l * q;
    for (std::size_t k = 0; k < K; ++k) {
      double v = 0.0;
      for (std::size_t j = 0; j < q; ++j) v += basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * c[j];
      out[k * M * N + l] = v;
    }
  }
  return out;
}

bool CompressedMean::operator==(const CompressedMean& o) const {
  return K == o.K && M == o.M && N == o.N && lambda == o.lambda && min_gain == o.min_gain &&
         basis.rows() == o.basis.rows() && basis.cols() == o.basis.cols() && basis == o.basis && coef == o.coef;
}

CompressedMean compress_mean(const MeanModel& mean, double min_gain) {
  const auto& g = mean.spec;
  CompressedMean out;
  out.K = g.K;
  out.M = g.M;
  out.N = g.N;
  out.lambda = mean.lambda;
  out.min_gain = min_gain;
  out.basis = smoother_basis(g.K, mean.lambda, min_gain);
  const std::size_t q = out.rank();
  out.coef.resize(g.M * g.N * q);
  Eigen::VectorXd series(static_cast<Eigen::Index>(g.K));
  for (std::size_t m = 0; m < g.M; ++m)
    for (std::size_t n = 0; n < g.N; ++n) {
      for (std::size_t k = 0; k < g.K; ++k) series(static_cast<Eigen::Index>(k)) = mean.at(k, m, n);
      const Eigen::VectorXd c = out.basis.transpose() * series;
      for (std::size_t j = 0; j < q; ++j)
        out.coef[g.loc(m, n) * q + j] = static_cast<float>(c(static_cast<Eigen::Index>(j)));
    }
  return out;
}

BandGeometry SGModel::geometry(std::size_t m) const {
  const std::size_t N = grid.N;
  if (surface.empty()) return ocean_band(N);
  BandGeometry b;
  b.N = N;
  b.land.resize(N);
  b.mountain.resize(N);
  b.altitude.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    const auto code = surface[grid.loc(m, n)];
    b.land[n] = code != kSurfaceOcean;
    b.mountain[n] = code == kSurfaceMountain;
    b.altitude[n] = altitude[grid.loc(m, n)];
    b.has_ocean |= code == kSurfaceOcean;
    b.has_plain_land |= code == kSurfaceLand;
    b.has_mountain |= code == kSurfaceMountain;
  }
  return b;
}

BandCovariance SGModel::band_covariance(std::size_t m) const {
  return build_band_covariance(bands.at(m), geometry(m), m);
}

void SGModel::validate() const {
  grid.validate();
  const std::size_t L = grid.M * grid.N;
  if (temporal.M != grid.M || temporal.N != grid.N || temporal.phi1.size() != L || temporal.phi2.size() != L ||
      temporal.sd.size() != L)
    throw Error(ErrorCode::InvalidModel, "temporal parameters do not match the grid");
  for (std::size_t i = 0; i < L; ++i) {
    if (!check_stationary(temporal.phi1[i], temporal.phi2[i]))
      throw Error(ErrorCode::InvalidModel, "non-stationary AR(2) coefficients at location " + std::to_string(i));
    if (!(temporal.sd[i] > 0.0 && std::isfinite(temporal.sd[i])))
      throw Error(ErrorCode::InvalidModel, "innovation sd must be positive");
  }
  if (bands.size() != grid.M) throw Error(ErrorCode::InvalidModel, "one spectrum per band is required");
  for (const auto& b : bands) {
    if (b.variant != variant) throw Error(ErrorCode::InvalidModel, "band variant differs from model variant");
    b.validate(grid.N);
  }
  lat.validate(grid.M);
  if (mean.K != grid.K || mean.M != grid.M || mean.N != grid.N || mean.coef.size() != L * mean.rank() ||
      static_cast<std::size_t>(mean.basis.rows()) != grid.K)
    throw Error(ErrorCode::InvalidModel, "mean does not match the grid");
  if (variant != Variant::AX && (surface.size() != L || altitude.size() != L))
    throw Error(ErrorCode::InvalidModel, "land/ocean variants need surface codes and altitudes");
  for (auto c : surface)
    if (c > kSurfaceMountain) throw Error(ErrorCode::InvalidModel, "bad surface code");
}

void encode_geometry(const GeoDescriptors& geo, std::vector<std::uint8_t>& surface, std::vector<float>& altitude) {
  geo.validate();
  surface.resize(geo.M * geo.N);
  altitude.resize(geo.M * geo.N);
  for (std::size_t m = 0; m < geo.M; ++m)
    for (std::size_t n = 0; n < geo.N; ++n) {
      const auto cls = classify(geo, m, n);
      surface[m * geo.N + n] = cls == SurfaceClass::Ocean ? kSurfaceOcean
                               : cls == SurfaceClass::Land ? kSurfaceLand
                                                           : kSurfaceMountain;
      altitude[m * geo.N + n] = static_cast<float>(geo.alt(m, n));
    }
}

std::string base64_encode(std::string_view bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<const char*, 6, 8>>;
  std::string out(It(bytes.data()), It(bytes.data() + bytes.size()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::string base64_decode(std::string_view text) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<const char*>, 8, 6>;
  std::size_t pad = 0;
  while (pad < 2 && pad < text.size() && text[text.size() - 1 - pad] == '=') ++pad;
  if (text.size() % 4 != 0) throw Error(ErrorCode::MalformedHeader, "base64 length is not a multiple of 4");
  std::string body(text.substr(0, text.size() - pad));
  body.append(pad, 'A');
  std::string out;
  try {
    out.assign(It(body.data()), It(body.data() + body.size()));
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedHeader, "invalid base64 text");
  }
  out.resize(out.size() - pad);
  return out;
}

namespace {

void put_le_floats(std::string& out, const float* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const auto v = std::bit_cast<std::uint32_t>(data[i]);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
  }
}

void get_le_floats(const char* in, float* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[4 * i + b])) << (8 * b);
    data[i] = std::bit_cast<float>(v);
  }
}

std::string float_array_b64(const std::vector<double>& v) {
  std::vector<float> f(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(v[i]);
  std::string raw;
  put_le_floats(raw, f.data(), f.size());
  return base64_encode(raw);
}

std::vector<double> float_array_from_b64(const json& j, std::size_t count) {
  const std::string raw = base64_decode(j.get<std::string>());
  if (raw.size() != 4 * count) throw Error(ErrorCode::MalformedHeader, "float array has the wrong length");
  std::vector<float> f(count);
  get_le_floats(raw.data(), f.data(), count);
  return {f.begin(), f.end()};
}

json regime_json(const RegimeSpectrum& r) { return json::array({r.phi, r.alpha, r.nu}); }

RegimeSpectrum regime_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + done), chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string serialize_model(const SGModel& model) {
  model.validate();
  const auto& g = model.grid;
  json bands = json::array();
  for (const auto& b : model.bands) {
    bands.push_back({{"beta", json::array({regime_json(b.beta[0]), regime_json(b.beta[1]), regime_json(b.beta[2])})},
                     {"gamma", json::array({b.gamma_phi, b.gamma_alpha, b.gamma_nu})},
                     {"g", b.g},
                     {"r", b.r}});
  }
  const auto& lat = model.lat;
  std::vector<int> tropical(lat.tropical.begin(), lat.tropical.end());
  const bool geo = !model.surface.empty();
  const std::size_t L = g.M * g.N;
  const std::size_t q = model.mean.rank();
  json h = {
      {"format", "sgm"},
      {"version", kModelVersion},
      {"software", model.meta.software},
      {"grid",
       {{"M", g.M}, {"N", g.N}, {"K", g.K}, {"latitudes", g.latitudes}, {"longitudes", g.longitudes},
        {"start_year", g.start_year}}},
      {"variant", std::string(to_string(model.variant))},
      {"temporal",
       {{"encoding", "f32le-base64"},
        {"phi1", float_array_b64(model.temporal.phi1)},
        {"phi2", float_array_b64(model.temporal.phi2)},
        {"sd", float_array_b64(model.temporal.sd)}}},
      {"bands", bands},
      {"lat",
       {{"xi", lat.xi}, {"tau", lat.tau}, {"tropical", tropical}, {"xi_global", lat.xi_global},
        {"tau_global", lat.tau_global}, {"a", lat.a}, {"b", lat.b}, {"tropics_deg", lat.tropics_bound}}},
      {"mean", {{"lambda", model.mean.lambda}, {"min_gain", model.mean.min_gain}, {"rank", q}}},
      {"geometry", geo},
      {"fit",
       {{"loglik", model.meta.loglik}, {"bic", model.meta.bic}, {"n_params", model.meta.n_params},
        {"n_obs", model.meta.n_obs}, {"blocks", model.meta.blocks}, {"var1", model.meta.var1}}},
      {"binary", {{"basis_f64", g.K * q}, {"coef_f32", L * q}, {"altitude_f32", geo ? L : 0}, {"surface_u8", geo ? L : 0}}},
  };
  std::string out = h.dump();
  out.push_back('\n');
  // Basis in column-major order.
  detail::put_le_doubles(out, model.mean.basis.data(), static_cast<std::size_t>(model.mean.basis.size()));
  put_le_floats(out, model.mean.coef.data(), model.mean.coef.size());
  if (geo) {
    put_le_floats(out, model.altitude.data(), model.altitude.size());
    out.append(reinterpret_cast<const char*>(model.surface.data()), model.surface.size());
  }
  const std::uint32_t crc = crc_of(out);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((crc >> (8 * b)) & 0xffu));
  return out;
}

SGModel parse_model(std::string_view bytes) {
  if (bytes.size() < 5) throw Error(ErrorCode::ChecksumFailure, "model file is truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  std::uint32_t stored = 0;
  for (int b = 0; b < 4; ++b)
    stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[bytes.size() - 4 + b])) << (8 * b);
  if (crc_of(body) != stored) throw Error(ErrorCode::ChecksumFailure, "model checksum mismatch");

  const auto nl = body.find('\n');
  if (nl == std::string_view::npos) throw Error(ErrorCode::MalformedHeader, "missing header terminator");
  json h;
  try {
    h = json::parse(body.substr(0, nl));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, e.what());
  }
  if (h.value("format", "") != "sgm") throw Error(ErrorCode::MalformedHeader, "not a model file");
  if (h.value("version", -1) != kModelVersion)
    throw Error(ErrorCode::VersionMismatch, "model version " + h.value("version", json(-1)).dump() + " is not supported");

  SGModel model;
  try {
    const auto& jg = h.at("grid");
    auto& g = model.grid;
    g.M = jg.at("M").get<std::size_t>();
    g.N = jg.at("N").get<std::size_t>();
    g.K = jg.at("K").get<std::size_t>();
    g.latitudes = jg.at("latitudes").get<std::vector<double>>();
    g.longitudes = jg.at("longitudes").get<std::vector<double>>();
    g.start_year = jg.at("start_year").get<int>();
    g.validate();
    const std::size_t L = g.M * g.N;
    model.variant = parse_variant(h.at("variant").get<std::string>());
    model.temporal = TemporalParams(g.M, g.N);
    model.temporal.phi1 = float_array_from_b64(h.at("temporal").at("phi1"), L);
    model.temporal.phi2 = float_array_from_b64(h.at("temporal").at("phi2"), L);
    model.temporal.sd = float_array_from_b64(h.at("temporal").at("sd"), L);
    for (const auto& jb : h.at("bands")) {
      BandSpectrumParams b;
      b.variant = model.variant;
      for (std::size_t j = 0; j < 3; ++j) b.beta[j] = regime_from_json(jb.at("beta").at(j));
      b.gamma_phi = jb.at("gamma").at(0).get<double>();
      b.gamma_alpha = jb.at("gamma").at(1).get<double>();
      b.gamma_nu = jb.at("gamma").at(2).get<double>();
      b.g = jb.at("g").get<int>();
      b.r = jb.at("r").get<double>();
      model.bands.push_back(b);
    }
    const auto& jl = h.at("lat");
    auto& lat = model.lat;
    lat.xi = jl.at("xi").get<std::vector<double>>();
    lat.tau = jl.at("tau").get<std::vector<double>>();
    for (int t : jl.at("tropical").get<std::vector<int>>()) lat.tropical.push_back(static_cast<std::uint8_t>(t != 0));
    lat.xi_global = jl.at("xi_global").get<double>();
    lat.tau_global = jl.at("tau_global").get<double>();
    lat.a = jl.at("a").get<double>();
    lat.b = jl.at("b").get<double>();
    lat.tropics_bound = jl.at("tropics_deg").get<double>();
    const auto& jf = h.at("fit");
    auto& meta = model.meta;
    meta.loglik = jf.at("loglik").get<double>();
    meta.bic = jf.at("bic").get<double>();
    meta.n_params = jf.at("n_params").get<std::size_t>();
    meta.n_obs = jf.at("n_obs").get<std::size_t>();
    meta.blocks = jf.at("blocks").get<std::size_t>();
    meta.var1 = jf.at("var1").get<bool>();
    meta.software = h.at("software").get<std::string>();

    auto& mean = model.mean;
    mean.K = g.K;
    mean.M = g.M;
    mean.N = g.N;
    mean.lambda = h.at("mean").at("lambda").get<double>();
    mean.min_gain = h.at("mean").at("min_gain").get<double>();
    const auto q = h.at("mean").at("rank").get<std::size_t>();
    const bool geo = h.at("geometry").get<bool>();
    const std::size_t need = 8 * g.K * q + 4 * L * q + (geo ? 5 * L : 0);
    const char* p = body.data() + nl + 1;
    if (body.size() - nl - 1 != need) throw Error(ErrorCode::DimensionMismatch, "model binary block has the wrong size");
    mean.basis.resize(static_cast<Eigen::Index>(g.K), static_cast<Eigen::Index>(q));
    detail::get_le_doubles(p, mean.basis.data(), g.K * q);
    p += 8 * g.K * q;
    mean.coef.resize(L * q);
    get_le_floats(p, mean.coef.data(), L * q);
    p += 4 * L * q;
    if (geo) {
      model.altitude.resize(L);
      get_le_floats(p, model.altitude.data(), L);
      p += 4 * L;
      model.surface.assign(reinterpret_cast<const std::uint8_t*>(p), reinterpret_cast<const std::uint8_t*>(p) + L);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, e.what());
  }
  model.validate();
  return model;
}

void save_model(const SGModel& model, const std::filesystem::path& path) {
  detail::write_file(path, serialize_model(model));
}

SGModel load_model(const std::filesystem::path& path) { return parse_model(detail::read_file(path)); }

}  // namespace sgen
