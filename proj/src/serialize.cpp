#include "dlmtrace/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace dlmtrace {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot rename onto " + path.string());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Matrix matrix_from_json(const Json& values, Eigen::Index rows, Eigen::Index cols,
                        std::string_view what) {
  if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw DataError(std::string(what) + ": expected " + std::to_string(rows * cols) +
                    " numbers for shape " + shape_string(rows, cols));
  }
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < rows * cols; ++k) {
    const Json& v = values[static_cast<std::size_t>(k)];
    if (!v.is_number()) throw DataError(std::string(what) + ": non-numeric entry " + std::to_string(k));
    m(k / cols, k % cols) = v.get<double>();
  }
  return m;
}

Json to_json(const EffectValues& ev) {
  return Json{{"alpha", ev.alpha}, {"beta", ev.beta}, {"gamma", ev.gamma}};
}

EffectValues effect_values_from_json(const Json& j) {
  if (!j.is_object()) throw DataError("effect_values must be an object");
  EffectValues ev;
  ev.alpha = j.at("alpha").get<double>();
  ev.beta = j.at("beta").get<double>();
  ev.gamma = j.at("gamma").get<double>();
  return ev;
}

namespace {

std::pair<Eigen::Index, Eigen::Index> read_shape(const Json& j) {
  const Json& s = j.at("shape");
  if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer()) {
    throw DataError("shape must be [rows, cols]");
  }
  const auto rows = s[0].get<Eigen::Index>();
  const auto cols = s[1].get<Eigen::Index>();
  if (rows < 0 || cols < 0) throw DataError("negative shape");
  return {rows, cols};
}

template <typename F>
auto guarded(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json to_json(const DirectedDecodingMap& ddm) {
  Json j;
  j["shape"] = {ddm.entries.rows(), ddm.entries.cols()};
  j["effect_values"] = to_json(ddm.effect_values);
  j["entries"] = matrix_to_json(ddm.entries);
  j["source"] = Json{{"model_id", ddm.model_id}, {"prompt_id", ddm.prompt_id}};
  return j;
}

DirectedDecodingMap ddm_from_json(const Json& j) {
  return guarded("DDM container", [&] {
    DirectedDecodingMap d;
    const auto [rows, cols] = read_shape(j);
    d.effect_values = effect_values_from_json(j.at("effect_values"));
    d.entries = matrix_from_json(j.at("entries"), rows, cols, "entries");
    const Json& src = j.at("source");
    d.model_id = src.at("model_id").get<std::string>();
    d.prompt_id = src.at("prompt_id").get<std::string>();
    return d;
  });
}

Json to_json(const Fingerprint& fp) {
  Json j;
  j["model_id"] = fp.model_id;
  j["shape"] = {fp.rows(), fp.cols()};
  j["granularity"] = to_string(fp.granularity);
  j["variance_floor"] = fp.variance_floor;
  j["effect_values"] = to_json(fp.features.effect_values);
  j["scheme"] = to_string(fp.features.scheme);
  j["tie"] = to_string(fp.features.tie);
  j["n_samples"] = fp.n_samples;
  j["mu"] = matrix_to_json(fp.mu);
  j["var"] = matrix_to_json(fp.var);
  return j;
}

Fingerprint fingerprint_from_json(const Json& j) {
  Fingerprint fp = guarded("fingerprint", [&] {
    Fingerprint f;
    f.model_id = j.at("model_id").get<std::string>();
    const auto [rows, cols] = read_shape(j);
    f.granularity = parse_granularity(j.at("granularity").get<std::string>());
    f.variance_floor = j.at("variance_floor").get<double>();
    f.features.effect_values = effect_values_from_json(j.at("effect_values"));
    f.features.scheme = parse_feature_scheme(j.value("scheme", std::string("ddm")));
    f.features.tie = parse_tie_rule(j.value("tie", std::string("plus_beta")));
    f.n_samples = j.at("n_samples").get<int>();
    f.mu = matrix_from_json(j.at("mu"), rows, cols, "mu");
    f.var = matrix_from_json(j.at("var"), rows, cols, "var");
    return f;
  });
  if (fp.n_samples < 1) throw DataError("fingerprint: n_samples must be positive");
  if (!(fp.variance_floor > 0.0)) throw DataError("fingerprint: variance_floor must be positive");
  if ((fp.var.array() < fp.variance_floor).any()) {
    throw DataError("fingerprint: variance below its floor");
  }
  return fp;
}

void write_fingerprint_file(const std::filesystem::path& path, const Fingerprint& fp) {
  write_file_atomic(path, to_json(fp).dump(2) + "\n");
}

Fingerprint read_fingerprint_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return fingerprint_from_json(j);
}

}  // namespace dlmtrace
