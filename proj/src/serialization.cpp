#include "cascade/serialization.hpp"

#include <openssl/sha.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cascade {

Json to_json(const KernelSpec& spec) {
  return Json{{"family", "matern"}, {"nu", spec.nu}, {"lengthscale", spec.lengthscale}};
}

KernelSpec kernel_from_json(const Json& j) {
  if (j.value("family", std::string("matern")) != "matern") throw ArgumentError("kernel: only the matern family is supported");
  KernelSpec spec;
  spec.nu = j.at("nu").get<double>();
  spec.lengthscale = j.at("lengthscale").get<double>();
  spec.validate();
  return spec;
}

namespace {

Json vec_json(const Point& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

Point vec_from(const Json& j) {
  Point v(Eigen::Index(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(Eigen::Index(k)) = j[k].get<double>();
  return v;
}

Json function_json(const LayerFunction& fn) {
  if (const auto* bump = std::get_if<ScaledBump>(&fn))
    return Json{{"type", "bump"}, {"center", vec_json(bump->center)}, {"w", bump->w}, {"eps1", bump->eps1}};
  const auto& e = std::get<Expansion<double>>(fn);
  Json centers = Json::array();
  for (Eigen::Index r = 0; r < e.centers.rows(); ++r) centers.push_back(vec_json(e.centers.row(r).transpose()));
  return Json{{"type", "expansion"}, {"dim", e.dim()}, {"centers", centers}, {"coeffs", vec_json(e.coeffs)}};
}

LayerFunction function_from(const Json& j, const KernelSpec& spec) {
  const std::string type = j.value("type", std::string("expansion"));
  if (type == "bump") return ScaledBump{vec_from(j.at("center")), j.at("w").get<double>(), j.at("eps1").get<double>()};
  if (type != "expansion") throw ArgumentError("instance: unknown layer function type '" + type + "'");
  const auto& centers = j.at("centers");
  const Eigen::Index dim = j.contains("dim") ? j.at("dim").get<Eigen::Index>()
                                             : (centers.empty() ? 0 : Eigen::Index(centers[0].size()));
  PointSet<double> c(Eigen::Index(centers.size()), dim);
  for (std::size_t r = 0; r < centers.size(); ++r) {
    if (Eigen::Index(centers[r].size()) != dim) throw ArgumentError("instance: ragged centers");
    c.row(Eigen::Index(r)) = vec_from(centers[r]).transpose();
  }
  return Expansion<double>(std::move(c), vec_from(j.at("coeffs")), spec);
}

}  // namespace

Json to_json(const NetworkInstance& net) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["structure"] = to_string(net.structure);
  j["dims"] = net.dims;
  j["B"] = net.B;
  j["L"] = net.L;
  j["kernel"] = to_json(net.kernel);
  Json layers = Json::array();
  for (const auto& layer : net.layers) {
    Json coords = Json::array();
    for (const auto& fn : layer) coords.push_back(function_json(fn));
    layers.push_back(coords);
  }
  j["layers"] = layers;
  Json domains = Json::array();
  for (const auto& box : net.layer_domains) domains.push_back(Json{{"lo", vec_json(box.lo)}, {"hi", vec_json(box.hi)}});
  j["layer_domains"] = domains;
  j["label"] = net.label;
  j["seed"] = net.seed;
  if (net.hard) {
    const HardMeta& h = *net.hard;
    j["hard"] = Json{{"eps", h.eps},         {"eps1", h.eps1},         {"w", h.w},
                     {"u", h.u},             {"u_tilde", h.u_tilde},   {"alpha", h.alpha},
                     {"L_tilde", h.L_tilde}, {"L_eff", h.L_eff},       {"r_min", h.r_min},
                     {"r_max", h.r_max},     {"bump_slope", h.bump_slope}, {"center", vec_json(h.center)}};
  }
  return j;
}

NetworkInstance instance_from_json(const Json& j) {
  NetworkInstance net;
  net.structure = parse_structure(j.at("structure").get<std::string>());
  net.dims = j.at("dims").get<std::vector<int>>();
  net.B = j.at("B").get<double>();
  net.L = j.at("L").get<double>();
  net.kernel = kernel_from_json(j.at("kernel"));
  for (const auto& layer : j.at("layers")) {
    std::vector<LayerFunction> coords;
    for (const auto& fn : layer) coords.push_back(function_from(fn, net.kernel));
    net.layers.push_back(std::move(coords));
  }
  for (const auto& box : j.at("layer_domains")) net.layer_domains.emplace_back(vec_from(box.at("lo")), vec_from(box.at("hi")));
  net.label = j.value("label", std::string());
  net.seed = j.value("seed", std::uint64_t(0));
  if (j.contains("hard")) {
    const auto& h = j.at("hard");
    HardMeta meta;
    meta.eps = h.at("eps").get<double>();
    meta.eps1 = h.at("eps1").get<double>();
    meta.w = h.at("w").get<double>();
    meta.u = h.at("u").get<double>();
    meta.u_tilde = h.at("u_tilde").get<double>();
    meta.alpha = h.at("alpha").get<double>();
    meta.L_tilde = h.at("L_tilde").get<double>();
    meta.L_eff = h.at("L_eff").get<double>();
    meta.r_min = h.at("r_min").get<double>();
    meta.r_max = h.at("r_max").get<double>();
    meta.bump_slope = h.at("bump_slope").get<double>();
    meta.center = vec_from(h.at("center"));
    net.hard = meta;
  }
  net.validate();
  return net;
}

std::string dump_instance(const NetworkInstance& net) { return to_json(net).dump(2) + "\n"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw ArgumentError("write to '" + path + "' failed");
}

void save_instance(const std::string& path, const NetworkInstance& net) { write_file(path, dump_instance(net)); }

NetworkInstance load_instance(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ArgumentError("'" + path + "' is not valid JSON: " + e.what());
  }
  return instance_from_json(j);
}

std::string content_hash(const std::string& bytes) {
  const std::string blob = "blob " + std::to_string(bytes.size()) + std::string(1, '\0') + bytes;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char c : digest) {
    out.push_back(hex[c >> 4]);
    out.push_back(hex[c & 15]);
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string join_point(const Point& x) {
  std::string s;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (k) s += ';';
    s += format_double(x(k));
  }
  return s;
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace, int layers) {
  out << "t,x,y,r_t,R_t,ucb";
  for (int i = 1; i <= layers; ++i) out << ",sigma_" << i;
  out << ",wall_ms,max_jitter,min_pivot\n";
  for (const auto& s : trace.steps) {
    out << s.t << ',' << join_point(s.x) << ',' << format_double(s.y) << ',' << format_double(s.r) << ','
        << format_double(s.R) << ',' << format_double(s.ucb);
    for (int i = 0; i < layers; ++i) out << ',' << (i < int(s.sigma.size()) ? format_double(s.sigma[i]) : "");
    out << ',' << format_double(s.wall_ms) << ',' << format_double(s.max_jitter) << ',' << format_double(s.min_pivot) << '\n';
  }
  if (trace.x_star) {
    out << "final," << join_point(*trace.x_star) << ',' << format_double(trace.x_star_value) << ','
        << format_double(trace.simple_regret) << ",,";
    for (int i = 0; i < layers; ++i) out << ',';
    out << ",,,\n";
  }
}

}  // namespace cascade
