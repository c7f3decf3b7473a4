#ifndef CASCADE_SERIALIZATION_HPP
#define CASCADE_SERIALIZATION_HPP

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "cascade/optimizers.hpp"

namespace cascade {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const Json& j);

Json to_json(const NetworkInstance& net);
NetworkInstance instance_from_json(const Json& j);

/// Pretty-printed with a trailing newline; field order is fixed.
std::string dump_instance(const NetworkInstance& net);
void save_instance(const std::string& path, const NetworkInstance& net);
NetworkInstance load_instance(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// SHA-1 of "blob <size>\0<bytes>", hex encoded.
std::string content_hash(const std::string& bytes);

/// %.17g, with "nan" / "inf" spelled out.
std::string format_double(double v);

/// t, x, y, r_t, R_t, ucb, sigma_1..sigma_m, wall_ms, max_jitter, min_pivot.
void write_trace_csv(std::ostream& out, const Trace& trace, int layers);

}  // namespace cascade

#endif  // CASCADE_SERIALIZATION_HPP
