// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_IO_HPP
#define APMAP_IO_HPP

#include "apmap/channel.hpp"
#include "apmap/mobility.hpp"
#include "apmap/radiomap.hpp"
#include "apmap/topology.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace apmap::io {

using json = nlohmann::json;

json topology_to_json(const Topology& topo);
Topology topology_from_json(const json& j);

json propagation_to_json(const PropagationParams& pp, const Topology& topo);
PropagationParams propagation_from_json(const json& j, const Topology& topo);

void save_json(const std::filesystem::path& path, const json& j);
json load_json(const std::filesystem::path& path);

/// CSV `t,x,y`.
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory load_trajectory(const std::filesystem::path& path);

/// CSV `t,q,m,y_db`; slot duration goes to a `<path>.json` sidecar.
void save_measurements(const std::filesystem::path& path, const MeasurementSeries& series);
MeasurementSeries load_measurements(const std::filesystem::path& path);

/// JSON-lines, one radio-map entry per line (streaming append friendly).
void save_radio_map(const std::filesystem::path& path, const RadioMap& map, bool append = false);
RadioMap load_radio_map(const std::filesystem::path& path);

/// CSV `T,value`.
void save_curve(const std::filesystem::path& path, const std::vector<int>& t,
                const std::vector<double>& value);

/// CSV `iter,value`.
void save_trace(const std::filesystem::path& path, const std::vector<double>& values);

} // namespace apmap::io

#endif
