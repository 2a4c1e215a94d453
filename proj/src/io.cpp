// SPDX-License-Identifier: Apache-2.0

#include "apmap/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace apmap::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path, bool append = false) {
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out)
        throw Error{"cannot open for writing: " + path.string()};
    out << std::setprecision(17);
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error{"cannot open for reading: " + path.string()};
    return in;
}

} // namespace

json topology_to_json(const Topology& topo) {
    json stations = json::array();
    for (const BaseStation& bs : topo.stations()) {
        stations.push_back({{"id", bs.id},
                            {"x", bs.position.x()},
                            {"y", bs.position.y()},
                            {"h", bs.height_offset},
                            {"beams", bs.beam_count}});
    }
    const Rect& r = topo.region();
    json j{{"stations", std::move(stations)},
           {"region", {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}}}};
    if (std::isfinite(topo.connect_radius()))
        j["radius"] = topo.connect_radius();
    else
        j["radius"] = nullptr;
    return j;
}

Topology topology_from_json(const json& j) {
    std::vector<BaseStation> stations;
    for (const json& s : j.at("stations")) {
        stations.push_back(BaseStation{s.at("id").get<int>(),
                                       Vec2{s.at("x").get<double>(), s.at("y").get<double>()},
                                       s.at("beams").get<int>(), s.at("h").get<double>()});
    }
    const json& r = j.at("region");
    Rect region{r.at("x0").get<double>(), r.at("y0").get<double>(), r.at("x1").get<double>(),
                r.at("y1").get<double>()};
    double radius = std::numeric_limits<double>::infinity();
    if (j.contains("radius") && !j.at("radius").is_null())
        radius = j.at("radius").get<double>();
    return Topology{std::move(stations), region, radius};
}

json propagation_to_json(const PropagationParams& pp, const Topology& topo) {
    json stations = json::array();
    for (std::size_t i = 0; i < pp.stations.size(); ++i) {
        const StationParams& sp = pp.stations[i];
        json beams = json::array();
        for (const BeamPattern& b : sp.beams)
            beams.push_back({{"omega", b.omega}, {"eta", b.eta}, {"center", b.center}});
        stations.push_back({{"id", topo.stations()[i].id},
                            {"alpha", sp.path_loss.alpha},
                            {"beta", sp.path_loss.beta},
                            {"sigma", sp.path_loss.sigma},
                            {"beams", std::move(beams)}});
    }
    return json{{"stations", std::move(stations)}};
}

PropagationParams propagation_from_json(const json& j, const Topology& topo) {
    PropagationParams pp;
    pp.stations.resize(topo.size());
    for (const json& s : j.at("stations")) {
        const int idx = topo.index_of(s.at("id").get<int>());
        StationParams& sp = pp.stations[static_cast<std::size_t>(idx)];
        sp.path_loss = PathLossParams{s.at("alpha").get<double>(), s.at("beta").get<double>(),
                                      s.at("sigma").get<double>()};
        for (const json& b : s.at("beams"))
            sp.beams.push_back(BeamPattern{b.at("omega").get<double>(), b.at("eta").get<double>(),
                                           b.at("center").get<double>()});
    }
    return pp;
}

void save_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

json load_json(const std::filesystem::path& path) {
    auto in = open_in(path);
    json j;
    in >> j;
    return j;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
    auto out = open_out(path);
    out << "t,x,y\n";
    for (std::size_t i = 0; i < traj.size(); ++i)
        out << (i + 1) << "," << traj[i].x() << "," << traj[i].y() << "\n";
}

Trajectory load_trajectory(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    std::getline(in, line); // header
    Trajectory traj;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ','); // t
        double x, y;
        std::getline(ss, tok, ',');
        x = std::stod(tok);
        std::getline(ss, tok, ',');
        y = std::stod(tok);
        traj.positions.emplace_back(x, y);
    }
    return traj;
}

void save_measurements(const std::filesystem::path& path, const MeasurementSeries& series) {
    auto out = open_out(path);
    out << "t,q,m,y_db\n";
    for (const Observation& obs : series.observations)
        for (const ObsEntry& e : obs.entries)
            out << obs.t << "," << e.q << "," << e.m << "," << e.y_db << "\n";
    save_json(path.string() + ".json", json{{"delta", series.slot_duration}});
}

MeasurementSeries load_measurements(const std::filesystem::path& path) {
    MeasurementSeries series;
    series.slot_duration = load_json(path.string() + ".json").at("delta").get<double>();

    auto in = open_in(path);
    std::string line;
    std::getline(in, line); // header
    Observation cur;
    bool have = false;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        const int t = std::stoi(tok);
        ObsEntry e;
        std::getline(ss, tok, ',');
        e.q = std::stoi(tok);
        std::getline(ss, tok, ',');
        e.m = std::stoi(tok);
        std::getline(ss, tok, ',');
        e.y_db = std::stod(tok);
        if (!have || t != cur.t) {
            if (have)
                series.observations.push_back(std::move(cur));
            cur = Observation{t, {}};
            have = true;
        }
        cur.entries.push_back(e);
    }
    if (have)
        series.observations.push_back(std::move(cur));
    for (Observation& obs : series.observations)
        normalize_entries(obs);
    return series;
}

void save_radio_map(const std::filesystem::path& path, const RadioMap& map, bool append) {
    auto out = open_out(path, append);
    for (const RadioMapEntry& e : map) {
        json ssb = json::array();
        for (const ObsEntry& s : e.ssb)
            ssb.push_back({{"q", s.q}, {"m", s.m}, {"y", s.y_db}});
        json csi = json::array();
        for (const auto& [q, values] : e.csi)
            csi.push_back({{"q", q}, {"values", values}});
        out << json{{"x", e.location.x()},
                    {"y", e.location.y()},
                    {"ssb", std::move(ssb)},
                    {"csi", std::move(csi)}}
                   .dump()
            << "\n";
    }
}

RadioMap load_radio_map(const std::filesystem::path& path) {
    auto in = open_in(path);
    RadioMap map;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const json j = json::parse(line);
        RadioMapEntry e;
        e.location = Vec2{j.at("x").get<double>(), j.at("y").get<double>()};
        for (const json& s : j.at("ssb"))
            e.ssb.push_back(
                ObsEntry{s.at("q").get<int>(), s.at("m").get<int>(), s.at("y").get<double>()});
        for (const json& c : j.at("csi"))
            e.csi.emplace_back(c.at("q").get<int>(), c.at("values").get<std::vector<double>>());
        map.push_back(std::move(e));
    }
    return map;
}

void save_curve(const std::filesystem::path& path, const std::vector<int>& t,
                const std::vector<double>& value) {
    if (t.size() != value.size())
        throw LengthMismatch{"curve columns differ in length"};
    auto out = open_out(path);
    out << "T,value\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        out << t[i] << "," << value[i] << "\n";
}

void save_trace(const std::filesystem::path& path, const std::vector<double>& values) {
    auto out = open_out(path);
    out << "iter,value\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        out << (i + 1) << "," << values[i] << "\n";
}

} // namespace apmap::io
