#include "coherency/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coherency/errors.hpp"

namespace coherency {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw InputError("trailing characters in number '" + s + "' " + context);
        if (!std::isfinite(v)) throw InputError("non-finite value " + context);
        return v;
    } catch (const std::invalid_argument&) {
        throw InputError("cannot parse number '" + s + "' " + context);
    } catch (const std::out_of_range&) {
        throw InputError("number out of range '" + s + "' " + context);
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    return out;
}

// Rows of time-stamped values shared by the angle and speed CSV readers.
struct CsvTable {
    std::vector<std::string> ids;
    std::vector<double> t;
    std::vector<std::vector<double>> values;
};

CsvTable read_trajectory_csv(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "t")
        throw InputError(path + ": malformed header, expected 't,<id1>,...'");
    CsvTable table;
    table.ids.assign(header.begin() + 1, header.end());
    std::set<std::string> seen(table.ids.begin(), table.ids.end());
    if (seen.size() != table.ids.size()) throw InputError(path + ": duplicate generator ids in header");
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        std::string where = "at row " + std::to_string(row) + " of " + path;
        if (fields.size() != header.size())
            throw InputError(path + ": ragged row " + std::to_string(row) + " (" +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()) + ")");
        double t = parse_double(fields[0], where);
        std::vector<double> vals;
        vals.reserve(table.ids.size());
        for (std::size_t k = 1; k < fields.size(); ++k) vals.push_back(parse_double(fields[k], where));
        table.t.push_back(t);
        table.values.push_back(std::move(vals));
    }
    if (table.t.empty()) throw InputError(path + ": no samples");
    return table;
}

// Row numbers in time errors count data rows, header excluded.
void validate_timestamps(const std::vector<double>& t, const std::string& path) {
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (!(t[k] > t[k - 1]))
            throw InputError(path + ": non-increasing time at row " + std::to_string(k + 1));
    }
    if (t.size() >= 3) {
        double dt0 = t[1] - t[0];
        for (std::size_t k = 1; k + 1 < t.size(); ++k) {
            double dt = t[k + 1] - t[k];
            if (std::abs(dt - dt0) > 1e-9 * std::max(std::abs(dt0), 1.0))
                throw InputError(path + ": non-uniform sample spacing at row " + std::to_string(k + 2));
        }
    }
}

std::string speed_sibling(const std::string& path) {
    std::filesystem::path p(path);
    auto stem = p.stem().string();
    return (p.parent_path() / (stem + ".speed" + p.extension().string())).string();
}

SymmetricMatrix symmetrize_checked(const std::vector<std::vector<double>>& rows,
                                   const std::string& name) {
    std::size_t n = rows.size();
    for (const auto& r : rows)
        if (r.size() != n) throw InputError(name + " matrix is not square");
    SymmetricMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double a = rows[i][j], b = rows[j][i];
            if (!std::isfinite(a) || !std::isfinite(b))
                throw InputError(name + " matrix has a non-finite entry");
            if (std::abs(a - b) > 1e-6)
                throw InputError("asymmetric " + name + " matrix at (" + std::to_string(i) +
                                 "," + std::to_string(j) + "): " + format_double(a) + " vs " +
                                 format_double(b));
            m.set(i, j, (a + b) / 2.0);
        }
    }
    return m;
}

nlohmann::json parse_json_file(const std::string& path) {
    auto in = open_input(path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

std::vector<double> json_doubles(const nlohmann::json& j, const std::string& key,
                                 const std::string& path) {
    if (!j.contains(key)) throw InputError(path + ": missing field '" + key + "'");
    if (!j[key].is_array()) throw InputError(path + ": field '" + key + "' must be an array");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw InputError(path + ": field '" + key + "' has a non-numeric entry");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::vector<double>> json_matrix(const nlohmann::json& j, const std::string& key,
                                             const std::string& path) {
    if (!j.contains(key)) throw InputError(path + ": missing field '" + key + "'");
    std::vector<std::vector<double>> rows;
    for (const auto& r : j[key]) {
        std::vector<double> row;
        for (const auto& v : r) {
            if (!v.is_number()) throw InputError(path + ": matrix '" + key + "' has a non-numeric entry");
            row.push_back(v.get<double>());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

double SymmetricMatrix::total() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        sum += (*this)(i, i);
        for (std::size_t j = 0; j < i; ++j) sum += 2.0 * (*this)(i, j);
    }
    return sum;
}

void MachineSet::validate() const {
    std::size_t n = ids.size();
    if (n < 2) throw InputError("machine set needs at least 2 generators");
    if (inertia.size() != n || damping.size() != n || mech_power.size() != n || emf.size() != n)
        throw InputError("machine vectors must all have length " + std::to_string(n));
    std::set<std::string> seen(ids.begin(), ids.end());
    if (seen.size() != n) throw InputError("generator ids must be unique");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(inertia[i] > 0)) throw InputError("inertia must be positive for " + ids[i]);
        if (!(damping[i] >= 0)) throw InputError("damping must be nonnegative for " + ids[i]);
        if (!(emf[i] > 0)) throw InputError("emf must be positive for " + ids[i]);
        if (!std::isfinite(mech_power[i])) throw InputError("mech_power must be finite for " + ids[i]);
    }
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

Trajectory load_trajectory(const std::string& path, TrajectoryFormat format) {
    Trajectory traj;
    if (format == TrajectoryFormat::Csv) {
        auto table = read_trajectory_csv(path);
        validate_timestamps(table.t, path);
        traj.ids = table.ids;
        for (std::size_t k = 0; k < table.t.size(); ++k)
            traj.samples.push_back({table.t[k], std::move(table.values[k]), {}});
        auto speed_path = speed_sibling(path);
        if (std::filesystem::exists(speed_path)) {
            auto speeds = read_trajectory_csv(speed_path);
            if (speeds.ids != traj.ids || speeds.t.size() != traj.samples.size())
                throw InputError(speed_path + ": shape differs from " + path);
            for (std::size_t k = 0; k < speeds.t.size(); ++k) {
                if (std::abs(speeds.t[k] - traj.samples[k].t) > 1e-9)
                    throw InputError(speed_path + ": timestamps differ from " + path);
                traj.samples[k].speed = std::move(speeds.values[k]);
            }
        }
    } else {
        auto j = parse_json_file(path);
        if (!j.contains("ids") || !j["ids"].is_array())
            throw InputError(path + ": missing 'ids' array");
        for (const auto& id : j["ids"]) traj.ids.push_back(id.get<std::string>());
        auto t = json_doubles(j, "t", path);
        auto delta = json_matrix(j, "delta", path);
        if (delta.size() != t.size()) throw InputError(path + ": 'delta' row count differs from 't'");
        std::vector<std::vector<double>> speed;
        if (j.contains("speed")) {
            speed = json_matrix(j, "speed", path);
            if (speed.size() != t.size()) throw InputError(path + ": 'speed' row count differs from 't'");
        }
        validate_timestamps(t, path);
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (delta[k].size() != traj.ids.size())
                throw InputError(path + ": 'delta' row " + std::to_string(k) + " has wrong length");
            RotorSnapshot snap{t[k], std::move(delta[k]), {}};
            if (!speed.empty()) {
                if (speed[k].size() != traj.ids.size())
                    throw InputError(path + ": 'speed' row " + std::to_string(k) + " has wrong length");
                snap.speed = std::move(speed[k]);
            }
            traj.samples.push_back(std::move(snap));
        }
        if (traj.samples.empty()) throw InputError(path + ": no samples");
    }
    for (const auto& s : traj.samples) {
        for (double d : s.delta)
            if (!std::isfinite(d)) throw InputError(path + ": non-finite rotor angle");
    }
    traj.dt = traj.samples.size() > 1 ? traj.samples[1].t - traj.samples[0].t : 0.0;
    return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
    auto out = open_output(path);
    out << "t";
    for (const auto& id : traj.ids) out << "," << id;
    out << "\n";
    for (const auto& s : traj.samples) {
        out << format_double(s.t);
        for (double d : s.delta) out << "," << format_double(d);
        out << "\n";
    }
    bool have_speed = !traj.samples.empty() && !traj.samples.front().speed.empty();
    if (have_speed) {
        auto sp = open_output(speed_sibling(path));
        sp << "t";
        for (const auto& id : traj.ids) sp << "," << id;
        sp << "\n";
        for (const auto& s : traj.samples) {
            sp << format_double(s.t);
            for (double w : s.speed) sp << "," << format_double(w);
            sp << "\n";
        }
    }
}

std::pair<MachineSet, ReducedNetwork> load_network(const std::string& path) {
    auto j = parse_json_file(path);
    MachineSet machines;
    if (!j.contains("ids") || !j["ids"].is_array()) throw InputError(path + ": missing 'ids' array");
    for (const auto& id : j["ids"]) machines.ids.push_back(id.get<std::string>());
    machines.inertia = json_doubles(j, "inertia", path);
    machines.damping = json_doubles(j, "damping", path);
    machines.mech_power = json_doubles(j, "mech_power", path);
    machines.emf = json_doubles(j, "emf", path);
    machines.validate();

    ReducedNetwork net;
    net.g = symmetrize_checked(json_matrix(j, "g", path), "conductance");
    net.b = symmetrize_checked(json_matrix(j, "b", path), "susceptance");
    if (net.g.dim() != machines.size() || net.b.dim() != machines.size())
        throw InputError(path + ": matrix dimension differs from id count");
    return {std::move(machines), std::move(net)};
}

void save_network(const MachineSet& machines, const ReducedNetwork& net,
                  const std::string& path) {
    nlohmann::json j;
    j["ids"] = machines.ids;
    j["inertia"] = machines.inertia;
    j["damping"] = machines.damping;
    j["mech_power"] = machines.mech_power;
    j["emf"] = machines.emf;
    std::size_t n = net.dim();
    auto dump = [n](const SymmetricMatrix& m) {
        std::vector<std::vector<double>> rows(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j2 = 0; j2 < n; ++j2) rows[i][j2] = m(i, j2);
        return rows;
    };
    j["g"] = dump(net.g);
    j["b"] = dump(net.b);
    auto out = open_output(path);
    out << j.dump(2) << "\n";
}

void save_matrix(const SymmetricMatrix& m, const std::vector<std::string>& labels,
                 const std::string& path) {
    if (labels.size() != m.dim()) throw InputError("label count differs from matrix dimension");
    auto out = open_output(path);
    for (const auto& l : labels) out << "," << l;
    out << "\n";
    for (std::size_t i = 0; i < m.dim(); ++i) {
        out << labels[i];
        for (std::size_t j = 0; j < m.dim(); ++j) out << "," << format_double(m(i, j));
        out << "\n";
    }
}

std::pair<SymmetricMatrix, std::vector<std::string>> load_matrix(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.size() < 2 || !header[0].empty())
        throw InputError(path + ": malformed matrix header, expected ',<label1>,...'");
    std::vector<std::string> labels(header.begin() + 1, header.end());
    std::size_t n = labels.size();
    std::vector<std::vector<double>> rows;
    std::size_t rownum = 1;
    while (std::getline(in, line)) {
        ++rownum;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != n + 1)
            throw InputError(path + ": ragged row " + std::to_string(rownum));
        if (rows.size() >= n) throw InputError(path + ": more rows than labels");
        if (fields[0] != labels[rows.size()])
            throw InputError(path + ": row label '" + fields[0] + "' does not match header order");
        std::vector<double> row;
        for (std::size_t k = 1; k < fields.size(); ++k)
            row.push_back(parse_double(fields[k], "at row " + std::to_string(rownum) + " of " + path));
        rows.push_back(std::move(row));
    }
    if (rows.size() != n) throw InputError(path + ": expected " + std::to_string(n) + " data rows");
    return {symmetrize_checked(rows, "matrix"), std::move(labels)};
}

void save_indices_series(const std::vector<IndicesRow>& rows, const std::string& path) {
    auto out = open_output(path);
    out << "t,GCI,GSI,SI,n_groups\n";
    for (const auto& r : rows) {
        out << format_double(r.t) << "," << format_double(r.gci) << "," << format_double(r.gsi)
            << "," << format_double(r.si) << "," << r.n_groups << "\n";
    }
}

std::vector<IndicesRow> load_indices_series(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,GCI,GSI,SI,n_groups") throw InputError(path + ": unexpected header");
    std::vector<IndicesRow> rows;
    std::size_t rownum = 1;
    while (std::getline(in, line)) {
        ++rownum;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 5) throw InputError(path + ": ragged row " + std::to_string(rownum));
        std::string where = "at row " + std::to_string(rownum) + " of " + path;
        IndicesRow r;
        r.t = parse_double(fields[0], where);
        r.gci = parse_double(fields[1], where);
        r.gsi = parse_double(fields[2], where);
        r.si = fields[3] == "inf" ? std::numeric_limits<double>::infinity()
                                  : parse_double(fields[3], where);
        r.n_groups = static_cast<std::size_t>(parse_double(fields[4], where));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace coherency
