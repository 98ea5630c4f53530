#include "ovfree/json_io.hpp"

#include <cstdio>
#include <fstream>

namespace ovfree {

double round_sig(double v) {
    if (v == 0.0) return 0.0; // also normalizes -0.0
    if (!std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::strtod(buf, nullptr);
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j)
            row.push_back({round_sig(m(i, j).real()), round_sig(m(i, j).imag())});
        rows.push_back(row);
    }
    return rows;
}

Mat mat_from_json(const json& j) {
    if (!j.is_array() || j.empty())
        throw parse_error("matrix: expected a nonempty array of rows");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(j[i].size()) != cols)
            throw parse_error("matrix: ragged rows");
        for (int c = 0; c < cols; ++c) {
            const json& e = j[i][c];
            if (!e.is_array() || e.size() != 2)
                throw parse_error("matrix: entries must be [re, im] pairs");
            m(i, c) = cplx(e[0].get<double>(), e[1].get<double>());
        }
    }
    return m;
}

json inclusion_to_json(const InclusionSpec& inc) {
    json j;
    j["d_B"] = inc.dB;
    j["d_D"] = inc.dD;
    json units = json::array();
    for (const Mat& u : inc.units) units.push_back(mat_to_json(u));
    j["units"] = units;
    return j;
}

InclusionSpec inclusion_from_json(const json& j) {
    if (j.contains("kind")) {
        std::string kind = j.at("kind").get<std::string>();
        int d = j.at("d_B").get<int>();
        if (kind == "identity") return InclusionSpec::identity(d);
        if (kind == "amplified") return InclusionSpec::amplified(d, j.at("copies").get<int>());
        throw parse_error("inclusion: unknown kind '" + kind + "'");
    }
    InclusionSpec inc;
    inc.dB = j.at("d_B").get<int>();
    inc.dD = j.at("d_D").get<int>();
    for (const json& u : j.at("units")) inc.units.push_back(mat_from_json(u));
    inc.validate();
    return inc;
}

json multimap_to_json(const MultiMap& m) {
    json vals = json::array();
    for (std::size_t t = 0; t < m.tuples(); ++t) vals.push_back(mat_to_json(m.at(t)));
    return vals;
}

MultiMap multimap_from_json(const json& j, int arity, int dB, int dD) {
    MultiMap m(arity, dB, dD);
    if (j.size() != m.tuples())
        throw parse_error("tensor: wrong number of entries for its arity");
    for (std::size_t t = 0; t < m.tuples(); ++t) {
        Mat v = mat_from_json(j[t]);
        if (v.rows() != dD || v.cols() != dD)
            throw parse_error("tensor: value blocks must be d_D x d_D");
        m.at(t) = v;
    }
    return m;
}

json series_to_json(const NCSeries& s, const std::string& kind) {
    json j;
    if (!kind.empty()) j["kind"] = kind;
    j["inclusion"] = inclusion_to_json(s.inc);
    j["order"] = s.order;
    json coeffs = json::array();
    for (const MultiMap& c : s.coeff) coeffs.push_back(multimap_to_json(c));
    j["coeffs"] = coeffs;
    return j;
}

NCSeries series_from_json(const json& j) {
    InclusionSpec inc = inclusion_from_json(j.at("inclusion"));
    int order = j.at("order").get<int>();
    NCSeries s = NCSeries::zero(inc, order);
    const json& coeffs = j.at("coeffs");
    if (static_cast<int>(coeffs.size()) != order + 1)
        throw parse_error("series: need order+1 coefficient tensors");
    for (int k = 0; k <= order; ++k)
        s.coeff[k] = multimap_from_json(coeffs[k], k, inc.dB, inc.dD);
    return s;
}

json distribution_to_json(const OVDistribution& d) {
    json j;
    j["inclusion"] = inclusion_to_json(d.inc);
    j["order"] = d.order;
    j["mean"] = mat_to_json(d.mean);
    json moments = json::array();
    for (const MultiMap& mk : d.mom) moments.push_back(multimap_to_json(mk));
    j["moments"] = moments;
    if (d.formal) j["formal"] = true;
    return j;
}

OVDistribution distribution_from_json(const json& j) {
    InclusionSpec inc = inclusion_from_json(j.at("inclusion"));
    int order = j.at("order").get<int>();
    OVDistribution d = OVDistribution::zero(inc, order);
    d.mean = mat_from_json(j.at("mean"));
    const json& moments = j.at("moments");
    if (static_cast<int>(moments.size()) != order - 1)
        throw parse_error("distribution: need order-1 moment tensors");
    for (int k = 2; k <= order; ++k)
        d.m(k) = multimap_from_json(moments[k - 2], k - 1, inc.dB, inc.dD);
    if (j.contains("formal")) d.formal = j.at("formal").get<bool>();
    d.validate();
    return d;
}

json pair_to_json(const DistPair& p) {
    json j;
    j["mu"] = distribution_to_json(p.mu);
    j["nu"] = distribution_to_json(p.nu);
    return j;
}

DistPair pair_from_json(const json& j) {
    DistPair p;
    p.mu = distribution_from_json(j.at("mu"));
    p.nu = distribution_from_json(j.at("nu"));
    p.validate();
    return p;
}

namespace {

json linmap_to_json(const LinMap& l) {
    // Matrix of the linear map acting on row-major vectorizations:
    // out[vec(i,j)][vec(p,q)] column = image of the unit E_pq.
    Mat big = Mat::Zero(l.dout * l.dout, l.din * l.din);
    for (int p = 0; p < l.din; ++p)
        for (int q = 0; q < l.din; ++q) {
            const Mat& img = l.on_units[unit_index(p, q, l.din)];
            for (int i = 0; i < l.dout; ++i)
                for (int jj = 0; jj < l.dout; ++jj)
                    big(i * l.dout + jj, p * l.din + q) = img(i, jj);
        }
    return mat_to_json(big);
}

LinMap linmap_from_json(const json& j, int din, int dout) {
    Mat big = mat_from_json(j);
    if (big.rows() != dout * dout || big.cols() != din * din)
        throw parse_error("linear map: matrix has wrong vectorized dimensions");
    LinMap l;
    l.din = din;
    l.dout = dout;
    for (int p = 0; p < din; ++p)
        for (int q = 0; q < din; ++q) {
            Mat img(dout, dout);
            for (int i = 0; i < dout; ++i)
                for (int jj = 0; jj < dout; ++jj)
                    img(i, jj) = big(i * dout + jj, p * din + q);
            l.on_units.push_back(img);
        }
    return l;
}

} // namespace

json model_to_json(const OperatorModel& m) {
    json j;
    j["m"] = m.m;
    j["d_B"] = m.dB();
    j["inclusion"] = inclusion_to_json(m.inc);
    j["X"] = mat_to_json(m.X);
    json iota = json::array();
    for (const Mat& u : m.iota_units) iota.push_back(mat_to_json(u));
    j["iota"] = iota;
    j["E_B"] = linmap_to_json(m.EB);
    j["theta"] = linmap_to_json(m.theta);
    return j;
}

OperatorModel model_from_json(const json& j) {
    OperatorModel m;
    m.m = j.at("m").get<int>();
    int dB = j.at("d_B").get<int>();
    m.inc = inclusion_from_json(j.at("inclusion"));
    if (m.inc.dB != dB) throw parse_error("model: d_B disagrees with the inclusion");
    m.X = mat_from_json(j.at("X"));
    for (const json& u : j.at("iota")) m.iota_units.push_back(mat_from_json(u));
    if (m.iota_units.size() != static_cast<size_t>(dB) * dB)
        throw parse_error("model: iota must list all d_B^2 unit images");
    m.EB = linmap_from_json(j.at("E_B"), m.m, dB);
    m.theta = linmap_from_json(j.at("theta"), m.m, m.inc.dD);
    return m;
}

json scalar_dist_to_json(const ScalarDist& d) {
    json j;
    j["order"] = d.order;
    json ms = json::array();
    for (const cplx& v : d.m) ms.push_back({round_sig(v.real()), round_sig(v.imag())});
    j["moments"] = ms;
    return j;
}

ScalarDist scalar_dist_from_json(const json& j) {
    ScalarDist d;
    d.order = j.at("order").get<int>();
    for (const json& e : j.at("moments")) {
        if (!e.is_array() || e.size() != 2)
            throw parse_error("scalar distribution: moments must be [re, im] pairs");
        d.m.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    if (static_cast<int>(d.m.size()) != d.order)
        throw parse_error("scalar distribution: need exactly `order` moments");
    return d;
}

json scalar_pair_to_json(const ScalarPair& p) {
    json j;
    j["mu"] = scalar_dist_to_json(p.mu);
    j["nu"] = scalar_dist_to_json(p.nu);
    return j;
}

ScalarPair scalar_pair_from_json(const json& j) {
    ScalarPair p;
    p.mu = scalar_dist_from_json(j.at("mu"));
    p.nu = scalar_dist_from_json(j.at("nu"));
    return p;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open input file: " + path);
    try {
        return json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot open output file: " + path);
    out << j.dump(2) << "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot open output file: " + path);
    out << text;
}

} // namespace ovfree
