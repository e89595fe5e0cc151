#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qpwalk/model.hpp"

namespace qpwalk {

/// FNV-1a 64-bit over the canonical (sorted-key) serialization.
inline std::string content_hash(const nlohmann::json& j) {
    std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Shortest decimal string that round-trips the double.
inline std::string decimal_string(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double back = std::strtod(buf, nullptr);
    if (back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[32];
            std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
            if (std::strtod(shorter, nullptr) == v) return shorter;
        }
    }
    return buf;
}

namespace detail {

inline double parse_probability(const nlohmann::json& j, const std::string& where) {
    if (!j.is_string())
        throw ValidationError(where + ": probabilities must be decimal strings");
    const std::string& s = j.get_ref<const std::string&>();
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw ValidationError(where + ": cannot parse probability '" + s + "'");
    if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError(where + ": probability '" + s + "' outside [0,1]");
    return v;
}

inline JumpDistribution parse_jump(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3)
        throw ValidationError(where + ": expected a 3x3 nested array");
    JumpDistribution d;
    for (int r = 0; r < 3; ++r) {
        if (!j[r].is_array() || j[r].size() != 3)
            throw ValidationError(where + ": expected a 3x3 nested array");
        for (int c = 0; c < 3; ++c)
            d.p[r][c] = parse_probability(j[r][c], where + "[" + std::to_string(r - 1) + "][" +
                                                       std::to_string(c - 1) + "]");
    }
    return d;
}

inline nlohmann::json dump_jump(const JumpDistribution& d) {
    nlohmann::json j = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < 3; ++c) row.push_back(decimal_string(d.p[r][c]));
        j.push_back(row);
    }
    return j;
}

template <typename T, typename Parse>
RegionTable<T> parse_region_table(const nlohmann::json& j, RegionSplit split,
                                  const std::string& where, Parse parse) {
    RegionTable<T> t(split);
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
        return j.at(key);
    };
    const auto& s0 = need("s0");
    if (!s0.is_array() || static_cast<int>(s0.size()) != split.N1)
        throw ValidationError(where + "/s0: expected " + std::to_string(split.N1) + " rows");
    for (int n1 = 0; n1 < split.N1; ++n1) {
        if (!s0[n1].is_array() || static_cast<int>(s0[n1].size()) != split.N2)
            throw ValidationError(where + "/s0: expected " + std::to_string(split.N2) +
                                  " entries per row");
        for (int n2 = 0; n2 < split.N2; ++n2)
            t.s0[n1][n2] = parse(s0[n1][n2], where + "/s0[" + std::to_string(n1) + "][" +
                                                 std::to_string(n2) + "]");
    }
    const auto& s1 = need("s1");
    if (!s1.is_array() || static_cast<int>(s1.size()) != split.N2)
        throw ValidationError(where + "/s1: expected " + std::to_string(split.N2) + " entries");
    for (int n2 = 0; n2 < split.N2; ++n2)
        t.s1[n2] = parse(s1[n2], where + "/s1[" + std::to_string(n2) + "]");
    const auto& s2 = need("s2");
    if (!s2.is_array() || static_cast<int>(s2.size()) != split.N1)
        throw ValidationError(where + "/s2: expected " + std::to_string(split.N1) + " entries");
    for (int n1 = 0; n1 < split.N1; ++n1)
        t.s2[n1] = parse(s2[n1], where + "/s2[" + std::to_string(n1) + "]");
    t.s3 = parse(need("s3"), where + "/s3");
    return t;
}

template <typename T, typename Dump>
nlohmann::json dump_region_table(const RegionTable<T>& t, Dump dump) {
    nlohmann::json j;
    j["s0"] = nlohmann::json::array();
    for (int n1 = 0; n1 < t.split.N1; ++n1) {
        nlohmann::json row = nlohmann::json::array();
        for (int n2 = 0; n2 < t.split.N2; ++n2) row.push_back(dump(t.s0[n1][n2]));
        j["s0"].push_back(row);
    }
    j["s1"] = nlohmann::json::array();
    for (const auto& v : t.s1) j["s1"].push_back(dump(v));
    j["s2"] = nlohmann::json::array();
    for (const auto& v : t.s2) j["s2"].push_back(dump(v));
    j["s3"] = dump(t.s3);
    return j;
}

}  // namespace detail

/// A parsed model file: the kernel plus, for ALOHA models, the parameters
/// it was built from. `hash` identifies the file content in all outputs.
struct Model {
    std::string kind;  // "raw" or "aloha"
    TransitionKernel kernel;
    std::optional<AlohaParams> aloha;
    std::string hash;
};

inline Model model_from_json(const nlohmann::json& j) {
    Model m;
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
        return j.at(key);
    };
    if (!need("N1").is_number_integer() || !need("N2").is_number_integer())
        throw ValidationError("N1, N2 must be integers");
    RegionSplit split(j.at("N1").get<int>(), j.at("N2").get<int>());
    m.kind = need("kind").get<std::string>();
    auto parse_scalar = [](const nlohmann::json& v, const std::string& where) {
        return detail::parse_probability(v, where);
    };
    if (m.kind == "raw") {
        m.kernel = TransitionKernel(split);
        m.kernel.table = detail::parse_region_table<JumpDistribution>(
            need("p"), split, "/p", detail::parse_jump);
    } else if (m.kind == "aloha") {
        AlohaParams params(split);
        params.lambda1 = detail::parse_region_table<double>(need("lambda1"), split, "/lambda1",
                                                            parse_scalar);
        params.lambda2 = detail::parse_region_table<double>(need("lambda2"), split, "/lambda2",
                                                            parse_scalar);
        params.a1 = detail::parse_region_table<double>(need("a1"), split, "/a1", parse_scalar);
        params.a2 = detail::parse_region_table<double>(need("a2"), split, "/a2", parse_scalar);
        m.kernel = aloha_kernel(params);
        m.aloha = std::move(params);
    } else {
        throw ValidationError("kind must be 'raw' or 'aloha', got '" + m.kind + "'");
    }
    m.hash = content_hash(j);
    return m;
}

inline nlohmann::json model_to_json(const Model& m) {
    nlohmann::json j;
    j["kind"] = m.kind;
    j["N1"] = m.kernel.split.N1;
    j["N2"] = m.kernel.split.N2;
    if (m.kind == "raw") {
        j["p"] = detail::dump_region_table(m.kernel.table, detail::dump_jump);
    } else {
        auto dump_scalar = [](double v) { return nlohmann::json(decimal_string(v)); };
        j["lambda1"] = detail::dump_region_table(m.aloha->lambda1, dump_scalar);
        j["lambda2"] = detail::dump_region_table(m.aloha->lambda2, dump_scalar);
        j["a1"] = detail::dump_region_table(m.aloha->a1, dump_scalar);
        j["a2"] = detail::dump_region_table(m.aloha->a2, dump_scalar);
    }
    return j;
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

inline void save_model(const Model& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write model file '" + path + "'");
    out << model_to_json(m).dump(2) << "\n";
}

/// Symmetric adaptive network: per-user transmit probability a*nk/(n1+n2)
/// and arrivals lambda*2^-(n1+n2) below the thresholds, flat (a, lambda)
/// in the homogeneous tail.
inline Model make_symmetric_aloha(double lambda, double a, int N1 = 2, int N2 = 2) {
    RegionSplit split(N1, N2);
    AlohaParams p(split);
    auto fill = [&](State s) {
        const double norm = s.n1 + s.n2;
        bool tail = s.n1 >= N1 && s.n2 >= N2;
        p.a1.ref(s) = tail ? a : (norm > 0 ? a * s.n1 / norm : 0.0);
        p.a2.ref(s) = tail ? a : (norm > 0 ? a * s.n2 / norm : 0.0);
        p.lambda1.ref(s) = tail ? lambda : lambda * std::pow(2.0, -norm);
        p.lambda2.ref(s) = tail ? lambda : lambda * std::pow(2.0, -norm);
    };
    p.a1.for_each_representative([&](State s, const double&) { fill(s); });
    Model m;
    m.kind = "aloha";
    m.kernel = aloha_kernel(p);
    m.aloha = std::move(p);
    m.hash = content_hash(model_to_json(m));
    return m;
}

/// Asymmetric stability-study network (thresholds 2,2): fixed transmit
/// weights 0.8 and 0.6, geometric arrival profiles c1^n1 and 0.5^n2 below
/// the thresholds, and free tail arrival rates (lam1_tail, lam2_tail).
inline Model make_stability_aloha(double c1, double lam1_tail, double lam2_tail) {
    RegionSplit split(2, 2);
    AlohaParams p(split);
    auto fill = [&](State s) {
        const double norm = s.n1 + s.n2;
        bool tail = s.n1 >= 2 && s.n2 >= 2;
        p.a1.ref(s) = norm > 0 ? 0.8 * s.n1 / norm : 0.0;
        p.a2.ref(s) = norm > 0 ? 0.6 * s.n2 / norm : 0.0;
        p.lambda1.ref(s) = tail ? lam1_tail : std::pow(c1, s.n1);
        p.lambda2.ref(s) = tail ? lam2_tail : std::pow(0.5, s.n2);
    };
    p.a1.for_each_representative([&](State s, const double&) { fill(s); });
    Model m;
    m.kind = "aloha";
    m.kernel = aloha_kernel(p);
    m.aloha = std::move(p);
    m.hash = content_hash(model_to_json(m));
    return m;
}

}  // namespace qpwalk
