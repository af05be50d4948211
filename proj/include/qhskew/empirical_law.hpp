#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qhskew {

/// A seeded Monte Carlo sample set: values of sum / n^exponent.
struct EmpiricalLaw {
    std::vector<double> values;
    std::uint64_t n = 0;
    double exponent = 0.75;
    std::uint64_t seed = 0;

    void validate() const {
        if (values.empty()) throw std::invalid_argument("empirical law must be non-empty");
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("empirical law contains non-finite values");
    }
};

inline nlohmann::json to_json(const EmpiricalLaw& law) {
    return {{"n", law.n}, {"exponent", law.exponent}, {"seed", law.seed}, {"values", law.values}};
}

inline EmpiricalLaw law_from_json(const nlohmann::json& j) {
    EmpiricalLaw law;
    law.n = j.at("n").get<std::uint64_t>();
    law.exponent = j.at("exponent").get<double>();
    law.seed = j.at("seed").get<std::uint64_t>();
    law.values = j.at("values").get<std::vector<double>>();
    law.validate();
    return law;
}

/// Writes values as raw little-endian float64 to `path` and the metadata
/// (without values) to `path + ".json"`.
inline void save_raw(const EmpiricalLaw& law, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    for (double v : law.values) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        char buf[8];
        std::memcpy(buf, &bits, 8);
        os.write(buf, 8);
    }
    nlohmann::json side = {{"n", law.n},
                           {"exponent", law.exponent},
                           {"seed", law.seed},
                           {"count", law.values.size()},
                           {"encoding", "float64-le"},
                           {"data", path}};
    std::ofstream js(path + ".json");
    if (!js) throw std::runtime_error("cannot write " + path + ".json");
    js << side.dump(2) << '\n';
}

inline EmpiricalLaw load_raw(const std::string& path) {
    std::ifstream js(path + ".json");
    if (!js) throw std::runtime_error("cannot read " + path + ".json");
    const auto side = nlohmann::json::parse(js);
    EmpiricalLaw law;
    law.n = side.at("n").get<std::uint64_t>();
    law.exponent = side.at("exponent").get<double>();
    law.seed = side.at("seed").get<std::uint64_t>();
    const auto count = side.at("count").get<std::size_t>();
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    law.values.resize(count);
    for (auto& v : law.values) {
        char buf[8];
        if (!is.read(buf, 8)) throw std::runtime_error("truncated raw law file " + path);
        std::uint64_t bits;
        std::memcpy(&bits, buf, 8);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        v = std::bit_cast<double>(bits);
    }
    return law;
}

}  // namespace qhskew
